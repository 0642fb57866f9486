"""Provenance chains for deep-web data.

Thin wrapper over the native core. Documents are plain dicts/lists with
str keys and 64-bit ints; `PropsError.code` carries the error name
(e.g. "Exists", "UnknownAttack", "DecryptFailure").
"""

from ._props import (
    PropsError,
    canonical_decode,
    canonical_encode,
    digest_of,
    execute_pinned,
    expected_reasons,
    fixed_from_decimal,
    fixed_to_decimal,
    run_scenario,
    sha256_hex,
    verify_chain,
)

__all__ = [
    "PropsError",
    "canonical_decode",
    "canonical_encode",
    "digest_of",
    "execute_pinned",
    "expected_reasons",
    "fixed_from_decimal",
    "fixed_to_decimal",
    "run_scenario",
    "sha256_hex",
    "verify_chain",
]
