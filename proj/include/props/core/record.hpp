#pragma once

#include <cstdint>
#include <string>

#include "props/core/canonical.hpp"
#include "props/core/crypto.hpp"

namespace props {

using UnixSeconds = std::int64_t;

UnixSeconds unix_now();

/// A fetched deep-web datum (X) or a filtered derivative of one (X').
struct DataRecord {
    std::string source_id;
    std::string subject_id;
    Doc content;
    std::string content_type;
    UnixSeconds fetched_at = 0;

    Doc to_doc() const;
    /// Strict decode; throws Malformed on unknown members or fetched_at <= 0.
    static DataRecord from_doc(const Doc& doc);

    std::string canonical() const { return canonical_encode(to_doc()); }
    Digest digest() const { return digest_of(to_doc()); }

    friend bool operator==(const DataRecord&, const DataRecord&) = default;
};

}  // namespace props
