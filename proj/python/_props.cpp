#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "props/core/error.hpp"
#include "props/pinned/fixed.hpp"
#include "props/scenario/scenario.hpp"

namespace py = pybind11;
using namespace props;

namespace {

Doc to_doc(const py::handle& o) {
    if (o.is_none()) return Doc(nullptr);
    if (py::isinstance<py::bool_>(o)) return Doc(o.cast<bool>());
    if (py::isinstance<py::int_>(o)) {
        try {
            return Doc(o.cast<std::int64_t>());
        } catch (const py::cast_error&) {
            throw Error(Errc::NonCanonicalValue, "integer outside the signed 64-bit range");
        }
    }
    if (py::isinstance<py::str>(o)) return Doc(o.cast<std::string>());
    if (py::isinstance<py::dict>(o)) {
        Doc d = Doc::object();
        for (const auto& [k, v] : o.cast<py::dict>()) {
            if (!py::isinstance<py::str>(k)) throw Error(Errc::NonCanonicalValue, "object keys must be strings");
            d.set(k.cast<std::string>(), to_doc(v));
        }
        return d;
    }
    if (py::isinstance<py::list>(o) || py::isinstance<py::tuple>(o)) {
        Doc a = Doc::array();
        for (const auto& v : o) a.push_back(to_doc(v));
        return a;
    }
    throw Error(Errc::NonCanonicalValue, "unsupported type " + py::str(o.get_type()).cast<std::string>());
}

py::object to_py(const Doc& d) {
    if (d.is_null()) return py::none();
    if (d.is_bool()) return py::bool_(d.as_bool());
    if (d.is_int()) return py::int_(d.as_int());
    if (d.is_string()) return py::str(d.as_string());
    if (d.is_array()) {
        py::list l;
        for (const auto& x : d.as_array()) l.append(to_py(x));
        return std::move(l);
    }
    py::dict m;
    for (const auto& [k, v] : d.as_object()) m[py::str(k)] = to_py(v);
    return std::move(m);
}

py::dict run(const std::filesystem::path& config, std::optional<std::string> delivery, std::optional<std::string> attack,
             std::optional<std::filesystem::path> artifacts_dir, bool multiprocess,
             std::optional<std::filesystem::path> helper_exe) {
    const ScenarioConfig cfg = ScenarioConfig::load(config);
    RunOptions o;
    o.delivery = std::move(delivery);
    o.artifacts_dir = std::move(artifacts_dir);
    o.multiprocess = multiprocess;
    // The running executable is the interpreter, so helpers must be named.
    if (multiprocess && !helper_exe) throw Error(Errc::ConfigError, "multiprocess runs need helper_exe (prop-cli)");
    o.helper_exe = std::move(helper_exe);
    if (attack) o.attack = AttackPlan::parse(*attack);
    ScenarioResult r;
    {
        py::gil_scoped_release release;
        r = run_scenario(cfg, o);
    }
    py::dict out;
    out["passed"] = r.passed();
    out["report"] = to_py(r.report.to_doc());
    out["policy"] = to_py(r.policy.to_doc());
    out["chain"] = r.chain ? to_py(r.chain->to_doc()) : py::none();
    out["chain_bytes"] = r.chain ? py::object(py::bytes(r.chain->canonical())) : py::none();
    out["verdict"] = r.verdict ? to_py(r.verdict->to_doc()) : py::none();
    out["elapsed_seconds"] = r.elapsed_seconds;
    if (attack) out["caught"] = attack_caught(cfg, o.attack, r);
    return out;
}

}  // namespace

PYBIND11_MODULE(_props, m) {
    m.doc() = "Native core: canonical encoding, pinned execution, scenario runs and chain verification";

    // Module-lifetime type; the extra reference is never released.
    static PyObject* exc_type = PyErr_NewException("props._props.PropsError", PyExc_RuntimeError, nullptr);
    m.add_object("PropsError", py::handle(exc_type));
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::handle(exc_type)(e.what());
            err.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(exc_type, err.ptr());
        }
    });

    m.def("canonical_encode", [](const py::object& o) { return canonical_encode(to_doc(o)); }, py::arg("value"));
    m.def(
        "canonical_decode",
        [](std::string_view text, bool strict) { return to_py(strict ? canonical_decode_strict(text) : canonical_decode(text)); },
        py::arg("text"), py::arg("strict") = false);
    m.def("sha256_hex", [](const py::bytes& b) { return sha256(std::string_view(b)).hex(); }, py::arg("data"));
    m.def("digest_of", [](const py::object& o) { return digest_of(to_doc(o)).hex(); }, py::arg("value"),
          "sha256 of the canonical encoding, as lowercase hex.");

    m.def("fixed_from_decimal", [](std::string_view s) { return Fixed::from_decimal(s).raw; }, py::arg("text"),
          "Exact Q32.32 raw value of a decimal literal.");
    m.def("fixed_to_decimal", [](std::int64_t raw) { return Fixed::from_raw(raw).to_decimal(); }, py::arg("raw"));

    m.def(
        "execute_pinned",
        [](const py::dict& model, const py::dict& record, bool strict) {
            const PinnedModel pm{EnvDescriptor::from_doc(to_doc(model["env"])),
                                 ModelWeights::from_doc(to_doc(model["weights"]))};
            const ModelSpec spec = pin_model(pm.env, pm.weights);
            const InferenceOutput y = execute_pinned(spec, pm, DataRecord::from_doc(to_doc(record)), ExecOptions{strict});
            py::dict out = to_py(y.to_doc());
            out["pinned_digest"] = spec.pinned_digest.hex();
            return out;
        },
        py::arg("model"), py::arg("record"), py::arg("strict") = false,
        "model = {'env': ..., 'weights': ...} in export form; record is a DataRecord document.");

    m.def("run_scenario", &run, py::arg("config"), py::arg("delivery") = py::none(), py::arg("attack") = py::none(),
          py::arg("artifacts_dir") = py::none(), py::arg("multiprocess") = false, py::arg("helper_exe") = py::none());

    m.def(
        "verify_chain",
        [](const py::bytes& chain, const py::dict& policy, std::int64_t now) {
            const VerifierPolicy p = VerifierPolicy::from_doc(to_doc(policy));
            const std::string bytes = chain;
            VerificationReport rep;
            {
                py::gil_scoped_release release;
                rep = verify_chain_bytes(bytes, p, now);
            }
            return to_py(rep.to_doc());
        },
        py::arg("chain_bytes"), py::arg("policy"), py::arg("now"));

    m.def(
        "expected_reasons",
        [](const std::filesystem::path& config, std::string_view attack) {
            return expected_reasons(ScenarioConfig::load(config), AttackPlan::parse(attack));
        },
        py::arg("config"), py::arg("attack"));
}
