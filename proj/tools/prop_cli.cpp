// prop-cli: key provisioning, scenario runs, attack campaigns, artifact
// inspection, and the helper servers used by --multiprocess.

#include <sys/prctl.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "props/attest/attestor.hpp"
#include "props/core/error.hpp"
#include "props/scenario/keys.hpp"
#include "props/scenario/process.hpp"
#include "props/scenario/scenario.hpp"

namespace fs = std::filesystem;
using namespace props;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;  // verification failed, or an attack slipped through
constexpr int kExitError = 2;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path default_config(const std::string& scenario) { return fs::path("configs") / (scenario + ".json"); }

void print_report(const VerificationReport& rep) {
    for (const auto& c : rep.checks)
        std::cout << "  " << (c.passed ? "ok   " : "FAIL ") << c.check_id << (c.passed ? "" : "  " + c.reason) << "\n";
    std::cout << "verdict: " << (rep.passed() ? "pass" : "fail") << "\n";
}

int cmd_keygen_main(const std::string& role, const std::string& name, const fs::path& dir) {
    const KeyFiles kf = cmd_keygen(dir, role_from_string(role), name);
    std::cout << pretty_json(canonical_decode(slurp(kf.identity))) << "\n";
    std::cerr << "wrote " << kf.secret.string() << " and " << kf.identity.string() << "\n";
    return kExitOk;
}

int cmd_run_main(const std::string& scenario, const fs::path& config_path, const RunOptions& base,
                 const std::optional<fs::path>& out) {
    const ScenarioConfig cfg = ScenarioConfig::load(config_path);
    if (cfg.scenario != scenario)
        throw Error(Errc::ConfigError, config_path.string() + " describes scenario '" + cfg.scenario + "'");
    RunOptions o = base;
    o.artifacts_dir = out.value_or(fs::path("artifacts") / scenario);
    const ScenarioResult r = run_scenario(cfg, o);
    std::cout << "scenario " << scenario << " (" << o.delivery.value_or(cfg.delivery) << ", "
              << (o.multiprocess ? "multiprocess" : "in-process") << ")\n";
    if (r.chain && r.chain->inference_proof)
        std::cout << "inference proof: " << to_string(r.chain->inference_proof->mode) << ", "
                  << r.chain->inference_proof->signatures.size() << " signature(s)\n";
    print_report(r.report);
    std::cout << "artifacts: " << o.artifacts_dir->string() << "\n";
    std::cout << "elapsed: " << r.elapsed_seconds << " s\n";
    return r.passed() ? kExitOk : kExitFailed;
}

int cmd_attack_main(const std::string& attack, const fs::path& config_path, RunOptions o) {
    o.attack = AttackPlan::parse(attack);
    const ScenarioConfig cfg = ScenarioConfig::load(config_path);
    const std::vector<std::string> want = expected_reasons(cfg, o.attack);
    const ScenarioResult r = run_scenario(cfg, o);
    print_report(r.report);
    std::string w;
    for (const auto& s : want) w += (w.empty() ? "" : ",") + s;
    std::cout << "attack " << o.attack.name() << ": expected " << (want.empty() ? "tolerated" : w) << "\n";
    const bool caught = attack_caught(cfg, o.attack, r);
    std::cout << (caught ? "caught as expected" : "NOT caught as expected") << "\n";
    return caught ? kExitOk : kExitFailed;
}

const char* mark(bool ok) { return ok ? "consistent" : "INCONSISTENT"; }

void inspect_chain(const Doc& doc) {
    const PropChain c = PropChain::from_doc(doc);
    std::cout << pretty_json(doc) << "\n\n";
    std::cout << "envelope_digest        " << mark(c.compute_envelope() == c.envelope_digest) << "\n";
    for (std::size_t i = 0; i < c.filter_specs.size(); ++i)
        std::cout << "filter_specs[" << i << "] digest  " << mark(c.filter_specs[i].digest_consistent()) << "  ("
                  << c.filter_specs[i].filter_id << ")\n";
    Digest cur = c.attestation.content_digest;
    bool linked = true;
    for (const auto& p : c.filter_proofs) {
        linked = linked && p.input_digest == cur;
        cur = p.output_digest;
    }
    if (c.inference_proof) linked = linked && c.inference_proof->input_digest == cur;
    std::cout << "digest linkage         " << mark(linked) << "\n";
    bool payload_ok = false;
    try {
        payload_ok = c.payload.digest() == c.terminal_digest();
        if (c.payload.record) payload_ok = payload_ok && c.payload.record->digest() == c.payload.digest();
        if (c.payload.output) payload_ok = payload_ok && c.payload.output->digest() == c.payload.digest();
    } catch (const Error&) {
    }
    std::cout << "payload digest         " << mark(payload_ok) << "\n";
    std::cout << "attestation signature  "
              << mark(verify_attestation(c.attestation, {c.attestation.attestor_identity}) == Reason::Ok) << "\n";
}

void inspect_report(const Doc& doc) {
    const VerificationReport rep = VerificationReport::from_doc(doc);
    std::cout << "report verified_at " << rep.verified_at << "\n";
    print_report(rep);
}

int cmd_inspect_main(const fs::path& path) {
    const Doc doc = canonical_decode(slurp(path));
    const Doc* schema = doc.find("schema");
    const std::string s = schema && schema->is_string() ? schema->as_string() : "";
    if (s == kChainSchema) inspect_chain(doc);
    else if (s == kReportSchema) inspect_report(doc);
    else std::cout << pretty_json(doc) << "\n";
    return kExitOk;
}

/// Common tail of the serve-* commands: publish the port, then park until
/// SIGTERM/SIGINT. The caller has already blocked those signals.
void serve_until_terminated(const fs::path& port_file, const net::Endpoint& ep) {
    write_port_file(port_file, ep);
    wait_for_termination();
}

void prepare_helper() {
    block_termination_signals();
    // Helpers never outlive the orchestrator.
    ::prctl(PR_SET_PDEATHSIG, SIGTERM);
}

int cmd_serve_source(const fs::path& store_path, const fs::path& port_file, const std::optional<fs::path>& key,
                     std::uint16_t port) {
    prepare_helper();
    const Doc doc = canonical_decode(slurp(store_path));
    ObjectReader r(doc, "store file");
    net::SourceOptions so;
    so.source_id = r.string("source_id");
    so.store = net::RecordStore::from_doc(r.get("store"));
    r.finish();
    so.listen.port = port;
    if (key) so.signing_key = read_secret_key(*key);
    net::SourceServer server(std::move(so));
    serve_until_terminated(port_file, server.endpoint());
    return kExitOk;
}

int cmd_serve_attestor(const fs::path& key, const fs::path& port_file, std::uint16_t port) {
    prepare_helper();
    AttestorServer server(std::make_shared<Attestor>(read_secret_key(key)), net::Endpoint{"127.0.0.1", port});
    serve_until_terminated(port_file, server.endpoint());
    return kExitOk;
}

PinnedModel read_model(const fs::path& path) {
    const Doc doc = canonical_decode(slurp(path));
    ObjectReader r(doc, "model file");
    PinnedModel m{EnvDescriptor::from_doc(r.get("env")), ModelWeights::from_doc(r.get("weights"))};
    r.finish();
    return m;
}

int cmd_serve_node(const fs::path& key, const fs::path& model, const std::string& behavior, std::size_t index,
                   const fs::path& port_file, std::uint16_t port) {
    prepare_helper();
    auto node = std::make_shared<const CommitteeNode>(read_secret_key(key), read_model(model),
                                                      node_behavior_from_string(behavior), index);
    NodeServer server(node, net::Endpoint{"127.0.0.1", port});
    serve_until_terminated(port_file, server.endpoint());
    return kExitOk;
}

/// Runs execute_pinned over {"cases":[{"model":{env,weights},"record":...}]}
/// and prints {"results":[...]} canonically, for cross-process comparison.
int cmd_exec_batch(const fs::path& input) {
    const Doc doc = canonical_decode(slurp(input));
    Array results;
    for (const Doc& c : doc.at("cases").as_array()) {
        const PinnedModel m{EnvDescriptor::from_doc(c.at("model").at("env")),
                            ModelWeights::from_doc(c.at("model").at("weights"))};
        const DataRecord rec = DataRecord::from_doc(c.at("record"));
        try {
            const ModelSpec spec = pin_model(m.env, m.weights);
            const InferenceOutput y = execute_pinned(spec, m, rec);
            results.push_back(Doc{{"output", y.to_doc()}, {"pinned_digest", spec.pinned_digest.hex()}});
        } catch (const Error& e) {
            results.push_back(Doc{{"error", std::string(to_string(e.code()))}});
        }
    }
    std::cout << canonical_encode(Doc{{"results", std::move(results)}}) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Protected-pipeline harness: provenance chains from source to consumer"};
    app.require_subcommand(1);

    std::string role, name;
    fs::path key_dir = "keys";
    auto* keygen = app.add_subcommand("keygen", "Generate a signing key and identity file");
    keygen->add_option("--role", role, "source|attestor|executor|committee-node|recipient")->required();
    keygen->add_option("--name", name, "Key name (file stem)")->required();
    keygen->add_option("--dir", key_dir, "Output directory")->capture_default_str();

    std::string scenario;
    std::optional<fs::path> config_path, out_dir;
    std::optional<std::string> delivery;
    bool multiprocess = false;
    auto* run = app.add_subcommand("run-scenario", "Run a bundled scenario end to end and verify it");
    run->add_option("scenario", scenario, "train-ehr | infer-loan")->required();
    run->add_option("--config", config_path, "Scenario config (default configs/<scenario>.json)");
    run->add_option("--delivery", delivery, "plaintext | sealed (overrides the config)")
        ->check(CLI::IsMember({"plaintext", "sealed"}));
    run->add_flag("--multiprocess", multiprocess, "Run source, attestor and committee nodes as child processes");
    run->add_option("--out", out_dir, "Artifacts directory (default artifacts/<scenario>)");

    std::string attack;
    auto* atk = app.add_subcommand("attack", "Run a scenario under a named attack; exit 0 iff it is caught");
    atk->add_option("attack", attack, "tamper-data | swap-filter | swap-model | forge-sig | stale | byzantine-<k>")
        ->required();
    atk->add_option("--config", config_path, "Scenario config")->required();
    atk->add_option("--delivery", delivery, "plaintext | sealed")->check(CLI::IsMember({"plaintext", "sealed"}));
    atk->add_flag("--multiprocess", multiprocess, "Use child processes");
    atk->add_option("--out", out_dir, "Artifacts directory");

    fs::path artifact;
    auto* inspect = app.add_subcommand("inspect", "Pretty-print a chain or report and recheck its digests");
    inspect->add_option("artifact", artifact, "chain.json, chain.bin or report.json")->required();

    fs::path store, port_file, key_file, model_file, batch_file;
    std::optional<fs::path> opt_key;
    std::uint16_t port = 0;
    std::string behavior = "honest";
    std::size_t index = 0;
    auto* ssrc = app.add_subcommand("serve-source", "Serve a record store (helper for --multiprocess)");
    ssrc->add_option("--store", store)->required();
    ssrc->add_option("--port-file", port_file)->required();
    ssrc->add_option("--key", opt_key, "Source key; enables response signing");
    ssrc->add_option("--port", port);
    auto* satt = app.add_subcommand("serve-attestor", "Serve the attestor (helper for --multiprocess)");
    satt->add_option("--key", key_file)->required();
    satt->add_option("--port-file", port_file)->required();
    satt->add_option("--port", port);
    auto* snode = app.add_subcommand("serve-node", "Serve one committee node (helper for --multiprocess)");
    snode->add_option("--key", key_file)->required();
    snode->add_option("--model", model_file)->required();
    snode->add_option("--behavior", behavior)->check(CLI::IsMember({"honest", "wrong-output", "crash", "equivocate"}));
    snode->add_option("--index", index);
    snode->add_option("--port-file", port_file)->required();
    snode->add_option("--port", port);
    auto* batch = app.add_subcommand("exec-batch", "Execute pinned models over a batch of inputs");
    batch->add_option("input", batch_file)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        RunOptions ro;
        ro.delivery = delivery;
        ro.multiprocess = multiprocess;
        ro.helper_exe = self_executable();
        ro.artifacts_dir = out_dir;
        if (*keygen) return cmd_keygen_main(role, name, key_dir);
        if (*run) return cmd_run_main(scenario, config_path.value_or(default_config(scenario)), ro, out_dir);
        if (*atk) return cmd_attack_main(attack, *config_path, ro);
        if (*inspect) return cmd_inspect_main(artifact);
        if (*ssrc) return cmd_serve_source(store, port_file, opt_key, port);
        if (*satt) return cmd_serve_attestor(key_file, port_file, port);
        if (*snode) return cmd_serve_node(key_file, model_file, behavior, index, port_file, port);
        if (*batch) return cmd_exec_batch(batch_file);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
