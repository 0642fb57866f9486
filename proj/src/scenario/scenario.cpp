#include "props/scenario/scenario.hpp"

#include <stdlib.h>

#include <algorithm>
#include <chrono>
#include <functional>
#include <set>
#include <fstream>
#include <sstream>

#include "props/attest/attestor.hpp"
#include "props/core/error.hpp"
#include "props/scenario/keys.hpp"
#include "props/scenario/process.hpp"

namespace props {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(Errc::ConfigError, what); }

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) config_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
}

ModelRequirement::Kind requirement_from(const Doc& d) {
    using Kind = ModelRequirement::Kind;
    std::string kind;
    if (d.is_string()) {
        kind = d.as_string();
    } else {
        ObjectReader r(d, "model_requirement");
        kind = r.string("kind");
        r.finish();
    }
    if (kind == "none") return Kind::None;
    if (kind == "exact") return Kind::Exact;
    if (kind == "service-ref") return Kind::ServiceRef;
    if (kind == "committee") return Kind::Committee;
    config_error("unknown model_requirement '" + kind + "'");
}

InferenceConfig inference_from(const Doc& d) {
    ObjectReader r(d, "inference");
    InferenceConfig c;
    const std::string& ex = r.string("executor");
    if (ex == "tee-sim") {
        c.executor = ExecutorKind::TeeSim;
    } else if (ex == "service") {
        c.executor = ExecutorKind::Service;
        c.service_id = r.string("service_id");
    } else if (ex == "committee") {
        c.executor = ExecutorKind::Committee;
        ObjectReader cr(r.get("committee"), "committee");
        const std::int64_t n = cr.int64("n");
        if (n < 1 || n > 64) config_error("committee size out of range");
        c.committee_n = static_cast<std::size_t>(n);
        c.quorum_t = static_cast<int>(cr.int64("quorum_t"));
        if (c.quorum_t < 1 || c.quorum_t > static_cast<int>(n)) config_error("quorum_t outside 1..n");
        if (const Doc* plan = cr.optional("fault_plan")) {
            for (const auto& [k, v] : plan->as_object()) {
                std::size_t idx = 0;
                try {
                    idx = std::stoul(k);
                } catch (const std::exception&) {
                    config_error("fault plan key '" + k + "' is not a node index");
                }
                if (idx >= c.committee_n) config_error("fault plan names node " + k);
                c.fault_plan[idx] = node_behavior_from_string(v.as_string());
            }
        }
        cr.finish();
    } else {
        config_error("unknown executor '" + ex + "'");
    }
    r.finish();
    return c;
}

std::map<std::size_t, NodeBehavior> effective_plan(const ScenarioConfig& cfg, const AttackPlan& attack) {
    std::map<std::size_t, NodeBehavior> plan = cfg.inference ? cfg.inference->fault_plan : decltype(plan){};
    if (attack.kind == Attack::Byzantine)
        for (std::size_t i = 0; i < attack.byzantine_k; ++i) plan[i] = NodeBehavior::WrongOutput;
    return plan;
}

/// Bumps every top-level integer of the record content, or injects a field
/// when there is none.
Bytes tamper_attested_reply(Bytes payload) {
    Doc msg = net::decode_message(payload);
    const Doc* type = msg.find("type");
    if (!type || !type->is_string() || type->as_string() != "attested") return payload;
    Doc& content = msg.as_object().at("record").as_object().at("content");
    bool changed = false;
    if (content.is_object())
        for (auto& [k, v] : content.as_object())
            if (v.is_int()) {
                v = Doc(v.as_int() + 1000);
                changed = true;
            }
    if (!changed) {
        if (!content.is_object()) content = Doc::object();
        content.set("injected", "adversary");
    }
    return canonical_bytes(msg);
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "props-run-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw Error(Errc::IoError, "mkdtemp failed");
        path = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

/// Running helpers for one scenario, either threads in this process or
/// child processes talking over loopback TCP.
struct Components {
    std::unique_ptr<net::SourceServer> source;
    std::unique_ptr<AttestorServer> attestor;
    std::vector<std::unique_ptr<NodeServer>> nodes;
    std::vector<ChildProcess> children;
    net::Endpoint source_ep, attestor_ep;
    std::vector<net::Endpoint> node_eps;

    ~Components() {
        nodes.clear();
        attestor.reset();
        source.reset();
        for (auto& c : children) c.stop();
    }
};

}  // namespace

ScenarioConfig ScenarioConfig::from_doc(const Doc& doc) {
    try {
        ObjectReader r(doc, "scenario config");
        ScenarioConfig c;
        if (r.string("schema") != kScenarioSchema) config_error("unsupported schema");
        c.scenario = r.string("scenario");
        c.delivery = r.string("delivery");
        if (c.delivery != "plaintext" && c.delivery != "sealed") config_error("delivery must be plaintext or sealed");

        ObjectReader sr(r.get("source"), "source");
        c.source_id = sr.string("source_id");
        c.source_signing = sr.boolean("signing_enabled");
        c.store = net::RecordStore::from_doc(Doc{{"accounts", sr.get("accounts")}, {"records", sr.get("records")}});
        sr.finish();
        if (c.source_id.empty()) config_error("empty source_id");

        ObjectReader fr(r.get("fetch"), "fetch");
        c.fetch.subject_id = fr.string("subject_id");
        c.fetch.credential = fr.string("credential");
        c.fetch.record_type = fr.string("record_type");
        fr.finish();

        std::set<std::string> ids;
        for (const Doc& f : r.array("filters")) {
            c.filters.push_back(FilterSpec::from_config(f));
            if (!ids.insert(c.filters.back().filter_id).second)
                config_error("duplicate filter_id " + c.filters.back().filter_id);
        }
        if (const Doc* m = r.optional("model")) c.model = PinnedModel::from_config(*m);
        if (const Doc* inf = r.optional("inference")) c.inference = inference_from(*inf);

        ObjectReader pr(r.get("policy"), "policy");
        c.consumer = pr.string("consumer");
        for (const Doc& w : pr.array("whitelist")) c.whitelist.push_back(w.as_string());
        c.required_record_type = pr.string("required_record_type");
        c.max_age_seconds = pr.int64("max_age_seconds");
        c.requirement = requirement_from(pr.get("model_requirement"));
        c.delivery_requirement = delivery_from_string(pr.string("delivery"));
        pr.finish();
        r.finish();

        for (const auto& w : c.whitelist)
            if (!ids.count(w)) config_error("whitelisted filter '" + w + "' is not defined");
        if (c.model) pin_model(c.model->env, c.model->weights);
        using Kind = ModelRequirement::Kind;
        if (c.model && !c.inference) config_error("model without an inference section");
        if (c.inference && !c.model) config_error("inference section without a model");
        if (c.requirement != Kind::None) {
            if (!c.inference) config_error("model requirement without a model");
            const ExecutorKind want = c.requirement == Kind::Exact        ? ExecutorKind::TeeSim
                                      : c.requirement == Kind::ServiceRef ? ExecutorKind::Service
                                                                          : ExecutorKind::Committee;
            if (c.inference->executor != want) config_error("executor does not match the model requirement");
        }
        if (c.max_age_seconds < 0) config_error("negative max_age_seconds");
        return c;
    } catch (const Error& e) {
        if (e.code() == Errc::ConfigError) throw;
        throw Error(Errc::ConfigError, e.what());
    }
}

ScenarioConfig ScenarioConfig::load(const fs::path& path) {
    Doc d;
    try {
        d = canonical_decode(slurp(path));
    } catch (const Error& e) {
        if (e.code() == Errc::ConfigError) throw;
        throw Error(Errc::ConfigError, path.string() + ": " + e.what());
    }
    return from_doc(d);
}

std::set<Digest> ScenarioConfig::whitelist_digests() const {
    std::set<Digest> out;
    for (const auto& w : whitelist)
        for (const auto& f : filters)
            if (f.filter_id == w) out.insert(f.spec_digest);
    return out;
}

std::optional<ModelSpec> ScenarioConfig::model_spec() const {
    if (!model) return std::nullopt;
    if (inference && inference->executor == ExecutorKind::Service) return ModelSpec::service_ref(inference->service_id);
    return pin_model(model->env, model->weights);
}

AttackPlan AttackPlan::parse(std::string_view name) {
    if (name == "tamper-data") return {Attack::TamperData, 0};
    if (name == "swap-filter") return {Attack::SwapFilter, 0};
    if (name == "swap-model") return {Attack::SwapModel, 0};
    if (name == "forge-sig") return {Attack::ForgeSig, 0};
    if (name == "stale") return {Attack::Stale, 0};
    constexpr std::string_view prefix = "byzantine-";
    if (name.substr(0, prefix.size()) == prefix) {
        std::string_view k = name.substr(prefix.size());
        if (!k.empty() && k.size() <= 3 && std::all_of(k.begin(), k.end(), [](char c) { return c >= '0' && c <= '9'; }))
            return {Attack::Byzantine, static_cast<std::size_t>(std::stoul(std::string(k)))};
    }
    throw Error(Errc::UnknownAttack, "unknown attack '" + std::string(name) + "'");
}

std::string AttackPlan::name() const {
    switch (kind) {
        case Attack::None: return "none";
        case Attack::TamperData: return "tamper-data";
        case Attack::SwapFilter: return "swap-filter";
        case Attack::SwapModel: return "swap-model";
        case Attack::ForgeSig: return "forge-sig";
        case Attack::Stale: return "stale";
        case Attack::Byzantine: return "byzantine-" + std::to_string(byzantine_k);
    }
    return "?";
}

std::vector<std::string> expected_reasons(const ScenarioConfig& cfg, const AttackPlan& attack) {
    switch (attack.kind) {
        case Attack::None: return {};
        case Attack::TamperData:
            // Without a downstream proof the only link left is the payload.
            return {(cfg.filters.empty() && !cfg.model) ? "PayloadLinkageBroken" : "LinkageBroken"};
        case Attack::SwapFilter: return {"FilterNotWhitelisted"};
        case Attack::SwapModel:
            if (!cfg.model || cfg.requirement == ModelRequirement::Kind::None)
                config_error("swap-model needs a scenario with a pinned model requirement");
            return {"PinMismatch"};
        case Attack::ForgeSig: return {"BadSignature"};
        case Attack::Stale: return {"Stale"};
        case Attack::Byzantine: {
            if (!cfg.inference || cfg.inference->executor != ExecutorKind::Committee)
                config_error("byzantine-k needs a committee scenario");
            if (attack.byzantine_k > cfg.inference->committee_n) config_error("byzantine-k exceeds committee size");
            std::size_t faulty = 0;
            for (const auto& [i, b] : effective_plan(cfg, attack)) faulty += b != NodeBehavior::Honest;
            const std::size_t tolerance = cfg.inference->committee_n - static_cast<std::size_t>(cfg.inference->quorum_t);
            if (faulty > tolerance) return {"ConsensusFailure"};
            return {};
        }
    }
    return {};
}

bool attack_caught(const ScenarioConfig& cfg, const AttackPlan& attack, const ScenarioResult& result) {
    const std::vector<std::string> want = expected_reasons(cfg, attack);
    if (!want.empty()) return result.report.failure_reasons() == want;
    if (!result.passed()) return false;
    if (!result.honest_output) return true;
    const Payload& p = result.chain->payload;
    return p.digest() == result.honest_output->digest();
}

std::vector<std::string> string_leaves(const Doc& content, std::size_t min_len) {
    std::vector<std::string> out;
    std::function<void(const Doc&)> walk = [&](const Doc& d) {
        if (d.is_string() && d.as_string().size() >= min_len) out.push_back(d.as_string());
        if (d.is_array())
            for (const Doc& x : d.as_array()) walk(x);
        if (d.is_object())
            for (const auto& [k, v] : d.as_object()) walk(v);
    };
    walk(content);
    return out;
}

std::vector<std::string> scan_for_plaintext(const fs::path& dir, const std::vector<std::string>& needles,
                                            const std::vector<fs::path>& exclude) {
    std::vector<std::string> hits;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path p = fs::weakly_canonical(entry.path());
        bool skip = false;
        for (const auto& ex : exclude) {
            const fs::path e = fs::weakly_canonical(ex);
            auto [ei, pi] = std::mismatch(e.begin(), e.end(), p.begin(), p.end());
            if (ei == e.end()) skip = true;
        }
        if (skip) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string body = ss.str();
        for (const auto& n : needles)
            if (body.find(n) != std::string::npos) hits.push_back(entry.path().string() + ": " + n);
    }
    return hits;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const AttackPlan& attack = opts.attack;
    expected_reasons(cfg, attack);  // rejects attacks the config cannot express
    const std::string delivery = opts.delivery.value_or(cfg.delivery);
    if (delivery != "plaintext" && delivery != "sealed") config_error("delivery must be plaintext or sealed");
    const bool sealed = delivery == "sealed";

    ScenarioResult result;
    if (auto it = cfg.store.records.find({cfg.fetch.subject_id, cfg.fetch.record_type}); it != cfg.store.records.end())
        result.original_content = it->second.content;

    // Keys. Secrets only ever land in keys/ (mode 0600) and the private run dir.
    const SigningKey attestor_key = keygen(Role::Attestor);
    const SigningKey recipient_key = keygen(Role::Recipient);
    std::optional<SigningKey> source_key, executor_key;
    if (cfg.source_signing) source_key = keygen(Role::Source);
    const ExecutorKind executor = cfg.inference ? cfg.inference->executor : ExecutorKind::TeeSim;
    if (cfg.model && executor != ExecutorKind::Committee) executor_key = keygen(Role::Executor);
    std::vector<SigningKey> node_keys;
    CommitteeConfig committee;
    if (cfg.model && executor == ExecutorKind::Committee) {
        committee.quorum_t = cfg.inference->quorum_t;
        committee.fault_plan = effective_plan(cfg, attack);
        for (std::size_t i = 0; i < cfg.inference->committee_n; ++i) {
            node_keys.push_back(keygen(Role::CommitteeNode));
            committee.nodes.push_back(node_keys.back().identity());
        }
        committee.validate();
    }

    std::optional<fs::path> art = opts.artifacts_dir;
    if (art) {
        std::error_code ec;
        for (const char* sub : {"keys", "transcripts", "recipient"}) fs::remove_all(*art / sub, ec);
        for (const char* f : {"chain.json", "chain.bin", "report.json", "policy.json", "verdict.json", "run.json"})
            fs::remove(*art / f, ec);
        fs::create_directories(*art / "keys");
        write_key(*art / "keys", "attestor", attestor_key);
        write_key(*art / "keys", "recipient", recipient_key);
        if (source_key) write_key(*art / "keys", "source", *source_key);
        if (executor_key) write_key(*art / "keys", "executor", *executor_key);
        for (std::size_t i = 0; i < node_keys.size(); ++i)
            write_key(*art / "keys", "node-" + std::to_string(i), node_keys[i]);
    }

    // What the executor actually runs; swap-model substitutes M.
    std::optional<PinnedModel> exec_model = cfg.model;
    if (exec_model && attack.kind == Attack::SwapModel) exec_model->weights.bias.raw += Fixed::kOne;
    const std::optional<ModelSpec> honest_spec = cfg.model_spec();

    // Start components.
    Components comp;
    std::optional<TempDir> run_dir;
    if (opts.multiprocess) {
        run_dir.emplace();
        const fs::path exe = opts.helper_exe.value_or(self_executable());
        const fs::path rd = run_dir->path;
        write_text(rd / "store.json", canonical_encode(Doc{{"source_id", cfg.source_id}, {"store", cfg.store.to_doc()}}));
        std::vector<std::string> src_args{"serve-source", "--store", (rd / "store.json").string(), "--port-file",
                                          (rd / "source.port").string()};
        if (source_key) {
            write_key(rd, "source", *source_key);
            src_args.insert(src_args.end(), {"--key", (rd / "source.key").string()});
        }
        comp.children.emplace_back(exe, src_args);
        comp.source_ep = wait_for_port_file(rd / "source.port", comp.children.back());

        write_key(rd, "attestor", attestor_key);
        comp.children.emplace_back(exe, std::vector<std::string>{"serve-attestor", "--key", (rd / "attestor.key").string(),
                                                                 "--port-file", (rd / "attestor.port").string()});
        comp.attestor_ep = wait_for_port_file(rd / "attestor.port", comp.children.back());

        if (!node_keys.empty()) {
            write_text(rd / "model.json",
                       canonical_encode(Doc{{"env", exec_model->env.to_doc()}, {"weights", exec_model->weights.to_doc()}}));
            for (std::size_t i = 0; i < node_keys.size(); ++i) {
                const std::string name = "node-" + std::to_string(i);
                write_key(rd, name, node_keys[i]);
                comp.children.emplace_back(
                    exe, std::vector<std::string>{"serve-node", "--key", (rd / (name + ".key")).string(), "--model",
                                                  (rd / "model.json").string(), "--behavior",
                                                  std::string(to_string(committee.behavior_of(i))), "--index",
                                                  std::to_string(i), "--port-file", (rd / (name + ".port")).string()});
            }
            for (std::size_t i = 0; i < node_keys.size(); ++i)
                comp.node_eps.push_back(wait_for_port_file(rd / ("node-" + std::to_string(i) + ".port"),
                                                           comp.children[2 + i]));
        }
    } else {
        net::SourceOptions so;
        so.source_id = cfg.source_id;
        so.store = cfg.store;
        so.signing_key = source_key;
        comp.source = std::make_unique<net::SourceServer>(std::move(so));
        comp.source_ep = comp.source->endpoint();
        comp.attestor = std::make_unique<AttestorServer>(std::make_shared<Attestor>(attestor_key), net::Endpoint{});
        comp.attestor_ep = comp.attestor->endpoint();
    }

    // Client side.
    std::unique_ptr<FrameProxy> mitm;
    net::Endpoint attestor_for_client = comp.attestor_ep;
    if (attack.kind == Attack::TamperData) {
        mitm = std::make_unique<FrameProxy>(comp.attestor_ep, FrameProxy::rewrite_payload(tamper_attested_reply));
        attestor_for_client = mitm->endpoint();
    }
    AttestorClient client(attestor_for_client);
    const net::SourceDescriptor desc{cfg.source_id, comp.source_ep,
                                     source_key ? source_key->identity() : KeyIdentity{}, cfg.source_signing};

    PropChain chain;
    DataRecord current;
    Doc transcript;
    if (cfg.source_signing) {
        const net::FetchResponse resp = net::fetch(comp.source_ep, cfg.fetch);
        chain.attestation = wrap_source_signed(resp, source_key->identity());
        chain.request_opening = RequestOpening{cfg.fetch.record_type, sha256(cfg.fetch.credential)};
        current = resp.record;
        // No oracle in the path: the adversary edits the record after the
        // source signed it.
        if (attack.kind == Attack::TamperData)
            current = DataRecord::from_doc(
                net::decode_message(tamper_attested_reply(canonical_bytes(
                    Doc{{"record", current.to_doc()}, {"type", "attested"}}))).at("record"));
        transcript = Doc{{"mode", "source-signed"}, {"source_endpoint", comp.source_ep.str()}};
    } else {
        AttestedFetch af = client.fetch(desc, cfg.fetch);
        chain.attestation = af.attestation;
        chain.request_opening = af.opening;
        current = af.record;
        transcript = af.transcript_summary;
    }

    std::vector<FilterSpec> filters = cfg.filters;
    if (attack.kind == Attack::SwapFilter) {
        FilterSpec swapped = FilterSpec::make("identity@1", FilterKind::Identity, Doc::object());
        if (filters.empty())
            filters.push_back(swapped);
        else
            filters.front() = swapped;
    }
    for (const auto& spec : filters) {
        FilteredRecord fr = client.filter(spec, current);
        chain.filter_specs.push_back(spec);
        chain.filter_proofs.push_back(fr.proof);
        current = fr.record;
    }

    std::optional<InferenceOutput> y;
    if (cfg.model) {
        result.honest_output = run_model(*cfg.model, current);
        switch (executor) {
            case ExecutorKind::TeeSim: {
                const ModelSpec spec = pin_model(exec_model->env, exec_model->weights);
                y = execute_pinned(spec, *exec_model, current);
                chain.inference_proof = attest_inference(*executor_key, spec, *exec_model, current, *y);
                break;
            }
            case ExecutorKind::Service: {
                ServiceRegistry registry;
                registry.add(cfg.inference->service_id, executor_key->identity(), *cfg.model);
                std::string service = cfg.inference->service_id;
                if (attack.kind == Attack::SwapModel) {
                    service += "-shadow";
                    registry.add(service, executor_key->identity(), *exec_model);
                }
                y = registry.invoke(service, current);
                chain.inference_proof = attest_service_ref(*executor_key, registry, service, current, *y);
                break;
            }
            case ExecutorKind::Committee: {
                const ModelSpec spec = pin_model(exec_model->env, exec_model->weights);
                std::vector<NodeLink> links;
                if (opts.multiprocess) {
                    for (const auto& ep : comp.node_eps) links.push_back(tcp_link(ep));
                } else {
                    for (std::size_t i = 0; i < node_keys.size(); ++i)
                        links.push_back(in_process_link(std::make_shared<const CommitteeNode>(
                            node_keys[i], *exec_model, committee.behavior_of(i), i)));
                }
                CommitteeVerdict verdict = run_committee(committee, spec, current, links);
                result.verdict = verdict;
                if (verdict.ok()) {
                    y = verdict.agreed_output;
                    chain.inference_proof = verdict.proof;
                }
                break;
            }
        }
    }

    // Consumer policy, resolved against this run's keys.
    VerifierPolicy& policy = result.policy;
    policy.consumer = cfg.consumer;
    policy.trusted_attestors = {attestor_key.identity()};
    if (source_key) policy.trusted_attestors.push_back(source_key->identity());
    policy.trusted_sources = {cfg.source_id};
    policy.filter_whitelist = cfg.whitelist_digests();
    policy.required_record_type = cfg.required_record_type;
    policy.max_age_seconds = cfg.max_age_seconds;
    policy.delivery = cfg.delivery_requirement;
    if (sealed) policy.recipient = recipient_key.identity().fingerprint;
    policy.model.kind = cfg.requirement;
    switch (cfg.requirement) {
        case ModelRequirement::Kind::None: break;
        case ModelRequirement::Kind::Exact:
            policy.model.pinned_digest = honest_spec->pinned_digest;
            policy.model.trusted_executors = {executor_key->identity()};
            break;
        case ModelRequirement::Kind::ServiceRef:
            policy.model.service_id = cfg.inference->service_id;
            policy.model.trusted_executors = {executor_key->identity()};
            break;
        case ModelRequirement::Kind::Committee: {
            policy.model.pinned_digest = honest_spec->pinned_digest;
            CommitteeConfig membership = committee;
            membership.fault_plan.clear();
            policy.model.committee = membership;
            break;
        }
    }

    const bool consensus_failed = result.verdict && !result.verdict->ok();
    std::string chain_bytes;
    if (consensus_failed) {
        result.report.verified_at = unix_now();
        result.report.checks.push_back({"committee-consensus", false, std::string(to_string(Reason::ConsensusFailure))});
    } else {
        if (y) {
            chain.payload = sealed ? Payload::of(seal_doc(recipient_key.identity(), y->to_doc(), "output")) : Payload::of(*y);
        } else {
            chain.payload = sealed ? Payload::of(seal_payload(recipient_key.identity(), current)) : Payload::of(current);
        }
        if (attack.kind == Attack::ForgeSig) {
            const SigningKey rogue = keygen(Role::Attestor);
            chain.attestation.signature =
                rogue.sign(DomainTag::Attestation, as_bytes(canonical_encode(chain.attestation.body_doc())));
        }
        chain.created_at = unix_now();
        chain.seal_envelope();
        chain_bytes = chain.canonical();

        UnixSeconds now = unix_now();
        if (attack.kind == Attack::Stale) now = chain.attestation.issued_at + cfg.max_age_seconds + 1;
        result.report = verify_chain_bytes(chain_bytes, policy, now, sealed ? &recipient_key : nullptr);
        result.chain = chain;
    }
    result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (art) {
        if (result.chain) {
            write_text(*art / "chain.json", pretty_json(chain.to_doc()) + "\n");
            write_text(*art / "chain.bin", chain_bytes);
        }
        write_text(*art / "report.json", pretty_json(result.report.to_doc()) + "\n");
        write_text(*art / "policy.json", pretty_json(policy.to_doc()) + "\n");
        if (result.verdict) write_text(*art / "verdict.json", pretty_json(result.verdict->to_doc()) + "\n");
        write_text(*art / "transcripts" / "fetch.json", pretty_json(transcript) + "\n");
        if (sealed && result.chain) {
            // The recipient's view after decryption.
            Doc opened = open_doc(recipient_key, *result.chain->payload.sealed);
            write_text(*art / "recipient" / "opened.json", pretty_json(opened) + "\n");
        }
        write_text(*art / "run.json",
                   pretty_json(Doc{{"attack", attack.name()},
                                   {"delivery", delivery},
                                   {"elapsed_ms", static_cast<std::int64_t>(result.elapsed_seconds * 1000)},
                                   {"multiprocess", opts.multiprocess},
                                   {"passed", result.passed()},
                                   {"scenario", cfg.scenario}}) +
                       "\n");
    }
    return result;
}

}  // namespace props
