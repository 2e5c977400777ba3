#include "CLI11.hpp"
#include "json.hpp"

#include "pda/bench.hpp"
#include "pda/policy_file.hpp"
#include "pda/scenario.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spew(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

std::int64_t wall_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

pda::crypto::Seed seed_from_hex_arg(const std::string& hex, const char* flag) {
    try {
        return pda::parse_seed(pda::from_hex(hex));
    } catch (const std::exception&) {
        throw std::runtime_error(std::string(flag) + " must be 64 hex characters");
    }
}

pda::crypto::Seed subseed(const pda::crypto::Seed& base, const std::string& label) {
    pda::Encoder e;
    e.raw(pda::Bytes(base.begin(), base.end()));
    e.raw(pda::to_bytes(label));
    return pda::content_hash(e.take()).digest;
}

json diddoc_json(const pda::DidDocument& doc) {
    json j;
    j["did"] = doc.did;
    j["signing_public_key"] = pda::to_hex(doc.signing_public_key);
    j["agreement_public_key"] = pda::to_hex(doc.agreement_public_key);
    if (doc.attestation_public_key)
        j["attestation_public_key"] = pda::to_hex(*doc.attestation_public_key);
    j["self_signature"] = pda::to_hex(doc.self_signature);
    return j;
}

json result_payload_json(const pda::FunctionBundle& bundle, const pda::Bytes& payload) {
    json j;
    auto family = pda::code_spec_family(bundle.code_spec);
    if (!family) return j;
    if (*family == pda::kFamilyNer) {
        auto body = pda::canonical_decode<pda::NerResultBody>(payload);
        j["counts"] = body.counts;
    } else if (*family == pda::kFamilySentiment) {
        auto body = pda::canonical_decode<pda::SentimentResultBody>(payload);
        j["mean"] = body.mean;
        j["matched_tokens"] = body.matched_tokens;
    } else if (*family == pda::kFamilyStat) {
        auto body = pda::canonical_decode<pda::StatResultBody>(payload);
        j["value"] = body.value;
    } else if (*family == pda::kFamilyLinreg) {
        auto body = pda::canonical_decode<pda::LinregResultBody>(payload);
        j["slope"] = body.slope;
        j["intercept"] = body.intercept;
        j["n"] = body.n;
    }
    return j;
}

int cmd_keygen(const std::string& seed_hex, const std::string& out_prefix) {
    pda::crypto::Seed seed{};
    if (!seed_hex.empty()) {
        seed = seed_from_hex_arg(seed_hex, "--seed");
    } else {
        pda::Bytes random = pda::crypto::random_bytes(pda::crypto::kSeedBytes);
        seed = pda::parse_seed(random);
    }
    pda::AgentIdentity identity = pda::generate_identity(seed);
    spew(out_prefix + ".diddoc.json", diddoc_json(identity.make_document()).dump(2) + "\n");
    spew(out_prefix + ".seed", pda::to_hex(seed) + "\n");
    std::cout << identity.did << "\n";
    return 0;
}

int cmd_policy_show(const std::string& file, const std::string& format) {
    pda::AccessPolicy policy = pda::load_policy_file(file);
    if (format == "records") {
        for (const pda::Grant& g : policy.grants) {
            json j;
            j["kind"] = "grant";
            j["sp"] = g.sp_did;
            j["source"] = g.source_id;
            j["operation"] = pda::to_string(g.operation);
            j["granted_at_ms"] = g.granted_at_ms;
            if (g.expires_at_ms) j["expires_at_ms"] = *g.expires_at_ms;
            std::cout << j.dump() << "\n";
        }
        for (const auto& [source_id, cp] : policy.policies) {
            json j;
            j["kind"] = "policy";
            j["source"] = source_id;
            j["functions"] = cp.allowed_function_ids;
            j["max_records"] = cp.max_records;
            j["max_requests_per_day"] = cp.max_requests_per_day;
            j["require_enclave"] = cp.require_enclave;
            std::cout << j.dump() << "\n";
        }
    } else {
        std::cout << pda::policy_to_text(policy);
    }
    return 0;
}

int cmd_plug_list(const std::string& store_path, const std::string& format) {
    pda::RecordStore store = pda::RecordStore::open(store_path);
    for (const std::string& source_id : store.list_sources()) {
        const pda::DataSourceDescriptor& desc = store.descriptor(source_id);
        pda::DataSelector sel;
        sel.source_id = source_id;
        sel.schema_tag = desc.schema_tag;
        std::size_t count = store.query(sel).size();
        if (format == "records") {
            json j;
            j["source"] = source_id;
            j["schema"] = desc.schema_tag;
            j["records"] = count;
            std::cout << j.dump() << "\n";
        } else {
            std::cout << source_id << "  schema=" << desc.schema_tag << "  records=" << count
                      << "\n";
        }
    }
    return 0;
}

struct OneshotArgs {
    std::string store_path;
    std::string policy_path;
    std::string seed_hex;
    std::string requester_seed_hex;
    std::string function_spec;
    std::string source_id;
    std::string schema_tag;
    std::uint64_t max_records = 0;  // 0 = unlimited
    std::int64_t now_ms = -1;
    std::string format = "human";
};

int cmd_agent_oneshot(const OneshotArgs& args) {
    std::int64_t now = args.now_ms >= 0 ? args.now_ms : wall_ms();
    pda::crypto::Seed uc_seed = seed_from_hex_arg(args.seed_hex, "--seed");
    pda::crypto::Seed sp_seed = seed_from_hex_arg(args.requester_seed_hex, "--requester-seed");

    pda::AgentIdentity sp_identity = pda::generate_identity(sp_seed);
    pda::FunctionBundle bundle = pda::function_bundle_from_json(args.function_spec);
    if (bundle.provided_by.empty()) bundle.provided_by = sp_identity.did;

    pda::UserControllerAgent uc(pda::generate_identity(uc_seed),
                                pda::load_policy_file(args.policy_path),
                                pda::RecordStore::open(args.store_path),
                                subseed(uc_seed, "enclave"));
    uc.enclave().load_bundle(bundle);

    pda::SpControllerAgent sp(sp_identity);
    sp.register_bundle(bundle, pda::measure_bundle(bundle, pda::kEnclaveVersionTag));
    sp.learn_peer(uc.did_document());
    uc.learn_peer(sp.did_document());

    pda::DataSelector selector;
    selector.source_id = args.source_id;
    selector.schema_tag = args.schema_tag;
    if (args.max_records > 0) selector.max_records = args.max_records;

    auto [request_id, outbound] = sp.make_compute_request(
        uc.did(), bundle.function_id, pda::OperationKind::Compute, selector, pda::Bytes{}, now,
        60'000);
    pda::MessageEnvelope env = sp.pack_message(outbound.to, outbound.message);
    std::vector<pda::Outbound> replies = uc.handle_frame(pda::Frame{env}, now);
    for (const pda::Outbound& reply : replies)
        sp.handle_frame(pda::Frame{uc.pack_message(reply.to, reply.message)}, now);

    const pda::RequestOutcome& outcome = sp.outcome(request_id);
    json j;
    j["request_id"] = request_id.hex();
    j["status"] = pda::to_string(outcome.status);
    if (outcome.deny_reason) j["deny_reason"] = pda::to_string(*outcome.deny_reason);
    if (outcome.result) {
        j["record_count"] = outcome.result->record_count;
        j["result"] = result_payload_json(bundle, outcome.result->payload);
    }
    if (args.format == "records") {
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "request " << request_id.hex() << ": " << pda::to_string(outcome.status)
                  << "\n";
        if (outcome.deny_reason)
            std::cout << "  reason: " << pda::to_string(*outcome.deny_reason) << "\n";
        if (outcome.result)
            std::cout << "  records: " << outcome.result->record_count << "\n  result: "
                      << result_payload_json(bundle, outcome.result->payload).dump() << "\n";
    }
    return outcome.status == pda::RequestStatus::Verified ? 0 : 1;
}

int cmd_scenario_run(const std::string& file, const std::string& trace_out,
                     const std::string& model_out, const std::string& format) {
    pda::ScenarioSpec spec = pda::scenario_from_json(slurp(file));
    pda::ScenarioResult result = pda::run_scenario(spec);
    spew(trace_out, result.trace.to_jsonl());
    if (!model_out.empty()) {
        if (!result.fl_model) throw std::runtime_error("scenario has no train plan");
        pda::Bytes params = pda::canonical_encode(result.fl_model->params);
        spew(model_out, std::string(params.begin(), params.end()));
    }

    std::map<std::string, std::uint64_t> by_status;
    for (const auto& [id, outcome] : result.outcomes)
        ++by_status[pda::to_string(outcome.status)];

    if (format == "records") {
        json j;
        j["sp_did"] = result.sp_did;
        j["users"] = result.user_dids.size();
        j["outcomes"] = by_status;
        j["envelopes_sent"] = result.envelopes_sent;
        j["envelopes_delivered"] = result.envelopes_delivered;
        j["envelopes_dropped"] = result.envelopes_dropped;
        j["transport_rejections"] = result.transport_rejections;
        j["trace_events"] = result.trace.events.size();
        if (result.fl_model) {
            j["fl_rounds"] = result.fl_model->round;
            if (!result.fl_model->history.empty())
                j["fl_last_mean_loss"] = result.fl_model->history.back().mean_loss;
        }
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "scenario: " << result.user_dids.size() << " users, sp " << result.sp_did
                  << "\n";
        std::cout << "envelopes: sent " << result.envelopes_sent << ", delivered "
                  << result.envelopes_delivered << ", dropped " << result.envelopes_dropped
                  << "\n";
        for (const auto& [status, n] : by_status)
            std::cout << "outcomes: " << status << " x" << n << "\n";
        if (result.fl_model) std::cout << "fl rounds completed: " << result.fl_model->round << "\n";
        std::cout << "trace: " << result.trace.events.size() << " events -> " << trace_out << "\n";
    }
    return 0;
}

int cmd_scenario_assert(const std::string& property_name, const std::string& trace_file) {
    auto property = pda::security_property_from_string(property_name);
    if (!property) throw std::runtime_error("unknown property: " + property_name);
    pda::EventTrace trace = pda::EventTrace::from_jsonl(slurp(trace_file));
    pda::SecurityCheck check = pda::assert_security(trace, *property);
    if (check.holds) {
        std::cout << property_name << " holds over " << trace.events.size() << " events\n";
        return 0;
    }
    std::cerr << property_name << " violated; counterexamples:\n";
    for (const pda::TraceEvent& e : check.counterexamples)
        std::cerr << "  t=" << e.time_ms << " seq=" << e.seq << " kind=" << e.kind
                  << " actor=" << e.actor << " " << e.detail << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"user-controlled personal data agents: keys, policies, plugs, simulation"};
    app.require_subcommand(1);
    std::function<int()> run;

    // keygen
    std::string kg_seed, kg_out = "identity";
    auto* keygen = app.add_subcommand("keygen", "derive an identity and write its DID document");
    keygen->add_option("--seed", kg_seed, "32-byte hex seed; omit for a random identity");
    keygen->add_option("--out", kg_out, "output file prefix");
    keygen->callback([&] { run = [&] { return cmd_keygen(kg_seed, kg_out); }; });

    // policy
    auto* policy = app.add_subcommand("policy", "manage a policy file");
    policy->require_subcommand(1);
    std::string pol_file = "policy.toml", pol_owner, pol_sp, pol_source, pol_op = "Compute";
    std::string pol_format = "human";
    std::int64_t pol_expires = -1, pol_now = -1;

    auto* pol_init = policy->add_subcommand("init", "create an empty policy file");
    pol_init->add_option("--file", pol_file, "policy file path");
    pol_init->add_option("--owner", pol_owner, "owner DID")->required();
    pol_init->callback([&] {
        run = [&] {
            pda::AccessPolicy p;
            p.owner_did = pol_owner;
            pda::save_policy_file(pol_file, p);
            return 0;
        };
    });

    auto* pol_grant = policy->add_subcommand("grant", "add or refresh a grant");
    pol_grant->add_option("--file", pol_file, "policy file path");
    pol_grant->add_option("--sp", pol_sp, "service provider DID")->required();
    pol_grant->add_option("--source", pol_source, "data source id")->required();
    pol_grant->add_option("--op", pol_op, "Compute | Train | Share");
    pol_grant->add_option("--expires-at-ms", pol_expires, "expiry timestamp; -1 = never");
    pol_grant->add_option("--now-ms", pol_now, "clock override for granted_at");
    pol_grant->callback([&] {
        run = [&] {
            auto op = pda::operation_from_string(pol_op);
            if (!op) throw std::runtime_error("unknown operation: " + pol_op);
            pda::AccessPolicy p = pda::load_policy_file(pol_file);
            std::optional<std::int64_t> expires;
            if (pol_expires >= 0) expires = pol_expires;
            pda::grant(p, pol_sp, pol_source, *op, expires, pol_now >= 0 ? pol_now : wall_ms());
            pda::save_policy_file(pol_file, p);
            return 0;
        };
    });

    auto* pol_revoke = policy->add_subcommand("revoke", "remove a grant");
    pol_revoke->add_option("--file", pol_file, "policy file path");
    pol_revoke->add_option("--sp", pol_sp, "service provider DID")->required();
    pol_revoke->add_option("--source", pol_source, "data source id")->required();
    pol_revoke->add_option("--op", pol_op, "Compute | Train | Share");
    pol_revoke->callback([&] {
        run = [&] {
            auto op = pda::operation_from_string(pol_op);
            if (!op) throw std::runtime_error("unknown operation: " + pol_op);
            pda::AccessPolicy p = pda::load_policy_file(pol_file);
            pda::revoke(p, pol_sp, pol_source, *op);
            pda::save_policy_file(pol_file, p);
            return 0;
        };
    });

    auto* pol_show = policy->add_subcommand("show", "print the policy");
    pol_show->add_option("--file", pol_file, "policy file path");
    pol_show->add_option("--format", pol_format, "human | records")
        ->check(CLI::IsMember({"human", "records"}));
    pol_show->callback([&] { run = [&] { return cmd_policy_show(pol_file, pol_format); }; });

    // plug
    auto* plug = app.add_subcommand("plug", "ingest external records into a store");
    plug->require_subcommand(1);
    std::string plug_store = "store.pdalog", plug_source, plug_schema = pda::kSchemaPost;
    std::string plug_credential = "local", plug_key_seed, plug_file, plug_format = "human";
    std::int64_t plug_now = -1;

    auto* plug_register = plug->add_subcommand("register", "register a data source");
    plug_register->add_option("--store", plug_store, "store log path");
    plug_register->add_option("--source", plug_source, "data source id")->required();
    plug_register->add_option("--schema", plug_schema, "record schema tag");
    plug_register->add_option("--credential", plug_credential, "credential reference");
    plug_register->add_option("--key-seed", plug_key_seed,
                              "32-byte hex seed for the source signing key");
    plug_register->callback([&] {
        run = [&] {
            pda::RecordStore store = pda::RecordStore::open(plug_store);
            pda::crypto::SignKeypair key =
                plug_key_seed.empty()
                    ? pda::crypto::sign_keygen()
                    : pda::crypto::sign_keygen(seed_from_hex_arg(plug_key_seed, "--key-seed"));
            pda::DataSourceDescriptor desc;
            desc.source_id = plug_source;
            desc.schema_tag = plug_schema;
            desc.source_signing_key = key.public_key;
            desc.plug_kind = pda::DataSourceDescriptor::PlugKind::FileDrop;
            desc.credential_ref = plug_credential;
            store.register_source(desc, plug_credential, key.secret_key);
            std::cout << "registered " << plug_source << " (" << plug_schema << ")\n";
            return 0;
        };
    });

    auto* plug_ingest = plug->add_subcommand("ingest", "ingest a filedrop of JSON lines");
    plug_ingest->add_option("--store", plug_store, "store log path");
    plug_ingest->add_option("--source", plug_source, "data source id")->required();
    plug_ingest->add_option("--file", plug_file, "JSON-lines input file")->required();
    plug_ingest->add_option("--now-ms", plug_now, "collection timestamp override");
    plug_ingest->callback([&] {
        run = [&] {
            pda::RecordStore store = pda::RecordStore::open(plug_store);
            std::vector<pda::RawItem> items = pda::read_filedrop(plug_file);
            pda::IngestStats stats =
                store.ingest(plug_source, items, plug_now >= 0 ? plug_now : wall_ms());
            std::cout << "accepted " << stats.accepted << ", rejected " << stats.rejected << "\n";
            return 0;
        };
    });

    auto* plug_list = plug->add_subcommand("list", "list registered sources");
    plug_list->add_option("--store", plug_store, "store log path");
    plug_list->add_option("--format", plug_format, "human | records")
        ->check(CLI::IsMember({"human", "records"}));
    plug_list->callback([&] { run = [&] { return cmd_plug_list(plug_store, plug_format); }; });

    auto* plug_verify = plug->add_subcommand("verify", "verify a source's chain of possession");
    plug_verify->add_option("--store", plug_store, "store log path");
    plug_verify->add_option("--source", plug_source, "data source id")->required();
    plug_verify->callback([&] {
        run = [&] {
            pda::RecordStore store = pda::RecordStore::open(plug_store);
            if (!store.has_source(plug_source)) throw std::runtime_error("unknown source");
            bool ok = store.verify_chain(plug_source);
            std::cout << plug_source << ": " << (ok ? "verified" : "FAILED") << "\n";
            return ok ? 0 : 1;
        };
    });

    // agent
    auto* agent = app.add_subcommand("agent", "run agent operations locally");
    agent->require_subcommand(1);
    std::string ag_seed, ag_enclave_seed;
    OneshotArgs oneshot;

    auto* ag_diddoc = agent->add_subcommand("diddoc", "print the agent's DID document");
    ag_diddoc->add_option("--seed", ag_seed, "32-byte hex identity seed")->required();
    ag_diddoc->add_option("--enclave-seed", ag_enclave_seed,
                          "32-byte hex enclave key seed; omit to derive from --seed");
    ag_diddoc->callback([&] {
        run = [&] {
            pda::crypto::Seed seed = seed_from_hex_arg(ag_seed, "--seed");
            pda::crypto::Seed enclave_seed = ag_enclave_seed.empty()
                                                 ? subseed(seed, "enclave")
                                                 : seed_from_hex_arg(ag_enclave_seed,
                                                                     "--enclave-seed");
            pda::AgentIdentity identity = pda::generate_identity(seed);
            pda::EnclaveInstance enclave(enclave_seed);
            std::cout << diddoc_json(identity.make_document(enclave.attestation_public_key()))
                             .dump(2)
                      << "\n";
            return 0;
        };
    });

    auto* ag_oneshot =
        agent->add_subcommand("oneshot", "answer one signed request against local files");
    ag_oneshot->add_option("--store", oneshot.store_path, "store log path")->required();
    ag_oneshot->add_option("--policy", oneshot.policy_path, "policy file path")->required();
    ag_oneshot->add_option("--seed", oneshot.seed_hex, "agent identity seed (hex)")->required();
    ag_oneshot->add_option("--requester-seed", oneshot.requester_seed_hex,
                           "requester identity seed (hex)")
        ->required();
    ag_oneshot->add_option("--function-spec", oneshot.function_spec,
                           "JSON function spec, e.g. "
                           "{\"function_id\":\"x\",\"family\":\"ner\",\"entities\":[\"a\"]}")
        ->required();
    ag_oneshot->add_option("--source", oneshot.source_id, "data source id")->required();
    ag_oneshot->add_option("--schema", oneshot.schema_tag, "record schema tag")->required();
    ag_oneshot->add_option("--max-records", oneshot.max_records, "selector record bound");
    ag_oneshot->add_option("--now-ms", oneshot.now_ms, "clock override");
    ag_oneshot->add_option("--format", oneshot.format, "human | records")
        ->check(CLI::IsMember({"human", "records"}));
    ag_oneshot->callback([&] { run = [&] { return cmd_agent_oneshot(oneshot); }; });

    // scenario
    auto* scenario = app.add_subcommand("scenario", "run and check simulated scenarios");
    scenario->require_subcommand(1);
    std::string scn_file, scn_trace = "trace.jsonl", scn_model, scn_format = "human";
    std::string scn_property;

    auto* scn_run = scenario->add_subcommand("run", "execute a scenario file");
    scn_run->add_option("file", scn_file, "scenario JSON file")->required();
    scn_run->add_option("--trace", scn_trace, "trace output path");
    scn_run->add_option("--model-out", scn_model, "write final model parameters (binary)");
    scn_run->add_option("--format", scn_format, "human | records")
        ->check(CLI::IsMember({"human", "records"}));
    scn_run->callback(
        [&] { run = [&] { return cmd_scenario_run(scn_file, scn_trace, scn_model, scn_format); }; });

    auto* scn_assert = scenario->add_subcommand("assert", "check a security property on a trace");
    scn_assert
        ->add_option("property", scn_property,
                     "NoUnauthorizedPermit | AllTamperRejected | AllForgedAttRejected | "
                     "PoisonExcluded")
        ->required();
    scn_assert->add_option("--trace", scn_trace, "trace file to scan");
    scn_assert->callback([&] { run = [&] { return cmd_scenario_assert(scn_property, scn_trace); }; });

    // bench
    auto* bench = app.add_subcommand("bench", "runtime-scaling benchmark");
    std::vector<std::uint64_t> bench_sizes = {100, 200, 400, 800, 1600};
    std::vector<std::string> bench_modes = {"centralized", "decentralized", "enclave"};
    std::uint32_t bench_trials = 3;
    std::uint64_t bench_seed = 1;
    std::uint64_t bench_setup_us = 10'000, bench_per_record_us = 50;
    std::string bench_report_path = "bench_report.jsonl", bench_series_path = "bench_series.csv";
    std::string bench_format = "human";
    bench->add_option("--sizes", bench_sizes, "record counts, strictly increasing")
        ->delimiter(',');
    bench->add_option("--modes", bench_modes, "centralized, decentralized, enclave")
        ->delimiter(',');
    bench->add_option("--trials", bench_trials, "timed trials per point");
    bench->add_option("--seed", bench_seed, "corpus seed");
    bench->add_option("--setup-us", bench_setup_us, "emulated enclave setup cost");
    bench->add_option("--per-record-us", bench_per_record_us, "emulated per-record cost");
    bench->add_option("--report", bench_report_path, "JSONL report path");
    bench->add_option("--series", bench_series_path, "CSV series path");
    bench->add_option("--format", bench_format, "human | records")
        ->check(CLI::IsMember({"human", "records"}));
    bench->callback([&] {
        run = [&] {
            pda::BenchConfig config;
            config.sizes = bench_sizes;
            config.modes.clear();
            for (const std::string& m : bench_modes)
                config.modes.push_back(m == "enclave" ? pda::kModeEnclave : m);
            config.trials = bench_trials;
            config.seed = bench_seed;
            config.enclave_overhead = pda::ExecOverhead{bench_setup_us, bench_per_record_us};
            pda::BenchReport report = pda::run_bench(config);
            spew(bench_report_path, pda::bench_report_jsonl(report));
            spew(bench_series_path, pda::bench_series_csv(report));
            if (bench_format == "records") {
                std::cout << pda::bench_report_jsonl(report);
            } else {
                for (const pda::BenchRow& row : report.rows)
                    std::cout << row.mode << "  n=" << row.record_count << "  median "
                              << row.runtime_ms << " ms (" << row.trials << " trials)\n";
                for (const pda::BenchFit& fit : report.fits)
                    std::cout << fit.mode << "  fit: " << fit.slope_ms_per_record
                              << " ms/record + " << fit.intercept_ms
                              << " ms, r2=" << fit.r_squared << "\n";
            }
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (!run) {
        std::cerr << "no command selected\n";
        return 2;
    }
    try {
        return run();
    } catch (const std::exception& ex) {
        std::cerr << "pda: " << ex.what() << "\n";
        return 1;
    }
}
