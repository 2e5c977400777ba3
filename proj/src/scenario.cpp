#include "pda/scenario.hpp"

#include "json.hpp"

#include <memory>
#include <set>
#include <utility>

namespace pda {

using nlohmann::json;

namespace {

crypto::Seed seed_from_label(std::uint64_t base, const std::string& label) {
    Encoder e;
    e.u64(base);
    e.raw(to_bytes(label));
    return content_hash(e.take()).digest;
}

crypto::Seed subseed(const crypto::Seed& base, const std::string& label) {
    Encoder e;
    e.raw(Bytes(base.begin(), base.end()));
    e.raw(to_bytes(label));
    return content_hash(e.take()).digest;
}

}  // namespace

void ScenarioSpec::validate() const {
    try {
        sim.validate();
    } catch (const std::invalid_argument& ex) {
        throw ScenarioError(std::string("sim config: ") + ex.what());
    }
    std::set<std::string> function_ids;
    for (const FunctionBundle& fb : functions) {
        if (fb.function_id.empty()) throw ScenarioError("function with empty function_id");
        if (!function_ids.insert(fb.function_id).second)
            throw ScenarioError("duplicate function_id: " + fb.function_id);
        if (!code_spec_family(fb.code_spec))
            throw ScenarioError("unparseable code_spec for " + fb.function_id);
    }
    for (const ScenarioUser& u : users) {
        std::set<std::string> source_ids;
        for (const ScenarioSource& s : u.sources) {
            if (!schema_known(s.schema_tag))
                throw ScenarioError("unknown schema: " + s.schema_tag);
            if (!source_ids.insert(s.source_id).second)
                throw ScenarioError("duplicate source_id: " + s.source_id);
        }
    }
    const std::int64_t settle_ms = sim.latency.max_ms;  // DID announcements land by then
    for (const ComputeAction& act : computes) {
        if (act.user >= users.size()) throw ScenarioError("compute action user index out of range");
        if (!function_ids.contains(act.function_id))
            throw ScenarioError("compute action references unknown function: " + act.function_id);
        if (act.at_ms <= settle_ms)
            throw ScenarioError("compute action scheduled before channel bootstrap completes");
        if (act.timeout_ms <= 0) throw ScenarioError("compute timeout must be positive");
        try {
            act.selector.validate();
        } catch (const std::invalid_argument& ex) {
            throw ScenarioError(std::string("compute selector: ") + ex.what());
        }
    }
    if (train) {
        if (users.empty()) throw ScenarioError("train plan with no users");
        if (!function_ids.contains(train->function_id))
            throw ScenarioError("train plan references unknown function: " + train->function_id);
        if (train->start_ms <= settle_ms)
            throw ScenarioError("train plan scheduled before channel bootstrap completes");
        if (train->rounds == 0) throw ScenarioError("train plan with zero rounds");
        if (train->collect_timeout_ms <= 0 || train->round_gap_ms < 0)
            throw ScenarioError("train plan timing invalid");
        try {
            train->selector.validate();
        } catch (const std::invalid_argument& ex) {
            throw ScenarioError(std::string("train selector: ") + ex.what());
        }
    }
}

ScenarioResult run_scenario(const ScenarioSpec& spec) {
    spec.validate();

    AgentIdentity sp_identity = generate_identity(
        spec.sp_seed ? *spec.sp_seed : seed_from_label(spec.sim.seed, "sp-identity"));
    auto sp_agent = std::make_unique<SpControllerAgent>(sp_identity);

    std::vector<FunctionBundle> functions = spec.functions;
    for (FunctionBundle& fb : functions) {
        if (fb.provided_by.empty()) fb.provided_by = sp_identity.did;
        sp_agent->register_bundle(fb, measure_bundle(fb, kEnclaveVersionTag));
    }

    std::vector<std::unique_ptr<UcNode>> uc_nodes;
    std::vector<std::string> user_dids;
    for (std::size_t i = 0; i < spec.users.size(); ++i) {
        const ScenarioUser& u = spec.users[i];
        crypto::Seed user_seed =
            u.seed ? *u.seed : seed_from_label(spec.sim.seed, "user-identity-" + std::to_string(i));
        AgentIdentity identity = generate_identity(user_seed);

        AccessPolicy policy;
        policy.owner_did = identity.did;
        for (const ScenarioGrant& g : u.grants) {
            Grant grant;
            grant.sp_did = sp_identity.did;
            grant.source_id = g.source_id;
            grant.operation = g.operation;
            grant.granted_at_ms = 0;
            grant.expires_at_ms = g.expires_at_ms;
            policy.grants.push_back(grant);
        }
        for (const ScenarioPolicy& p : u.policies) policy.policies[p.source_id] = p.policy;
        policy.revision = 1;

        RecordStore store;
        for (const ScenarioSource& s : u.sources) {
            crypto::SignKeypair source_key =
                crypto::sign_keygen(subseed(user_seed, "source:" + s.source_id));
            DataSourceDescriptor desc;
            desc.source_id = s.source_id;
            desc.schema_tag = s.schema_tag;
            desc.source_signing_key = source_key.public_key;
            desc.plug_kind = DataSourceDescriptor::PlugKind::MockApi;
            desc.credential_ref = "scenario";
            store.register_source(desc, "scenario", source_key.secret_key);
            for (std::size_t k = 0; k < s.items.size(); ++k) {
                IngestStats st = store.ingest(
                    s.source_id, {RawItem{s.items[k]}},
                    s.collected_at_start_ms + static_cast<std::int64_t>(k) * s.collected_at_step_ms);
                if (st.accepted != 1)
                    throw ScenarioError("item rejected at ingest for source " + s.source_id);
            }
        }

        auto agent = std::make_unique<UserControllerAgent>(identity, std::move(policy),
                                                           std::move(store),
                                                           subseed(user_seed, "enclave"));
        agent->enclave().set_overhead(spec.enclave_overhead);
        for (const FunctionBundle& fb : functions) agent->enclave().load_bundle(fb);
        user_dids.push_back(identity.did);
        uc_nodes.push_back(std::make_unique<UcNode>(std::move(agent)));
    }

    Simulator sim(spec.sim);
    auto sp_node = std::make_unique<SpNode>(std::move(sp_agent));
    sim.add_node(*sp_node);
    for (auto& node : uc_nodes) sim.add_node(*node);
    sim.announce(*sp_node);
    for (auto& node : uc_nodes) sim.announce(*node);

    SpNode* sp = sp_node.get();
    for (const ComputeAction& act : spec.computes) {
        std::string target = user_dids[act.user];
        sim.at(act.at_ms, [sp, target, act](Simulator& s) {
            auto [id, ob] = sp->agent().make_compute_request(target, act.function_id,
                                                             act.operation, act.selector, Bytes{},
                                                             s.now(), act.timeout_ms);
            s.emit("sp_request", sp->did(),
                   "req=" + id.hex() + " fn=" + act.function_id + " to=" + target);
            s.send(*sp, ob);
        });
        sim.at(act.at_ms + act.timeout_ms + 1, [sp](Simulator& s) {
            sp->agent().check_timeouts(s.now());
            sp->sync_outcomes(s);
        });
    }

    if (spec.train) {
        const TrainPlan& tp = *spec.train;
        auto measurement = sp->agent().measurement_of(tp.function_id);
        RoundConfig rc;
        rc.eligible_agents = user_dids;
        rc.min_participants = tp.min_participants;
        rc.rounds_total = tp.rounds;
        rc.hyper = tp.hyper;
        rc.function_id = tp.function_id;
        rc.expected_measurement = *measurement;
        rc.selector = tp.selector;
        rc.collect_timeout_ms = tp.collect_timeout_ms;
        GlobalModel start;
        start.params = init_params(tp.layout, spec.sim.seed);
        sp->agent().configure_rounds(std::move(rc), std::move(start));

        for (std::uint32_t r = 0; r < tp.rounds; ++r) {
            std::int64_t t0 =
                tp.start_ms + static_cast<std::int64_t>(r) * (tp.collect_timeout_ms +
                                                              tp.round_gap_ms);
            sim.at(t0, [sp](Simulator& s) {
                std::uint32_t round = sp->agent().fl_model().round + 1;
                std::vector<Outbound> obs = sp->agent().start_round(s.now());
                s.emit("round_start", sp->did(),
                       "round=" + std::to_string(round) +
                           " requests=" + std::to_string(obs.size()));
                for (const Outbound& ob : obs) s.send(*sp, ob);
            });
            sim.at(t0 + tp.collect_timeout_ms, [sp](Simulator& s) {
                std::uint32_t round = sp->agent().fl_model().round + 1;
                try {
                    RoundMetrics m = sp->agent().finish_round();
                    s.emit("round_done", sp->did(),
                           "round=" + std::to_string(m.round) +
                               " participants=" + std::to_string(m.participants) +
                               " rejected=" + std::to_string(m.rejected));
                } catch (const NoValidUpdatesError&) {
                    s.emit("fl_insufficient", sp->did(), "round=" + std::to_string(round));
                } catch (const InsufficientParticipantsError&) {
                    s.emit("fl_insufficient", sp->did(), "round=" + std::to_string(round));
                }
                sp->agent().check_timeouts(s.now());
                sp->sync_outcomes(s);
            });
        }
    }

    sim.at(spec.sim.duration_ms, [sp](Simulator& s) {
        sp->agent().check_timeouts(s.now());
        sp->sync_outcomes(s);
    });

    sim.run();

    ScenarioResult result;
    result.trace = sim.trace();
    result.sp_did = sp_identity.did;
    result.user_dids = user_dids;
    result.outcomes = sp->agent().outcomes();
    result.transport_rejections = sp->agent().transport_rejections();
    if (sp->agent().rounds_configured()) result.fl_model = sp->agent().fl_model();
    result.outbound_kinds[sp_identity.did] = sim.outbound_kinds(sp_identity.did);
    result.outbound_frames[sp_identity.did] = sim.outbound_frames(sp_identity.did);
    for (const std::string& did : user_dids) {
        result.outbound_kinds[did] = sim.outbound_kinds(did);
        result.outbound_frames[did] = sim.outbound_frames(did);
    }
    result.envelopes_sent = sim.envelopes_sent();
    result.envelopes_delivered = sim.envelopes_delivered();
    result.envelopes_dropped = sim.envelopes_dropped();
    return result;
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw ScenarioError(what); }

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing field: ") + key);
    return *it;
}

std::string req_str(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) fail(std::string("field must be a string: ") + key);
    return v.get<std::string>();
}

std::int64_t opt_i64(const json& j, const char* key, std::int64_t fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) fail(std::string("field must be an integer: ") + key);
    return it->get<std::int64_t>();
}

double opt_f64(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) fail(std::string("field must be a number: ") + key);
    return it->get<double>();
}

crypto::Seed seed_from_hex(const std::string& hex, const char* key) {
    Bytes raw;
    try {
        raw = from_hex(hex);
        return parse_seed(raw);
    } catch (const std::exception&) {
        fail(std::string(key) + " must be 64 hex characters");
    }
}

DataSelector selector_from_json(const json& j) {
    DataSelector sel;
    sel.source_id = req_str(j, "source_id");
    sel.schema_tag = req_str(j, "schema");
    if (auto it = j.find("max_records"); it != j.end())
        sel.max_records = it->get<std::uint32_t>();
    if (auto it = j.find("time_range"); it != j.end()) {
        TimeRange tr;
        tr.start_ms = opt_i64(*it, "start_ms", 0);
        tr.end_ms = opt_i64(*it, "end_ms", 0);
        sel.time_range = tr;
    }
    return sel;
}

FunctionBundle function_from_json(const json& j) {
    FunctionBundle fb;
    fb.function_id = req_str(j, "function_id");
    std::string family = req_str(j, "family");
    if (family == "ner") {
        EntityDictionary dict;
        for (const json& e : require(j, "entities"))
            dict.entries.insert(e.get<std::string>());
        dict.validate();
        fb.code_spec = code_spec_ner(dict);
        fb.output_schema = "ner.counts.v1";
    } else if (family == "sentiment") {
        SentimentLexicon lex;
        for (auto it = require(j, "lexicon").begin(); it != require(j, "lexicon").end(); ++it)
            lex.scores[it.key()] = it.value().get<double>();
        lex.validate();
        fb.code_spec = code_spec_sentiment(lex);
        fb.output_schema = "sentiment.mean.v1";
    } else if (family == "stat") {
        StatKind kind = stat_kind_from_string(req_str(j, "stat"));
        fb.code_spec = code_spec_stat(kind, req_str(j, "field"));
        fb.output_schema = "stat.value.v1";
    } else if (family == "linreg") {
        fb.code_spec = code_spec_linreg(req_str(j, "x_field"), req_str(j, "y_field"));
        fb.output_schema = "linreg.fit.v1";
    } else if (family == "train") {
        ModelLayout layout;
        layout.hidden_dim = static_cast<std::uint32_t>(opt_i64(j, "hidden_dim", 0));
        fb.code_spec = code_spec_train(layout);
        fb.output_schema = "train.update.v1";
    } else {
        fail("unknown function family: " + family);
    }
    return fb;
}

}  // namespace

FunctionBundle function_bundle_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) fail("function spec is not a JSON object");
    return function_from_json(j);
}

ScenarioSpec scenario_from_json(const std::string& text) {
    json root = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (root.is_discarded() || !root.is_object()) fail("scenario is not a JSON object");

    ScenarioSpec spec;
    spec.sim.seed = static_cast<std::uint64_t>(opt_i64(root, "seed", 0));
    if (auto it = root.find("latency_ms"); it != root.end()) {
        spec.sim.latency.min_ms = opt_i64(*it, "min", 5);
        spec.sim.latency.max_ms = opt_i64(*it, "max", spec.sim.latency.min_ms);
    }
    spec.sim.drop_rate = opt_f64(root, "drop_rate", 0.0);
    spec.sim.duration_ms = opt_i64(root, "duration_ms", 60'000);
    if (auto it = root.find("adversary"); it != root.end()) {
        std::string mode = req_str(*it, "mode");
        auto parsed = adversary_mode_from_string(mode);
        if (!parsed) fail("unknown adversary mode: " + mode);
        spec.sim.adversary.mode = *parsed;
        if (auto t = it->find("target"); t != it->end())
            spec.sim.adversary.target_did = t->get<std::string>();
        spec.sim.adversary.probability = opt_f64(*it, "probability", 1.0);
    }
    if (auto it = root.find("sp_seed"); it != root.end())
        spec.sp_seed = seed_from_hex(it->get<std::string>(), "sp_seed");

    if (auto it = root.find("users"); it != root.end()) {
        for (const json& ju : *it) {
            ScenarioUser user;
            if (auto s = ju.find("seed"); s != ju.end())
                user.seed = seed_from_hex(s->get<std::string>(), "seed");
            if (auto js = ju.find("sources"); js != ju.end()) {
                for (const json& jsrc : *js) {
                    ScenarioSource src;
                    src.source_id = req_str(jsrc, "source_id");
                    src.schema_tag = req_str(jsrc, "schema");
                    src.collected_at_start_ms = opt_i64(jsrc, "collected_at_start_ms", 1'000);
                    src.collected_at_step_ms = opt_i64(jsrc, "collected_at_step_ms", 1);
                    for (const json& item : require(jsrc, "items")) {
                        if (!item.is_object()) fail("source items must be JSON objects");
                        src.items.push_back(item.dump());
                    }
                    user.sources.push_back(std::move(src));
                }
            }
            if (auto jg = ju.find("grants"); jg != ju.end()) {
                for (const json& jgr : *jg) {
                    ScenarioGrant g;
                    g.source_id = req_str(jgr, "source_id");
                    std::string op = req_str(jgr, "operation");
                    auto parsed = operation_from_string(op);
                    if (!parsed) fail("unknown operation: " + op);
                    g.operation = *parsed;
                    if (auto e = jgr.find("expires_at_ms"); e != jgr.end() && !e->is_null())
                        g.expires_at_ms = e->get<std::int64_t>();
                    user.grants.push_back(std::move(g));
                }
            }
            if (auto jp = ju.find("policies"); jp != ju.end()) {
                for (const json& jpol : *jp) {
                    ScenarioPolicy p;
                    p.source_id = req_str(jpol, "source_id");
                    for (const json& f : require(jpol, "functions"))
                        p.policy.allowed_function_ids.insert(f.get<std::string>());
                    p.policy.max_records =
                        static_cast<std::uint32_t>(opt_i64(jpol, "max_records", 1));
                    p.policy.max_requests_per_day =
                        static_cast<std::uint32_t>(opt_i64(jpol, "max_requests_per_day", 1));
                    if (auto e = jpol.find("require_enclave"); e != jpol.end())
                        p.policy.require_enclave = e->get<bool>();
                    user.policies.push_back(std::move(p));
                }
            }
            spec.users.push_back(std::move(user));
        }
    }

    if (auto it = root.find("functions"); it != root.end())
        for (const json& jf : *it) spec.functions.push_back(function_from_json(jf));

    if (auto it = root.find("script"); it != root.end()) {
        for (const json& ja : *it) {
            std::string kind = req_str(ja, "do");
            if (kind == "compute") {
                ComputeAction act;
                act.at_ms = opt_i64(ja, "at_ms", 100);
                act.user = static_cast<std::size_t>(opt_i64(ja, "user", 0));
                act.function_id = req_str(ja, "function_id");
                if (auto op = ja.find("operation"); op != ja.end()) {
                    auto parsed = operation_from_string(op->get<std::string>());
                    if (!parsed) fail("unknown operation: " + op->get<std::string>());
                    act.operation = *parsed;
                }
                act.selector = selector_from_json(ja);
                act.timeout_ms = opt_i64(ja, "timeout_ms", 5'000);
                spec.computes.push_back(std::move(act));
            } else if (kind == "train") {
                if (spec.train) fail("only one train plan per scenario");
                TrainPlan tp;
                tp.start_ms = opt_i64(ja, "start_ms", 100);
                tp.rounds = static_cast<std::uint32_t>(opt_i64(ja, "rounds", 1));
                tp.function_id = req_str(ja, "function_id");
                tp.selector = selector_from_json(ja);
                tp.layout.hidden_dim =
                    static_cast<std::uint32_t>(opt_i64(ja, "hidden_dim", 0));
                tp.hyper.epochs = static_cast<std::uint32_t>(opt_i64(ja, "epochs", 50));
                tp.hyper.learning_rate = opt_f64(ja, "learning_rate", 0.1);
                tp.min_participants =
                    static_cast<std::uint64_t>(opt_i64(ja, "min_participants", 1));
                tp.collect_timeout_ms = opt_i64(ja, "collect_timeout_ms", 2'000);
                tp.round_gap_ms = opt_i64(ja, "round_gap_ms", 100);
                spec.train = std::move(tp);
            } else {
                fail("unknown script action: " + kind);
            }
        }
    }

    spec.validate();
    return spec;
}

}  // namespace pda
