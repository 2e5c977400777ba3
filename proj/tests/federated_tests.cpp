#include "doctest.h"

#include "pda/federated.hpp"
#include "pda/store.hpp"

#include <algorithm>
#include <random>

using namespace pda;

namespace {

const ModelLayout kLayout{kFeatureDim, 0};

ComputationRequest train_request(const RequestId& id, std::uint32_t round) {
    TrainRequestBody body;
    body.round = round;
    body.model_in = init_params(kLayout, 0);
    body.hyper = TrainHyper{10, 0.5, 0};
    ComputationRequest re;
    re.request_id = id;
    re.requester_did = "did:pda:zsp";
    re.operation = OperationKind::Train;
    re.function_id = "fn.train";
    re.function_params = canonical_encode(body);
    re.selector.source_id = "titles";
    re.selector.schema_tag = kSchemaLabeledTitle;
    re.selector.max_records = 100;
    re.issued_at_ms = 0;
    re.requester_signature = Bytes(64, 1);
    return re;
}

RequestId rid(std::uint8_t tag) {
    RequestId id;
    id.id.fill(tag);
    return id;
}

// an update that passes every aggregate gate, attested by `kp`
ModelUpdate attested_update(const crypto::SignKeypair& kp, const Measurement& m,
                            const ComputationRequest& req, const std::string& agent_did,
                            TrainResultBody body) {
    ModelUpdate u;
    u.round = body.round;
    u.agent_did = agent_did;
    u.result.request_id = req.request_id;
    u.result.payload = canonical_encode(body);
    u.result.record_count = body.n_samples;
    u.attestation.measurement = m;
    u.attestation.request_hash = content_hash(canonical_encode(req));
    u.attestation.result_hash = content_hash(canonical_encode(u.result));
    u.attestation.nonce.fill(9);
    u.attestation.enclave_signature =
        crypto::sign_detached(u.attestation.signing_bytes(), kp.secret_key);
    return u;
}

TrainResultBody result_body(std::uint32_t round, std::uint64_t n_samples,
                            std::uint64_t weight_seed) {
    TrainResultBody body;
    body.round = round;
    body.model_out.layout = kLayout;
    body.model_out.weights.resize(kLayout.weight_count());
    std::mt19937_64 rng(weight_seed);
    for (double& w : body.model_out.weights)
        w = (rng() >> 11) * (1.0 / 9007199254740992.0) * 2.0 - 1.0;
    body.n_samples = n_samples;
    body.loss_final = 0.5;
    return body;
}

AgentIdentity test_sp() {
    crypto::Seed seed{};
    seed.fill(0x33);
    return generate_identity(seed);
}

RoundConfig base_config(std::vector<std::string> agents) {
    RoundConfig cfg;
    cfg.eligible_agents = std::move(agents);
    cfg.min_participants = 1;
    cfg.rounds_total = 1;
    cfg.hyper = TrainHyper{10, 0.5, 0};
    cfg.function_id = "fn.train";
    cfg.selector.source_id = "titles";
    cfg.selector.schema_tag = kSchemaLabeledTitle;
    cfg.selector.max_records = 100;
    return cfg;
}

}  // namespace

TEST_CASE("distribute derives one deterministic signed request per agent") {
    AgentIdentity sp = test_sp();
    RoundConfig cfg = base_config({"did:a", "did:b", "did:c"});
    GlobalModel current;
    current.params = init_params(kLayout, 0);
    current.round = 4;

    auto reqs = distribute(sp, cfg, current, 1000);
    REQUIRE(reqs.size() == 3);
    std::set<RequestId> ids;
    for (const auto& [agent, re] : reqs) {
        ids.insert(re.request_id);
        CHECK(re.requester_did == sp.did);
        CHECK(re.operation == OperationKind::Train);
        CHECK(crypto::sign_verify(re.signing_bytes(), re.requester_signature,
                                  sp.signing.public_key));
        auto body = canonical_decode<TrainRequestBody>(re.function_params);
        CHECK(body.round == 5);
        CHECK(body.model_in == current.params);
    }
    CHECK(ids.size() == 3);  // distinct per agent

    auto again = distribute(sp, cfg, current, 1000);
    CHECK(again.at("did:a") == reqs.at("did:a"));  // bit-identical rerun

    GlobalModel next = current;
    next.round = 5;
    auto next_reqs = distribute(sp, cfg, next, 1000);
    CHECK(next_reqs.at("did:a").request_id != reqs.at("did:a").request_id);
}

TEST_CASE("aggregate equals the sample-weighted mean oracle, order-independent") {
    auto kp_a = crypto::sign_keygen(std::nullopt);
    auto kp_b = crypto::sign_keygen(std::nullopt);
    auto kp_c = crypto::sign_keygen(std::nullopt);
    Measurement m;
    m.digest.fill(7);

    std::map<RequestId, ComputationRequest> requests;
    auto req_a = train_request(rid(1), 3);
    auto req_b = train_request(rid(2), 3);
    auto req_c = train_request(rid(3), 3);
    requests = {{req_a.request_id, req_a}, {req_b.request_id, req_b}, {req_c.request_id, req_c}};

    auto body_a = result_body(3, 10, 100);
    auto body_b = result_body(3, 30, 200);
    auto body_c = result_body(3, 5, 300);
    std::vector<ModelUpdate> updates = {
        attested_update(kp_a, m, req_a, "did:a", body_a),
        attested_update(kp_b, m, req_b, "did:b", body_b),
        attested_update(kp_c, m, req_c, "did:c", body_c),
    };
    AttKeyResolver resolver = [&](const std::string& did) -> std::optional<Bytes> {
        if (did == "did:a") return kp_a.public_key;
        if (did == "did:b") return kp_b.public_key;
        if (did == "did:c") return kp_c.public_key;
        return std::nullopt;
    };

    AggregateOutcome out = aggregate(3, updates, requests, m, resolver, 1);
    CHECK(out.metrics.participants == 3);
    CHECK(out.metrics.rejected == 0);
    CHECK(out.metrics.mean_loss == doctest::Approx(0.5));

    // independent oracle: plain weighted mean per coordinate
    double total = 10 + 30 + 5;
    for (std::size_t i = 0; i < out.params.weights.size(); ++i) {
        double want = (10 * body_a.model_out.weights[i] + 30 * body_b.model_out.weights[i] +
                       5 * body_c.model_out.weights[i]) /
                      total;
        CHECK(std::abs(out.params.weights[i] - want) <= 1e-12);
    }

    // arrival order must not change a single bit
    std::vector<ModelUpdate> shuffled = {updates[2], updates[0], updates[1]};
    AggregateOutcome out2 = aggregate(3, shuffled, requests, m, resolver, 1);
    CHECK(out2.params.weights == out.params.weights);
    CHECK(out2.metrics == out.metrics);
}

TEST_CASE("aggregate rejects updates failing any gate") {
    auto kp = crypto::sign_keygen(std::nullopt);
    Measurement m;
    m.digest.fill(7);
    auto req = train_request(rid(1), 2);
    std::map<RequestId, ComputationRequest> requests = {{req.request_id, req}};
    AttKeyResolver resolver = [&](const std::string&) -> std::optional<Bytes> {
        return kp.public_key;
    };
    ModelUpdate good = attested_update(kp, m, req, "did:a", result_body(2, 4, 1));

    auto expect_only_good = [&](ModelUpdate bad) {
        AggregateOutcome out = aggregate(2, {good, bad}, requests, m, resolver, 1);
        CHECK(out.metrics.participants == 1);
        CHECK(out.metrics.rejected == 1);
        AggregateOutcome alone = aggregate(2, {good}, requests, m, resolver, 1);
        CHECK(out.params.weights == alone.params.weights);
    };

    SUBCASE("unknown request id") {
        ModelUpdate bad = attested_update(kp, m, train_request(rid(9), 2), "did:b",
                                          result_body(2, 4, 2));
        expect_only_good(bad);
    }
    SUBCASE("update round mismatch") {
        ModelUpdate bad = attested_update(kp, m, req, "did:b", result_body(2, 4, 2));
        bad.round = 1;
        expect_only_good(bad);
    }
    SUBCASE("body round mismatch") {
        ModelUpdate bad = attested_update(kp, m, req, "did:b", result_body(1, 4, 2));
        bad.round = 2;  // body still says round 1
        expect_only_good(bad);
    }
    SUBCASE("tampered payload fails vrf") {
        ModelUpdate bad = attested_update(kp, m, req, "did:b", result_body(2, 4, 2));
        bad.result.payload[10] ^= 1;
        expect_only_good(bad);
    }
    SUBCASE("forged attestation key") {
        auto other = crypto::sign_keygen(std::nullopt);
        ModelUpdate bad = attested_update(other, m, req, "did:b", result_body(2, 4, 2));
        expect_only_good(bad);
    }
    SUBCASE("wrong measurement") {
        Measurement m2 = m;
        m2.digest[0] ^= 1;
        ModelUpdate bad = attested_update(kp, m2, req, "did:b", result_body(2, 4, 2));
        expect_only_good(bad);
    }
    SUBCASE("zero samples") {
        ModelUpdate bad = attested_update(kp, m, req, "did:b", result_body(2, 0, 2));
        expect_only_good(bad);
    }
    SUBCASE("undecodable payload") {
        ModelUpdate bad = attested_update(kp, m, req, "did:b", result_body(2, 4, 2));
        bad.result.payload = Bytes{1, 2, 3};
        bad.attestation.result_hash = content_hash(canonical_encode(bad.result));
        bad.attestation.enclave_signature =
            crypto::sign_detached(bad.attestation.signing_bytes(), kp.secret_key);
        expect_only_good(bad);
    }
    SUBCASE("duplicate agent keeps the first copy") {
        ModelUpdate dup = attested_update(kp, m, req, "did:a", result_body(2, 40, 5));
        AggregateOutcome out = aggregate(2, {good, dup}, requests, m, resolver, 1);
        CHECK(out.metrics.participants == 1);
        CHECK(out.metrics.rejected == 1);
        AggregateOutcome alone = aggregate(2, {good}, requests, m, resolver, 1);
        CHECK(out.params.weights == alone.params.weights);
    }
    SUBCASE("nothing valid throws") {
        ModelUpdate bad = attested_update(kp, m, req, "did:a", result_body(2, 4, 1));
        bad.result.payload[10] ^= 1;
        CHECK_THROWS_AS(aggregate(2, {bad}, requests, m, resolver, 1), NoValidUpdatesError);
        CHECK_THROWS_AS(aggregate(2, {}, requests, m, resolver, 1), NoValidUpdatesError);
    }
    SUBCASE("min_participants gates the fold") {
        CHECK_THROWS_AS(aggregate(2, {good}, requests, m, resolver, 2), NoValidUpdatesError);
    }
}

TEST_CASE("a poisoned copy alongside the honest update changes nothing") {
    auto kp = crypto::sign_keygen(std::nullopt);
    Measurement m;
    m.digest.fill(7);
    auto req = train_request(rid(1), 1);
    std::map<RequestId, ComputationRequest> requests = {{req.request_id, req}};
    AttKeyResolver resolver = [&](const std::string&) -> std::optional<Bytes> {
        return kp.public_key;
    };

    ModelUpdate honest = attested_update(kp, m, req, "did:a", result_body(1, 8, 11));

    // compromised boundary rewrites the plaintext body but cannot re-attest
    TrainResultBody poisoned_body = result_body(1, 8, 11);
    for (double& w : poisoned_body.model_out.weights) w = w * 10.0 + 1.0;
    ModelUpdate poisoned = honest;
    poisoned.result.payload = canonical_encode(poisoned_body);

    AggregateOutcome clean = aggregate(1, {honest}, requests, m, resolver, 1);
    AggregateOutcome attacked = aggregate(1, {honest, poisoned}, requests, m, resolver, 1);
    CHECK(attacked.params.weights == clean.params.weights);  // bit-identical
    CHECK(attacked.metrics.rejected == 1);
}

TEST_CASE("round config validation") {
    RoundConfig cfg = base_config({"did:a"});
    CHECK_NOTHROW(cfg.validate());
    RoundConfig empty = cfg;
    empty.eligible_agents.clear();
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
    RoundConfig zero_min = cfg;
    zero_min.min_participants = 0;
    CHECK_THROWS_AS(zero_min.validate(), std::invalid_argument);
    RoundConfig too_many = cfg;
    too_many.min_participants = 2;
    CHECK_THROWS_AS(too_many.validate(), std::invalid_argument);
    RoundConfig no_fn = cfg;
    no_fn.function_id.clear();
    CHECK_THROWS_AS(no_fn.validate(), std::invalid_argument);
}

TEST_CASE("aggregator state machine and failed-round accounting") {
    AgentIdentity sp = test_sp();
    RoundConfig cfg = base_config({"did:a"});
    GlobalModel start;
    start.params = init_params(kLayout, 0);
    ModelAggregator mg(cfg, start);

    CHECK_FALSE(mg.round_open());
    CHECK_THROWS_AS(mg.finish_round([](const std::string&) -> std::optional<Bytes> {
        return std::nullopt;
    }), std::logic_error);

    auto reqs = mg.start_round(sp, 0);
    CHECK(mg.round_open());
    CHECK(mg.rounds_started() == 1);
    CHECK_THROWS_AS(mg.start_round(sp, 0), std::logic_error);

    // no updates arrive: the round fails but still consumes its number
    CHECK_THROWS_AS(mg.finish_round([](const std::string&) -> std::optional<Bytes> {
        return std::nullopt;
    }), NoValidUpdatesError);
    CHECK_FALSE(mg.round_open());
    CHECK(mg.model().round == 1);
    REQUIRE(mg.model().history.size() == 1);
    CHECK(mg.model().history[0].participants == 0);
    CHECK(mg.model().params == start.params);  // params untouched by the failure

    // the next round issues fresh request ids
    auto reqs2 = mg.start_round(sp, 0);
    CHECK(reqs2.at("did:a").request_id != reqs.at("did:a").request_id);

    // an update for the closed round is ignored once the round finishes
    ModelAggregator closed(cfg, start);
    closed.on_update(ModelUpdate{});  // no round open: dropped silently
    CHECK_FALSE(closed.round_open());
}

TEST_CASE("run_rounds trains across real enclaves and improves the loss") {
    AgentIdentity sp = test_sp();

    struct Trainer {
        std::string did;
        EnclaveInstance enclave{std::nullopt};
        crypto::SignKeypair source_kp = crypto::sign_keygen(std::nullopt);
        std::vector<DataRecord> records;
    };

    FunctionBundle bundle;
    bundle.function_id = "fn.train";
    bundle.code_spec = code_spec_train(kLayout);
    bundle.output_schema = "train.update.v1";
    bundle.provided_by = "did:pda:zsp";

    std::vector<Trainer> agents(3);
    Measurement m;
    for (std::size_t a = 0; a < agents.size(); ++a) {
        agents[a].did = "did:agent" + std::to_string(a);
        m = agents[a].enclave.load_bundle(bundle);
        for (int i = 0; i < 20; ++i) {
            bool engaged = i % 2 == 0;
            LabeledTitleV1 t{engaged ? "great awesome item " + std::to_string(i)
                                     : "dull boring item " + std::to_string(i),
                             engaged};
            DataRecord r;
            r.record_id = "titles/" + std::to_string(i);
            r.source_id = "titles";
            r.schema_tag = kSchemaLabeledTitle;
            r.payload = canonical_encode(t);
            r.collected_at_ms = i;
            r.source_signature =
                crypto::sign_detached(r.signing_bytes(), agents[a].source_kp.secret_key);
            agents[a].records.push_back(std::move(r));
        }
    }

    RoundConfig cfg = base_config({"did:agent0", "did:agent1", "did:agent2"});
    cfg.rounds_total = 3;
    cfg.min_participants = 3;
    cfg.expected_measurement = m;
    cfg.hyper = TrainHyper{25, 0.5, 0};

    auto find_agent = [&](const std::string& did) -> Trainer& {
        for (Trainer& t : agents)
            if (t.did == did) return t;
        throw std::out_of_range(did);
    };
    SyncTransport send = [&](const std::string& did,
                             const ComputationRequest& re) -> std::optional<ModelUpdate> {
        Trainer& t = find_agent(did);
        Bytes pub = t.source_kp.public_key;
        auto [result, att] = t.enclave.execute(
            re, t.records, [&pub](const std::string&) -> std::optional<Bytes> { return pub; });
        auto body = canonical_decode<TrainResultBody>(result.payload);
        return ModelUpdate{body.round, did, std::move(result), std::move(att)};
    };
    AttKeyResolver att_key = [&](const std::string& did) -> std::optional<Bytes> {
        return find_agent(did).enclave.attestation_public_key();
    };

    GlobalModel start;
    start.params = init_params(kLayout, 0);
    GlobalModel trained = run_rounds(sp, cfg, start, send, att_key, 0);

    CHECK(trained.round == 3);
    REQUIRE(trained.history.size() == 3);
    for (const RoundMetrics& rm : trained.history) {
        CHECK(rm.participants == 3);
        CHECK(rm.rejected == 0);
    }
    CHECK(trained.history[2].mean_loss < trained.history[0].mean_loss);
    CHECK(predict_prob(trained.params, "great awesome item") > 0.7);
    CHECK(predict_prob(trained.params, "dull boring item") < 0.3);

    SUBCASE("a silent cohort raises InsufficientParticipants naming the round") {
        SyncTransport drop_all = [](const std::string&, const ComputationRequest&)
            -> std::optional<ModelUpdate> { return std::nullopt; };
        try {
            run_rounds(sp, cfg, start, drop_all, att_key, 0);
            FAIL("expected InsufficientParticipantsError");
        } catch (const InsufficientParticipantsError& err) {
            CHECK(std::string(err.what()).find("round 1") != std::string::npos);
        }
    }
}

TEST_CASE("model update canonical round trip") {
    auto kp = crypto::sign_keygen(std::nullopt);
    Measurement m;
    m.digest.fill(3);
    auto req = train_request(rid(4), 1);
    ModelUpdate u = attested_update(kp, m, req, "did:x", result_body(1, 2, 42));
    CHECK(canonical_decode<ModelUpdate>(canonical_encode(u)) == u);
}
