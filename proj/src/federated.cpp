#include "pda/federated.hpp"

#include <algorithm>

namespace pda {

void ModelUpdate::encode_to(Encoder& e) const {
    e.u32(round);
    e.str(agent_did);
    result.encode_to(e);
    attestation.encode_to(e);
}

ModelUpdate ModelUpdate::decode_from(Decoder& d) {
    ModelUpdate u;
    u.round = d.u32();
    u.agent_did = d.str();
    u.result = ComputeResult::decode_from(d);
    u.attestation = Attestation::decode_from(d);
    return u;
}

void RoundConfig::validate() const {
    if (eligible_agents.empty()) throw std::invalid_argument("no eligible agents");
    if (min_participants < 1) throw std::invalid_argument("min_participants must be >= 1");
    if (min_participants > eligible_agents.size())
        throw std::invalid_argument("min_participants exceeds eligible agents");
    if (rounds_total < 1) throw std::invalid_argument("rounds_total must be >= 1");
    if (function_id.empty()) throw std::invalid_argument("function_id empty");
    selector.validate();
}

static RequestId round_request_id(const std::string& sp_did, const std::string& agent_did,
                                  std::uint32_t round) {
    Encoder e;
    e.str("fl-request");
    e.str(sp_did);
    e.str(agent_did);
    e.u32(round);
    ContentHash h = content_hash(e.take());
    RequestId id;
    std::copy(h.digest.begin(), h.digest.begin() + 16, id.id.begin());
    return id;
}

std::map<std::string, ComputationRequest> distribute(const AgentIdentity& sp,
                                                     const RoundConfig& config,
                                                     const GlobalModel& current,
                                                     std::int64_t now_ms) {
    config.validate();
    const std::uint32_t round = current.round + 1;

    TrainRequestBody body;
    body.round = round;
    body.model_in = current.params;
    body.hyper = config.hyper;
    Bytes params_bytes = canonical_encode(body);

    std::map<std::string, ComputationRequest> out;
    for (const std::string& agent : config.eligible_agents) {
        ComputationRequest re;
        re.request_id = round_request_id(sp.did, agent, round);
        re.requester_did = sp.did;
        re.operation = OperationKind::Train;
        re.function_id = config.function_id;
        re.function_params = params_bytes;
        re.selector = config.selector;
        re.issued_at_ms = now_ms;
        re.requester_signature = crypto::sign_detached(re.signing_bytes(), sp.signing.secret_key);
        out.emplace(agent, std::move(re));
    }
    return out;
}

AggregateOutcome aggregate(std::uint32_t round, const std::vector<ModelUpdate>& updates,
                           const std::map<RequestId, ComputationRequest>& requests,
                           const Measurement& expected_measurement,
                           const AttKeyResolver& att_key, std::uint64_t min_participants) {
    // first valid update per agent wins; later copies count as rejected
    std::map<std::string, TrainResultBody> accepted;
    std::uint64_t rejected = 0;

    for (const ModelUpdate& u : updates) {
        auto req = requests.find(u.result.request_id);
        bool ok = req != requests.end() && u.round == round;
        if (ok) {
            std::optional<Bytes> key = att_key(u.agent_did);
            ok = key && vrf(*key, expected_measurement, req->second, u.result, u.attestation);
        }
        std::optional<TrainResultBody> body;
        if (ok) {
            try {
                body = canonical_decode<TrainResultBody>(u.result.payload);
                body->model_out.validate();
            } catch (const DecodeError&) {
                body.reset();
            } catch (const EvaluationError&) {
                body.reset();
            }
        }
        if (!body || body->round != round || body->n_samples == 0 ||
            accepted.contains(u.agent_did)) {
            ++rejected;
            continue;
        }
        accepted.emplace(u.agent_did, std::move(*body));
    }

    if (accepted.size() < min_participants) throw NoValidUpdatesError();

    // FedAvg over the survivors, folded in agent-DID order (map iteration)
    const ModelLayout layout = accepted.begin()->second.model_out.layout;
    std::vector<double> sum(layout.weight_count(), 0.0);
    double total_samples = 0.0;
    double loss_sum = 0.0;
    for (const auto& [did, body] : accepted) {
        if (body.model_out.layout != layout)
            throw NoValidUpdatesError();  // mixed layouts cannot be averaged
        double n = static_cast<double>(body.n_samples);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += n * body.model_out.weights[i];
        total_samples += n;
        loss_sum += body.loss_final;
    }

    AggregateOutcome out;
    out.params.layout = layout;
    out.params.weights.resize(sum.size());
    for (std::size_t i = 0; i < sum.size(); ++i) out.params.weights[i] = sum[i] / total_samples;
    out.metrics.round = round;
    out.metrics.participants = accepted.size();
    out.metrics.rejected = rejected;
    out.metrics.mean_loss = loss_sum / static_cast<double>(accepted.size());
    return out;
}

ModelAggregator::ModelAggregator(RoundConfig config, GlobalModel start)
    : config_(std::move(config)), model_(std::move(start)) {
    config_.validate();
}

std::map<std::string, ComputationRequest> ModelAggregator::start_round(const AgentIdentity& sp,
                                                                       std::int64_t now_ms) {
    if (round_open_) throw std::logic_error("round already open");
    auto reqs = distribute(sp, config_, model_, now_ms);
    pending_.clear();
    for (const auto& [agent, re] : reqs) pending_.emplace(re.request_id, re);
    collected_.clear();
    round_open_ = true;
    return reqs;
}

void ModelAggregator::on_update(ModelUpdate update) {
    if (!round_open_) return;  // straggler from a closed round
    collected_.push_back(std::move(update));
}

RoundMetrics ModelAggregator::finish_round(const AttKeyResolver& att_key) {
    if (!round_open_) throw std::logic_error("no round open");
    const std::uint32_t round = model_.round + 1;
    std::vector<ModelUpdate> collected = std::move(collected_);
    std::map<RequestId, ComputationRequest> requests = std::move(pending_);
    collected_.clear();
    pending_.clear();
    round_open_ = false;
    AggregateOutcome outcome;
    try {
        outcome = aggregate(round, collected, requests, config_.expected_measurement, att_key,
                            config_.min_participants);
    } catch (const NoValidUpdatesError&) {
        // the failed attempt still consumes its round number, so the next
        // attempt's request ids cannot collide with already-seen ones
        model_.round = round;
        model_.history.push_back(RoundMetrics{round, 0, collected.size(), 0.0});
        throw;
    }
    model_.params = std::move(outcome.params);
    model_.round = round;
    model_.history.push_back(outcome.metrics);
    return outcome.metrics;
}

GlobalModel run_rounds(const AgentIdentity& sp, const RoundConfig& config, GlobalModel start,
                       const SyncTransport& send, const AttKeyResolver& att_key,
                       std::int64_t now_ms) {
    ModelAggregator mg(config, std::move(start));
    for (std::uint32_t r = 0; r < config.rounds_total; ++r) {
        auto reqs = mg.start_round(sp, now_ms);
        for (const auto& [agent, re] : reqs) {
            if (auto update = send(agent, re)) mg.on_update(std::move(*update));
        }
        try {
            mg.finish_round(att_key);
        } catch (const NoValidUpdatesError&) {
            // finish_round has already advanced past the failed round
            throw InsufficientParticipantsError(mg.model().round);
        }
    }
    return mg.model();
}

}  // namespace pda
