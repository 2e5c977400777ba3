#pragma once

#include "pda/analytics.hpp"
#include "pda/enclave.hpp"
#include "pda/identity.hpp"
#include "pda/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pda {

class NoValidUpdatesError : public std::runtime_error {
public:
    NoValidUpdatesError() : std::runtime_error("valid updates below min_participants") {}
};
class InsufficientParticipantsError : public std::runtime_error {
public:
    explicit InsufficientParticipantsError(std::uint32_t round)
        : std::runtime_error("round " + std::to_string(round) +
                             " fell below min_participants") {}
};

struct ModelUpdate {
    std::uint32_t round = 0;
    std::string agent_did;
    ComputeResult result;  // payload decodes as TrainResultBody
    Attestation attestation;

    bool operator==(const ModelUpdate&) const = default;
    void encode_to(Encoder& e) const;
    static ModelUpdate decode_from(Decoder& d);
};

struct RoundMetrics {
    std::uint32_t round = 0;
    std::uint64_t participants = 0;  // updates folded into the aggregate
    std::uint64_t rejected = 0;
    double mean_loss = 0.0;  // arithmetic mean of loss_final over participants

    bool operator==(const RoundMetrics&) const = default;
};

struct GlobalModel {
    ModelParams params;
    std::uint32_t round = 0;
    std::vector<RoundMetrics> history;
};

struct RoundConfig {
    std::vector<std::string> eligible_agents;  // DIDs
    std::uint64_t min_participants = 1;
    std::uint32_t rounds_total = 1;
    TrainHyper hyper;
    std::string function_id;
    Measurement expected_measurement;
    DataSelector selector;
    std::int64_t collect_timeout_ms = 10'000;

    void validate() const;  // throws std::invalid_argument
};

// enclave attestation public key by agent DID, from the agent's DID document
using AttKeyResolver = std::function<std::optional<Bytes>(const std::string& did)>;

// One signed Train request per eligible agent, keyed by agent DID. All carry
// round = current.round + 1 and identical (params, hyper) payloads; request_ids
// derive from (sp, agent, round) so reruns are reproducible.
std::map<std::string, ComputationRequest> distribute(const AgentIdentity& sp,
                                                     const RoundConfig& config,
                                                     const GlobalModel& current,
                                                     std::int64_t now_ms);

struct AggregateOutcome {
    ModelParams params;
    RoundMetrics metrics;
};

// Drops every update that fails the gate: no originating request, round
// mismatch, unresolvable attestation key, vrf failure, undecodable payload,
// layout mismatch, n_samples == 0, or a duplicate of an already-accepted
// agent. Survivors fold in agent-DID order into the sample-weighted mean
// w = sum(n_i * w_i) / sum(n_i). Throws NoValidUpdates below min_participants.
AggregateOutcome aggregate(std::uint32_t round, const std::vector<ModelUpdate>& updates,
                           const std::map<RequestId, ComputationRequest>& requests,
                           const Measurement& expected_measurement,
                           const AttKeyResolver& att_key, std::uint64_t min_participants);

// Round state machine shared by the synchronous driver and the simulated SP
// agent: start_round -> (deliver updates) -> finish_round.
class ModelAggregator {
public:
    ModelAggregator(RoundConfig config, GlobalModel start);

    // signs and returns this round's requests; round_open until finish_round
    std::map<std::string, ComputationRequest> start_round(const AgentIdentity& sp,
                                                          std::int64_t now_ms);
    void on_update(ModelUpdate update);  // ignored when no round is open
    RoundMetrics finish_round(const AttKeyResolver& att_key);

    bool round_open() const { return round_open_; }
    std::uint32_t rounds_started() const { return model_.round + (round_open_ ? 1u : 0u); }
    const RoundConfig& config() const { return config_; }
    const GlobalModel& model() const { return model_; }

private:
    RoundConfig config_;
    GlobalModel model_;
    bool round_open_ = false;
    std::map<RequestId, ComputationRequest> pending_;
    std::vector<ModelUpdate> collected_;
};

// delivers one request to one agent and returns its update, or nullopt
using SyncTransport =
    std::function<std::optional<ModelUpdate>(const std::string& agent_did,
                                             const ComputationRequest& request)>;

// rounds_total iterations of distribute -> collect -> aggregate; throws
// InsufficientParticipants if any round's valid updates fall short
GlobalModel run_rounds(const AgentIdentity& sp, const RoundConfig& config, GlobalModel start,
                       const SyncTransport& send, const AttKeyResolver& att_key,
                       std::int64_t now_ms);

}  // namespace pda
