#pragma once

#include "pda/simnet.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pda {

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

struct ScenarioSource {
    std::string source_id;
    std::string schema_tag = kSchemaPost;
    std::vector<std::string> items;  // one JSON object per record
    std::int64_t collected_at_start_ms = 1'000;
    std::int64_t collected_at_step_ms = 1;
};

struct ScenarioGrant {
    std::string source_id;
    OperationKind operation = OperationKind::Compute;
    std::optional<std::int64_t> expires_at_ms;
};

struct ScenarioPolicy {
    std::string source_id;
    ComputationPolicy policy;
};

struct ScenarioUser {
    std::optional<crypto::Seed> seed;  // derived from the sim seed and index when absent
    std::vector<ScenarioSource> sources;
    std::vector<ScenarioGrant> grants;
    std::vector<ScenarioPolicy> policies;
};

struct ComputeAction {
    std::int64_t at_ms = 100;
    std::size_t user = 0;
    std::string function_id;
    OperationKind operation = OperationKind::Compute;
    DataSelector selector;
    std::int64_t timeout_ms = 5'000;
};

struct TrainPlan {
    std::int64_t start_ms = 100;
    std::uint32_t rounds = 1;
    std::string function_id;
    DataSelector selector;
    ModelLayout layout;
    TrainHyper hyper;
    std::uint64_t min_participants = 1;
    std::int64_t collect_timeout_ms = 2'000;
    std::int64_t round_gap_ms = 100;
};

// Complete declarative description of one simulated run. Everything the run
// does is a function of this value, so equal specs give byte-equal traces.
struct ScenarioSpec {
    SimConfig sim;
    std::optional<crypto::Seed> sp_seed;
    std::vector<ScenarioUser> users;
    std::vector<FunctionBundle> functions;  // empty provided_by is filled with the SP did
    std::vector<ComputeAction> computes;
    std::optional<TrainPlan> train;
    ExecOverhead enclave_overhead{};  // zero = free simulated enclave

    void validate() const;  // throws ScenarioError
};

struct ScenarioResult {
    EventTrace trace;
    std::string sp_did;
    std::vector<std::string> user_dids;
    std::map<RequestId, RequestOutcome> outcomes;
    std::uint64_t transport_rejections = 0;
    std::optional<GlobalModel> fl_model;
    std::map<std::string, std::set<WireKind>> outbound_kinds;    // per sender did
    std::map<std::string, std::vector<Bytes>> outbound_frames;   // per sender did, send order
    std::uint64_t envelopes_sent = 0;
    std::uint64_t envelopes_delivered = 0;
    std::uint64_t envelopes_dropped = 0;
};

ScenarioResult run_scenario(const ScenarioSpec& spec);  // throws ScenarioError

ScenarioSpec scenario_from_json(const std::string& text);  // throws ScenarioError

// one {"function_id", "family", ...} object, same shape as a scenario's
// functions entry
FunctionBundle function_bundle_from_json(const std::string& text);  // throws ScenarioError

}  // namespace pda
