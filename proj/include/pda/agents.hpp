#pragma once

#include "pda/access_control.hpp"
#include "pda/enclave.hpp"
#include "pda/federated.hpp"
#include "pda/identity.hpp"
#include "pda/store.hpp"
#include "pda/wire.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pda {

inline constexpr std::int64_t kRequestFreshnessMs = 5 * 60 * 1000;  // +-5 min
inline constexpr std::int64_t kReplaySetRetentionMs = 24 * 60 * 60 * 1000;

struct AuditEntry {
    std::int64_t timestamp_ms = 0;
    RequestId request_id;       // zero for transport-level entries
    std::string requester_did;  // empty when the sender could not be authenticated
    Decision decision;
    std::optional<ContentHash> result_hash;
    ContentHash prev_hash;  // zero for the first entry

    bool operator==(const AuditEntry&) const = default;
    void encode_to(Encoder& e) const;
    static AuditEntry decode_from(Decoder& d);
};

// Hash-chained decision log: every entry commits to its predecessor, so any
// single-entry mutation breaks verify_chain.
class AuditLog {
public:
    void append(AuditEntry entry);  // overwrites entry.prev_hash with the chain head
    bool verify_chain() const;
    ContentHash head() const { return head_; }
    const std::vector<AuditEntry>& entries() const { return entries_; }

private:
    std::vector<AuditEntry> entries_;
    ContentHash head_{};  // zero before the first append
};

// a message this agent wants delivered; the transport packs and ships it
struct Outbound {
    std::string to;
    WireMessage message;
};

// Receive pipeline: unpack -> decode -> replay check -> freshness -> Allow ->
// query -> enclave execute -> reply. Every delivered envelope appends exactly
// one audit entry; transport failures audit without replying.
class UserControllerAgent {
public:
    UserControllerAgent(AgentIdentity identity, AccessPolicy policy, RecordStore store,
                        std::optional<crypto::Seed> enclave_seed = std::nullopt);

    UserControllerAgent(const UserControllerAgent&) = delete;
    UserControllerAgent& operator=(const UserControllerAgent&) = delete;

    const std::string& did() const { return identity_.did; }
    DidDocument did_document() const;

    void learn_peer(const DidDocument& doc);  // ignores invalid documents
    bool knows_peer(const std::string& did) const { return channels_.contains(did); }

    std::vector<Outbound> handle_frame(const Frame& frame, std::int64_t now_ms);

    MessageEnvelope pack_message(const std::string& to, const WireMessage& message);

    EnclaveInstance& enclave() { return enclave_; }
    RecordStore& store() { return store_; }
    const RecordStore& store() const { return store_; }
    AccessPolicy& policy() { return policy_; }
    const AuditLog& audit() const { return audit_; }

private:
    void audit_transport(DenyReason reason, std::int64_t now_ms);
    std::optional<Outbound> process_request(const ComputationRequest& re,
                                            const std::string& sender_did, std::int64_t now_ms);
    void evict_seen(std::int64_t now_ms);

    AgentIdentity identity_;
    AccessPolicy policy_;
    RecordStore store_;
    EnclaveInstance enclave_;
    std::map<std::string, DidDocument> peers_;
    std::map<std::string, SecureChannel> channels_;
    std::map<RequestId, std::int64_t> seen_requests_;  // first-seen time, 24 h retention
    RequestHistory history_;
    AuditLog audit_;
};

enum class RequestStatus : std::uint8_t {
    Pending = 0,
    Verified = 1,    // result arrived and vrf passed
    Denied = 2,
    AttestationInvalid = 3,
    TimedOut = 4,
    Collected = 5,   // train reply buffered; vrf happens at aggregation
};

const char* to_string(RequestStatus s);

struct RequestOutcome {
    RequestStatus status = RequestStatus::Pending;
    std::optional<ComputeResult> result;  // set when Verified
    std::optional<DenyReason> deny_reason;
};

// Issues signed requests, verifies attested replies, and drives the model
// aggregator for training rounds.
class SpControllerAgent {
public:
    explicit SpControllerAgent(AgentIdentity identity);

    const std::string& did() const { return identity_.did; }
    const AgentIdentity& identity() const { return identity_; }
    DidDocument did_document() const { return identity_.make_document(); }

    void learn_peer(const DidDocument& doc);
    bool knows_peer(const std::string& did) const { return channels_.contains(did); }
    std::optional<Bytes> attestation_key_of(const std::string& did) const;

    // the bundle this SP provisions; measurement must match the enclave's
    void register_bundle(const FunctionBundle& bundle, const Measurement& measurement);
    std::optional<Measurement> measurement_of(const std::string& function_id) const;

    std::pair<RequestId, Outbound> make_compute_request(const std::string& target_did,
                                                        const std::string& function_id,
                                                        OperationKind operation,
                                                        const DataSelector& selector,
                                                        const Bytes& function_params,
                                                        std::int64_t now_ms,
                                                        std::int64_t timeout_ms);

    std::vector<Outbound> handle_frame(const Frame& frame, std::int64_t now_ms);
    MessageEnvelope pack_message(const std::string& to, const WireMessage& message);

    void check_timeouts(std::int64_t now_ms);
    const RequestOutcome& outcome(const RequestId& id) const;  // throws std::out_of_range
    const std::map<RequestId, RequestOutcome>& outcomes() const { return outcomes_; }
    std::uint64_t transport_rejections() const { return transport_rejections_; }

    // federated rounds
    void configure_rounds(RoundConfig config, GlobalModel start);
    bool rounds_configured() const { return mg_.has_value(); }
    std::vector<Outbound> start_round(std::int64_t now_ms);
    RoundMetrics finish_round();  // throws NoValidUpdatesError
    bool round_open() const { return mg_ && mg_->round_open(); }
    const GlobalModel& fl_model() const;

private:
    struct Pending {
        ComputationRequest request;
        std::string target_did;
        std::string function_id;
        std::int64_t deadline_ms = 0;
        bool is_train = false;
    };

    AgentIdentity identity_;
    std::map<std::string, DidDocument> peers_;
    std::map<std::string, SecureChannel> channels_;
    std::map<std::string, std::pair<FunctionBundle, Measurement>> bundles_;
    std::map<RequestId, Pending> pending_;
    std::map<RequestId, RequestOutcome> outcomes_;
    std::uint64_t transport_rejections_ = 0;
    std::uint64_t request_seq_ = 0;  // request ids derive from (did, seq): reproducible runs
    std::optional<ModelAggregator> mg_;
};

}  // namespace pda
