#include "pda/agents.hpp"

#include <algorithm>
#include <cstdlib>
#include <tuple>

namespace pda {

void AuditEntry::encode_to(Encoder& e) const {
    e.i64(timestamp_ms);
    request_id.encode_to(e);
    e.str(requester_did);
    e.boolean(decision.permitted);
    e.u8(static_cast<std::uint8_t>(decision.reason));
    e.boolean(result_hash.has_value());
    if (result_hash) result_hash->encode_to(e);
    prev_hash.encode_to(e);
}

AuditEntry AuditEntry::decode_from(Decoder& d) {
    AuditEntry a;
    a.timestamp_ms = d.i64();
    a.request_id = RequestId::decode_from(d);
    a.requester_did = d.str();
    a.decision.permitted = d.boolean();
    std::uint8_t r = d.u8();
    if (r > static_cast<std::uint8_t>(DenyReason::ExecutionFailed))
        throw DecodeError("unknown DenyReason discriminant");
    a.decision.reason = static_cast<DenyReason>(r);
    if (d.boolean()) a.result_hash = ContentHash::decode_from(d);
    a.prev_hash = ContentHash::decode_from(d);
    return a;
}

void AuditLog::append(AuditEntry entry) {
    entry.prev_hash = head_;
    head_ = content_hash(canonical_encode(entry));
    entries_.push_back(std::move(entry));
}

bool AuditLog::verify_chain() const {
    ContentHash prev{};
    for (const AuditEntry& e : entries_) {
        if (e.prev_hash != prev) return false;
        prev = content_hash(canonical_encode(e));
    }
    return prev == head_;
}

UserControllerAgent::UserControllerAgent(AgentIdentity identity, AccessPolicy policy,
                                         RecordStore store,
                                         std::optional<crypto::Seed> enclave_seed)
    : identity_(std::move(identity)),
      policy_(std::move(policy)),
      store_(std::move(store)),
      enclave_(enclave_seed) {
    policy_.owner_did = identity_.did;
}

DidDocument UserControllerAgent::did_document() const {
    return identity_.make_document(enclave_.attestation_public_key());
}

void UserControllerAgent::learn_peer(const DidDocument& doc) {
    if (!verify_did_document(doc) || doc.did == identity_.did) return;
    if (!channels_.contains(doc.did)) {
        channels_.emplace(doc.did, establish_channel(identity_, doc));
        peers_.emplace(doc.did, doc);
    }
}

MessageEnvelope UserControllerAgent::pack_message(const std::string& to,
                                                  const WireMessage& message) {
    auto it = channels_.find(to);
    if (it == channels_.end()) throw std::logic_error("no channel to " + to);
    return pack(it->second, encode_wire_message(message));
}

void UserControllerAgent::audit_transport(DenyReason reason, std::int64_t now_ms) {
    AuditEntry entry;
    entry.timestamp_ms = now_ms;
    entry.decision = Decision::deny(reason);
    audit_.append(std::move(entry));
}

void UserControllerAgent::evict_seen(std::int64_t now_ms) {
    std::erase_if(seen_requests_, [&](const auto& kv) {
        return now_ms - kv.second > kReplaySetRetentionMs;
    });
}

std::vector<Outbound> UserControllerAgent::handle_frame(const Frame& frame, std::int64_t now_ms) {
    if (const DidDocument* doc = std::get_if<DidDocument>(&frame)) {
        learn_peer(*doc);
        return {};
    }

    const MessageEnvelope& env = std::get<MessageEnvelope>(frame);
    auto chan = channels_.find(env.sender_did);
    if (chan == channels_.end()) {
        audit_transport(DenyReason::TamperDetected, now_ms);  // unauthenticatable sender
        return {};
    }

    Bytes plaintext;
    try {
        plaintext = unpack(chan->second, env);
    } catch (const ReplayError&) {
        audit_transport(DenyReason::Replay, now_ms);
        return {};
    } catch (const WrongRecipientError&) {
        audit_transport(DenyReason::WrongRecipient, now_ms);
        return {};
    } catch (const TransportError&) {
        audit_transport(DenyReason::TamperDetected, now_ms);
        return {};
    }

    WireMessage message;
    try {
        message = decode_wire_message(plaintext);
    } catch (const DecodeError&) {
        audit_transport(DenyReason::TamperDetected, now_ms);
        return {};
    }

    const ComputationRequest* re = std::get_if<ComputationRequest>(&message);
    if (!re) {
        // authenticated peer sent a message kind this role never consumes
        AuditEntry entry;
        entry.timestamp_ms = now_ms;
        entry.requester_did = env.sender_did;
        entry.decision = Decision::deny(DenyReason::PolicyViolation);
        audit_.append(std::move(entry));
        return {};
    }

    if (auto reply = process_request(*re, env.sender_did, now_ms))
        return {std::move(*reply)};
    return {};
}

std::optional<Outbound> UserControllerAgent::process_request(const ComputationRequest& re,
                                                             const std::string& sender_did,
                                                             std::int64_t now_ms) {
    evict_seen(now_ms);

    AuditEntry entry;
    entry.timestamp_ms = now_ms;
    entry.request_id = re.request_id;
    entry.requester_did = re.requester_did;

    auto deny = [&](DenyReason reason) -> std::optional<Outbound> {
        entry.decision = Decision::deny(reason);
        audit_.append(std::move(entry));
        return Outbound{sender_did, DenyBody{re.request_id, reason}};
    };

    if (seen_requests_.contains(re.request_id)) return deny(DenyReason::Replay);
    seen_requests_.emplace(re.request_id, now_ms);

    if (std::llabs(now_ms - re.issued_at_ms) > kRequestFreshnessMs)
        return deny(DenyReason::Expired);

    // the requester must be the authenticated channel peer; its signature is
    // checked against the key from the peer's DID document
    bool auth_ok = re.requester_did == sender_did &&
                   crypto::sign_verify(re.signing_bytes(), re.requester_signature,
                                       peers_.at(sender_did).signing_public_key);

    Decision decision = allow(policy_, re, auth_ok, now_ms, history_);
    if (!decision.permitted) return deny(decision.reason);

    std::vector<DataRecord> records;
    ComputeResult result;
    Attestation att;
    try {
        records = store_.query(re.selector);
        auto resolver = [this](const std::string& source_id) {
            return store_.source_public_key(source_id);
        };
        std::tie(result, att) = enclave_.execute(re, records, resolver);
    } catch (const std::exception&) {
        // selector/evaluation/input failures after a Permit decision
        return deny(DenyReason::ExecutionFailed);
    }

    history_.record(re.requester_did, re.selector.source_id, now_ms);

    entry.decision = Decision::permit();
    entry.result_hash = content_hash(canonical_encode(result));
    audit_.append(std::move(entry));

    if (re.operation == OperationKind::Train) {
        std::uint32_t round = canonical_decode<TrainRequestBody>(re.function_params).round;
        ModelUpdate update{round, identity_.did, std::move(result), std::move(att)};
        return Outbound{sender_did, std::move(update)};
    }
    return Outbound{sender_did, ResultBody{std::move(result), std::move(att)}};
}

const char* to_string(RequestStatus s) {
    switch (s) {
        case RequestStatus::Pending: return "Pending";
        case RequestStatus::Verified: return "Verified";
        case RequestStatus::Denied: return "Denied";
        case RequestStatus::AttestationInvalid: return "AttestationInvalid";
        case RequestStatus::TimedOut: return "TimedOut";
        case RequestStatus::Collected: return "Collected";
    }
    return "?";
}

SpControllerAgent::SpControllerAgent(AgentIdentity identity) : identity_(std::move(identity)) {}

void SpControllerAgent::learn_peer(const DidDocument& doc) {
    if (!verify_did_document(doc) || doc.did == identity_.did) return;
    if (!channels_.contains(doc.did)) {
        channels_.emplace(doc.did, establish_channel(identity_, doc));
        peers_.emplace(doc.did, doc);
    }
}

std::optional<Bytes> SpControllerAgent::attestation_key_of(const std::string& did) const {
    auto it = peers_.find(did);
    if (it == peers_.end()) return std::nullopt;
    return it->second.attestation_public_key;
}

void SpControllerAgent::register_bundle(const FunctionBundle& bundle,
                                        const Measurement& measurement) {
    bundles_[bundle.function_id] = {bundle, measurement};
}

std::optional<Measurement> SpControllerAgent::measurement_of(
    const std::string& function_id) const {
    auto it = bundles_.find(function_id);
    if (it == bundles_.end()) return std::nullopt;
    return it->second.second;
}

MessageEnvelope SpControllerAgent::pack_message(const std::string& to,
                                                const WireMessage& message) {
    auto it = channels_.find(to);
    if (it == channels_.end()) throw std::logic_error("no channel to " + to);
    return pack(it->second, encode_wire_message(message));
}

std::pair<RequestId, Outbound> SpControllerAgent::make_compute_request(
    const std::string& target_did, const std::string& function_id, OperationKind operation,
    const DataSelector& selector, const Bytes& function_params, std::int64_t now_ms,
    std::int64_t timeout_ms) {
    ComputationRequest re;
    {
        Encoder e;
        e.str("sp-request");
        e.str(identity_.did);
        e.u64(++request_seq_);
        ContentHash h = content_hash(e.take());
        std::copy(h.digest.begin(), h.digest.begin() + 16, re.request_id.id.begin());
    }
    re.requester_did = identity_.did;
    re.operation = operation;
    re.function_id = function_id;
    re.function_params = function_params;
    re.selector = selector;
    re.issued_at_ms = now_ms;
    re.requester_signature = crypto::sign_detached(re.signing_bytes(), identity_.signing.secret_key);

    pending_.emplace(re.request_id, Pending{re, target_did, function_id, now_ms + timeout_ms,
                                            operation == OperationKind::Train});
    outcomes_[re.request_id] = RequestOutcome{};
    RequestId id = re.request_id;
    return {id, Outbound{target_did, std::move(re)}};
}

std::vector<Outbound> SpControllerAgent::handle_frame(const Frame& frame, std::int64_t now_ms) {
    (void)now_ms;
    if (const DidDocument* doc = std::get_if<DidDocument>(&frame)) {
        learn_peer(*doc);
        return {};
    }

    const MessageEnvelope& env = std::get<MessageEnvelope>(frame);
    auto chan = channels_.find(env.sender_did);
    if (chan == channels_.end()) {
        ++transport_rejections_;
        return {};
    }

    Bytes plaintext;
    try {
        plaintext = unpack(chan->second, env);
    } catch (const TransportError&) {
        ++transport_rejections_;
        return {};
    }

    WireMessage message;
    try {
        message = decode_wire_message(plaintext);
    } catch (const DecodeError&) {
        ++transport_rejections_;
        return {};
    }

    if (const DenyBody* deny = std::get_if<DenyBody>(&message)) {
        auto it = pending_.find(deny->request_id);
        if (it != pending_.end() && it->second.target_did == env.sender_did) {
            outcomes_[deny->request_id] = RequestOutcome{RequestStatus::Denied, std::nullopt,
                                                         deny->reason};
            pending_.erase(it);
        }
        return {};
    }

    if (const ResultBody* body = std::get_if<ResultBody>(&message)) {
        auto it = pending_.find(body->result.request_id);
        if (it == pending_.end() || it->second.target_did != env.sender_did) return {};
        auto measurement = measurement_of(it->second.function_id);
        auto att_key = attestation_key_of(env.sender_did);
        bool ok = measurement && att_key &&
                  vrf(*att_key, *measurement, it->second.request, body->result,
                      body->attestation);
        if (ok) {
            outcomes_[body->result.request_id] =
                RequestOutcome{RequestStatus::Verified, body->result, std::nullopt};
        } else {
            outcomes_[body->result.request_id] =
                RequestOutcome{RequestStatus::AttestationInvalid, std::nullopt, std::nullopt};
        }
        pending_.erase(it);
        return {};
    }

    if (const ModelUpdate* update = std::get_if<ModelUpdate>(&message)) {
        auto it = pending_.find(update->result.request_id);
        if (it != pending_.end() && it->second.target_did == env.sender_did &&
            it->second.is_train) {
            outcomes_[update->result.request_id] =
                RequestOutcome{RequestStatus::Collected, std::nullopt, std::nullopt};
            pending_.erase(it);
        }
        if (mg_ && mg_->round_open()) mg_->on_update(*update);
        return {};
    }

    // Request or DidDoc inside an envelope: nothing an SP consumes
    ++transport_rejections_;
    return {};
}

void SpControllerAgent::check_timeouts(std::int64_t now_ms) {
    for (auto it = pending_.begin(); it != pending_.end();) {
        if (it->second.deadline_ms <= now_ms) {
            outcomes_[it->first] = RequestOutcome{RequestStatus::TimedOut, std::nullopt,
                                                  std::nullopt};
            it = pending_.erase(it);
        } else {
            ++it;
        }
    }
}

const RequestOutcome& SpControllerAgent::outcome(const RequestId& id) const {
    return outcomes_.at(id);
}

void SpControllerAgent::configure_rounds(RoundConfig config, GlobalModel start) {
    mg_.emplace(std::move(config), std::move(start));
}

std::vector<Outbound> SpControllerAgent::start_round(std::int64_t now_ms) {
    if (!mg_) throw std::logic_error("rounds not configured");
    auto reqs = mg_->start_round(identity_, now_ms);
    std::vector<Outbound> out;
    for (auto& [agent, re] : reqs) {
        pending_.emplace(re.request_id,
                         Pending{re, agent, re.function_id,
                                 now_ms + mg_->config().collect_timeout_ms, true});
        outcomes_[re.request_id] = RequestOutcome{};
        out.push_back(Outbound{agent, std::move(re)});
    }
    return out;
}

RoundMetrics SpControllerAgent::finish_round() {
    if (!mg_) throw std::logic_error("rounds not configured");
    return mg_->finish_round([this](const std::string& did) { return attestation_key_of(did); });
}

const GlobalModel& SpControllerAgent::fl_model() const {
    if (!mg_) throw std::logic_error("rounds not configured");
    return mg_->model();
}

}  // namespace pda
