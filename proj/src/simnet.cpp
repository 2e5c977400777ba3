#include "pda/simnet.hpp"

#include "json.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

namespace pda {

using nlohmann::json;

const char* to_string(AdversaryMode mode) {
    switch (mode) {
        case AdversaryMode::None: return "None";
        case AdversaryMode::TamperEnvelope: return "TamperEnvelope";
        case AdversaryMode::ReplayEnvelope: return "ReplayEnvelope";
        case AdversaryMode::InjectForgedRequest: return "InjectForgedRequest";
        case AdversaryMode::TamperResult: return "TamperResult";
        case AdversaryMode::ForgeAttestation: return "ForgeAttestation";
        case AdversaryMode::PoisonUpdate: return "PoisonUpdate";
    }
    return "?";
}

std::optional<AdversaryMode> adversary_mode_from_string(std::string_view s) {
    for (int i = 0; i <= 6; ++i) {
        auto mode = static_cast<AdversaryMode>(i);
        if (s == to_string(mode)) return mode;
    }
    return std::nullopt;
}

void AdversarySpec::validate() const {
    if (!(probability >= 0.0 && probability <= 1.0))
        throw std::invalid_argument("adversary probability outside [0,1]");
}

void SimConfig::validate() const {
    if (!(drop_rate >= 0.0 && drop_rate <= 1.0))
        throw std::invalid_argument("drop_rate outside [0,1]");
    if (latency.min_ms < 0 || latency.max_ms < latency.min_ms)
        throw std::invalid_argument("latency range invalid");
    if (duration_ms <= 0) throw std::invalid_argument("duration must be positive");
    adversary.validate();
}

std::string EventTrace::to_jsonl() const {
    std::ostringstream out;
    for (const TraceEvent& e : events) {
        json j;
        j["t"] = e.time_ms;
        j["seq"] = e.seq;
        j["kind"] = e.kind;
        j["actor"] = e.actor;
        j["detail"] = e.detail;
        j["hash"] = e.payload_hash;
        out << j.dump() << '\n';
    }
    return out.str();
}

EventTrace EventTrace::from_jsonl(const std::string& text) {
    EventTrace trace;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object()) throw std::runtime_error("bad trace line: " + line);
        TraceEvent e;
        e.time_ms = j.at("t").get<std::int64_t>();
        e.seq = j.at("seq").get<std::uint64_t>();
        e.kind = j.at("kind").get<std::string>();
        e.actor = j.at("actor").get<std::string>();
        e.detail = j.at("detail").get<std::string>();
        e.payload_hash = j.at("hash").get<std::string>();
        trace.events.push_back(std::move(e));
    }
    return trace;
}

static std::string message_request_hex(const WireMessage& m) {
    if (const auto* re = std::get_if<ComputationRequest>(&m)) return re->request_id.hex();
    if (const auto* deny = std::get_if<DenyBody>(&m)) return deny->request_id.hex();
    if (const auto* res = std::get_if<ResultBody>(&m)) return res->result.request_id.hex();
    if (const auto* up = std::get_if<ModelUpdate>(&m)) return up->result.request_id.hex();
    return "";
}

void UcNode::on_frame(Simulator& sim, const Frame& frame) {
    std::vector<Outbound> out = agent_->handle_frame(frame, sim.now());
    emit_audit_delta(sim);
    for (const Outbound& ob : out) sim.send(*this, ob);
}

void UcNode::emit_audit_delta(Simulator& sim) {
    const auto& entries = agent_->audit().entries();
    for (; audited_ < entries.size(); ++audited_) {
        const AuditEntry& e = entries[audited_];
        std::string detail = "req=" + e.request_id.hex() + " requester=" + e.requester_did;
        if (e.decision.permitted) {
            sim.emit("permit", did(), detail, e.result_hash ? e.result_hash->hex() : "");
        } else {
            sim.emit("deny", did(),
                     std::string("reason=") + to_string(e.decision.reason) + " " + detail);
        }
    }
}

void SpNode::on_frame(Simulator& sim, const Frame& frame) {
    std::vector<Outbound> out = agent_->handle_frame(frame, sim.now());
    sync_outcomes(sim);
    for (const Outbound& ob : out) sim.send(*this, ob);
}

void SpNode::sync_outcomes(Simulator& sim) {
    for (const auto& [id, outcome] : agent_->outcomes()) {
        auto it = known_.find(id);
        if (it != known_.end() && it->second == outcome.status) continue;
        known_[id] = outcome.status;
        if (outcome.status == RequestStatus::Pending) continue;
        std::string kind;
        std::string detail = "req=" + id.hex();
        switch (outcome.status) {
            case RequestStatus::Verified: kind = "sp_verified"; break;
            case RequestStatus::Denied:
                kind = "sp_denied";
                if (outcome.deny_reason)
                    detail += std::string(" reason=") + to_string(*outcome.deny_reason);
                break;
            case RequestStatus::AttestationInvalid: kind = "sp_att_invalid"; break;
            case RequestStatus::TimedOut: kind = "sp_timeout"; break;
            case RequestStatus::Collected: kind = "sp_collected"; break;
            case RequestStatus::Pending: break;
        }
        sim.emit(kind, did(), detail);
    }
}

static std::uint64_t stream_seed(std::uint64_t seed, const char* name) {
    Encoder e;
    e.u64(seed);
    e.raw(to_bytes(name));
    ContentHash h = content_hash(e.take());
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | h.digest[static_cast<std::size_t>(i)];
    return v;
}

static crypto::Seed derived_seed(std::uint64_t seed, const char* name) {
    Encoder e;
    e.u64(seed);
    e.raw(to_bytes(name));
    return content_hash(e.take()).digest;
}

Simulator::Simulator(SimConfig config)
    : config_(std::move(config)),
      latency_rng_(stream_seed(config_.seed, "latency")),
      drop_rng_(stream_seed(config_.seed, "drop")),
      adv_rng_(stream_seed(config_.seed, "adversary")),
      adv_keypair_(crypto::sign_keygen(derived_seed(config_.seed, "adversary-key"))) {
    config_.validate();
}

void Simulator::add_node(SimNode& node) {
    if (!nodes_.emplace(node.did(), &node).second)
        throw std::invalid_argument("duplicate node did: " + node.did());
}

void Simulator::at(std::int64_t time_ms, std::function<void(Simulator&)> action) {
    QueuedEvent ev;
    ev.time_ms = time_ms;
    ev.seq = next_seq_++;
    ev.action = std::move(action);
    ev.is_action = true;
    queue_.push(std::move(ev));
}

void Simulator::emit(const std::string& kind, const std::string& actor, const std::string& detail,
                     const std::string& payload_hash) {
    trace_.events.push_back(TraceEvent{now_ms_, next_seq_++, kind, actor, detail, payload_hash});
}

std::int64_t Simulator::sample_latency() {
    if (config_.latency.max_ms == config_.latency.min_ms) return config_.latency.min_ms;
    std::uint64_t span = static_cast<std::uint64_t>(config_.latency.max_ms -
                                                    config_.latency.min_ms) + 1;
    return config_.latency.min_ms + static_cast<std::int64_t>(latency_rng_() % span);
}

bool Simulator::roll(std::mt19937_64& rng, double probability) {
    if (probability >= 1.0) return true;
    if (probability <= 0.0) return false;
    double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    return u < probability;
}

bool Simulator::adversary_targets(const std::string& from, const std::string& to) const {
    const std::string& t = config_.adversary.target_did;
    return t.empty() || t == from || t == to;
}

void Simulator::schedule_frame(const std::string& from, const std::string& to, Frame frame,
                               bool reliable) {
    bool is_envelope = std::holds_alternative<MessageEnvelope>(frame);
    if (!reliable && roll(drop_rng_, config_.drop_rate)) {
        if (is_envelope) ++envelopes_dropped_;
        emit("drop", to, "from=" + from);
        return;
    }
    std::int64_t t = now_ms_ + sample_latency();
    auto& clock = link_clock_[{from, to}];
    if (t < clock) t = clock;  // FIFO per ordered pair, preserves counter order
    clock = t;

    QueuedEvent ev;
    ev.time_ms = t;
    ev.seq = next_seq_++;
    ev.to = to;
    ev.frame = std::move(frame);
    ev.is_envelope = is_envelope;
    queue_.push(std::move(ev));
}

std::vector<WireMessage> Simulator::apply_boundary_adversary(const std::string& from,
                                                             const std::string& to,
                                                             WireMessage message) {
    const AdversaryMode mode = config_.adversary.mode;
    std::vector<WireMessage> out;

    auto eligible = [&](bool kind_matches) {
        return kind_matches && adversary_targets(from, to) &&
               roll(adv_rng_, config_.adversary.probability);
    };

    if (mode == AdversaryMode::TamperResult) {
        Bytes* payload = nullptr;
        if (auto* res = std::get_if<ResultBody>(&message)) payload = &res->result.payload;
        if (auto* up = std::get_if<ModelUpdate>(&message)) payload = &up->result.payload;
        if (payload && eligible(true)) {
            if (payload->empty()) payload->push_back(0xff);
            else (*payload)[adv_rng_() % payload->size()] ^= static_cast<std::uint8_t>(
                     1u << (adv_rng_() % 8));
            emit("adv_tamper_result", "adversary",
                 "req=" + message_request_hex(message) + " agent=" + from);
        }
    } else if (mode == AdversaryMode::ForgeAttestation) {
        Attestation* att = nullptr;
        if (auto* res = std::get_if<ResultBody>(&message)) att = &res->attestation;
        if (auto* up = std::get_if<ModelUpdate>(&message)) att = &up->attestation;
        if (att && eligible(true)) {
            att->enclave_signature = crypto::sign_detached(att->signing_bytes(),
                                                           adv_keypair_.secret_key);
            emit("adv_forge_att", "adversary",
                 "req=" + message_request_hex(message) + " agent=" + from);
        }
    } else if (mode == AdversaryMode::PoisonUpdate) {
        if (auto* up = std::get_if<ModelUpdate>(&message); up && eligible(true)) {
            try {
                TrainResultBody body = canonical_decode<TrainResultBody>(up->result.payload);
                for (double& w : body.model_out.weights) w = w * 10.0 + 1.0;
                ModelUpdate poisoned = *up;  // stale attestation: result_hash no longer matches
                poisoned.result.payload = canonical_encode(body);
                emit("adv_poison", "adversary",
                     "req=" + message_request_hex(message) + " agent=" + from);
                out.push_back(message);
                out.push_back(std::move(poisoned));
                return out;
            } catch (const DecodeError&) {
            }
        }
    }

    out.push_back(std::move(message));
    return out;
}

Frame Simulator::apply_wire_adversary(const std::string& from, const std::string& to, Frame frame,
                                      const std::string& req_hex) {
    const AdversaryMode mode = config_.adversary.mode;
    auto* env = std::get_if<MessageEnvelope>(&frame);
    if (!env || !adversary_targets(from, to)) return frame;

    if (mode == AdversaryMode::TamperEnvelope && roll(adv_rng_, config_.adversary.probability)) {
        if (env->ciphertext.empty()) env->aead_tag[0] ^= 0x01;
        else env->ciphertext[adv_rng_() % env->ciphertext.size()] ^=
                 static_cast<std::uint8_t>(1u << (adv_rng_() % 8));
        emit("adv_tamper_env", "adversary", "req=" + req_hex + " from=" + from + " to=" + to);
    } else if (mode == AdversaryMode::ReplayEnvelope &&
               roll(adv_rng_, config_.adversary.probability)) {
        emit("adv_replay_env", "adversary", "req=" + req_hex + " from=" + from + " to=" + to);
        schedule_frame(from, to, frame, /*reliable=*/false);  // duplicate lands after original
    } else if (mode == AdversaryMode::InjectForgedRequest &&
               roll(adv_rng_, config_.adversary.probability)) {
        MessageEnvelope forged;
        forged.sender_did = from;  // spoofed; the signature cannot match
        forged.recipient_did = to;
        forged.counter = 1'000'000'000u + adv_rng_() % 1000u;
        forged.ciphertext.resize(64);
        for (auto& b : forged.ciphertext) b = static_cast<std::uint8_t>(adv_rng_());
        for (auto& b : forged.aead_tag) b = static_cast<std::uint8_t>(adv_rng_());
        forged.sender_signature = crypto::sign_detached(forged.signing_bytes(),
                                                        adv_keypair_.secret_key);
        emit("adv_inject", "adversary", "from=" + from + " to=" + to);
        schedule_frame(from, to, Frame{std::move(forged)}, /*reliable=*/false);
    }
    return frame;
}

void Simulator::send(SimNode& from, const Outbound& outbound) {
    std::vector<WireMessage> messages =
        apply_boundary_adversary(from.did(), outbound.to, outbound.message);

    for (WireMessage& message : messages) {
        std::string req_hex = message_request_hex(message);
        MessageEnvelope env = from.pack_for(outbound.to, message);
        Frame frame{std::move(env)};
        Bytes frame_bytes = encode_frame(frame);
        outbound_frames_[from.did()].push_back(frame_bytes);
        outbound_kinds_[from.did()].insert(wire_kind(message));
        ++envelopes_sent_;
        emit("send", from.did(),
             std::string("kind=") + to_string(wire_kind(message)) + " to=" + outbound.to +
                 (req_hex.empty() ? "" : " req=" + req_hex),
             content_hash(frame_bytes).hex());

        frame = apply_wire_adversary(from.did(), outbound.to, std::move(frame), req_hex);
        schedule_frame(from.did(), outbound.to, std::move(frame), /*reliable=*/false);
    }
}

void Simulator::announce(SimNode& from) {
    DidDocument doc = from.announcement();
    Frame frame{doc};
    Bytes frame_bytes = encode_frame(frame);
    outbound_frames_[from.did()].push_back(frame_bytes);
    outbound_kinds_[from.did()].insert(WireKind::DidDoc);
    emit("send", from.did(), "kind=DidDoc to=*", content_hash(frame_bytes).hex());
    for (const auto& [did, node] : nodes_) {
        if (did == from.did()) continue;
        schedule_frame(from.did(), did, frame, /*reliable=*/true);
    }
}

void Simulator::deliver(const QueuedEvent& ev) {
    auto it = nodes_.find(ev.to);
    if (it == nodes_.end()) {
        emit("drop", ev.to, "unknown recipient");
        return;
    }
    if (ev.is_envelope) ++envelopes_delivered_;
    emit("deliver", ev.to, std::string("frame=") + (ev.is_envelope ? "env" : "doc"),
         content_hash(encode_frame(ev.frame)).hex());
    it->second->on_frame(*this, ev.frame);
}

void Simulator::run() {
    while (!queue_.empty()) {
        if (queue_.top().time_ms > config_.duration_ms) break;
        QueuedEvent ev = queue_.top();
        queue_.pop();
        now_ms_ = ev.time_ms;
        if (ev.is_action) {
            ev.action(*this);
        } else {
            deliver(ev);
        }
    }
}

const std::vector<Bytes>& Simulator::outbound_frames(const std::string& did) const {
    static const std::vector<Bytes> empty;
    auto it = outbound_frames_.find(did);
    return it == outbound_frames_.end() ? empty : it->second;
}

const std::set<WireKind>& Simulator::outbound_kinds(const std::string& did) const {
    static const std::set<WireKind> empty;
    auto it = outbound_kinds_.find(did);
    return it == outbound_kinds_.end() ? empty : it->second;
}

const char* to_string(SecurityProperty p) {
    switch (p) {
        case SecurityProperty::NoUnauthorizedPermit: return "NoUnauthorizedPermit";
        case SecurityProperty::AllTamperRejected: return "AllTamperRejected";
        case SecurityProperty::AllForgedAttRejected: return "AllForgedAttRejected";
        case SecurityProperty::PoisonExcluded: return "PoisonExcluded";
    }
    return "?";
}

std::optional<SecurityProperty> security_property_from_string(std::string_view s) {
    for (int i = 0; i <= 3; ++i) {
        auto p = static_cast<SecurityProperty>(i);
        if (s == to_string(p)) return p;
    }
    return std::nullopt;
}

static std::string detail_field(const std::string& detail, const std::string& key) {
    auto pos = detail.find(key + "=");
    if (pos == std::string::npos) return "";
    pos += key.size() + 1;
    auto end = detail.find(' ', pos);
    return detail.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

SecurityCheck assert_security(const EventTrace& trace, SecurityProperty property) {
    SecurityCheck check;

    if (property == SecurityProperty::NoUnauthorizedPermit) {
        for (const TraceEvent& e : trace.events)
            if (e.kind == "permit") check.counterexamples.push_back(e);
        check.holds = check.counterexamples.empty();
        return check;
    }

    if (property == SecurityProperty::AllTamperRejected ||
        property == SecurityProperty::AllForgedAttRejected) {
        std::set<std::string> attacked;
        for (const TraceEvent& e : trace.events) {
            bool relevant = property == SecurityProperty::AllTamperRejected
                                ? (e.kind == "adv_tamper_env" || e.kind == "adv_tamper_result")
                                : e.kind == "adv_forge_att";
            if (relevant) {
                std::string req = detail_field(e.detail, "req");
                if (!req.empty()) attacked.insert(req);
            }
        }
        for (const TraceEvent& e : trace.events) {
            if (e.kind == "sp_verified" && attacked.contains(detail_field(e.detail, "req")))
                check.counterexamples.push_back(e);
        }
        check.holds = check.counterexamples.empty();
        return check;
    }

    // PoisonExcluded: every aggregation interval must reject at least as many
    // updates as the adversary poisoned in it
    std::uint64_t poisoned = 0;
    for (const TraceEvent& e : trace.events) {
        if (e.kind == "adv_poison") {
            ++poisoned;
        } else if (e.kind == "round_done") {
            std::uint64_t rejected = 0;
            std::string r = detail_field(e.detail, "rejected");
            if (!r.empty()) rejected = std::strtoull(r.c_str(), nullptr, 10);
            if (rejected < poisoned) check.counterexamples.push_back(e);
            poisoned = 0;
        }
    }
    check.holds = check.counterexamples.empty();
    return check;
}

}  // namespace pda
