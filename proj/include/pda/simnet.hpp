#pragma once

#include "pda/agents.hpp"
#include "pda/wire.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pda {

struct LatencyModel {
    std::int64_t min_ms = 5;
    std::int64_t max_ms = 20;  // min == max models fixed latency
};

enum class AdversaryMode : std::uint8_t {
    None = 0,
    TamperEnvelope = 1,
    ReplayEnvelope = 2,
    InjectForgedRequest = 3,
    TamperResult = 4,
    ForgeAttestation = 5,
    PoisonUpdate = 6,
};

const char* to_string(AdversaryMode mode);
std::optional<AdversaryMode> adversary_mode_from_string(std::string_view s);

// TamperEnvelope / ReplayEnvelope / InjectForgedRequest act on packed frames
// in flight; TamperResult / ForgeAttestation / PoisonUpdate act at the
// compromised agent's messaging boundary, on the plaintext reply after the
// enclave produced it. docs/threat-matrix.md maps each mode to the threat
// sentence it implements.
struct AdversarySpec {
    AdversaryMode mode = AdversaryMode::None;
    std::string target_did;    // empty = any sender/recipient
    double probability = 1.0;  // activation per eligible message

    void validate() const;  // throws std::invalid_argument
};

struct SimConfig {
    std::uint64_t seed = 0;
    LatencyModel latency;
    double drop_rate = 0.0;
    AdversarySpec adversary;
    std::int64_t duration_ms = 60'000;

    void validate() const;
};

struct TraceEvent {
    std::int64_t time_ms = 0;
    std::uint64_t seq = 0;
    std::string kind;
    std::string actor;
    std::string detail;        // stable-format key=value text
    std::string payload_hash;  // hex content hash of the frame, when one exists

    bool operator==(const TraceEvent&) const = default;
};

struct EventTrace {
    std::vector<TraceEvent> events;

    std::string to_jsonl() const;
    static EventTrace from_jsonl(const std::string& text);  // throws std::runtime_error
    bool operator==(const EventTrace&) const = default;
};

class Simulator;

// One simulated process. Nodes are owned by the scenario; the simulator
// delivers frames and fires scheduled actions in virtual-time order.
class SimNode {
public:
    virtual ~SimNode() = default;
    virtual const std::string& did() const = 0;
    virtual DidDocument announcement() const = 0;
    virtual MessageEnvelope pack_for(const std::string& to, const WireMessage& message) = 0;
    virtual void on_frame(Simulator& sim, const Frame& frame) = 0;
};

class UcNode : public SimNode {
public:
    explicit UcNode(std::unique_ptr<UserControllerAgent> agent) : agent_(std::move(agent)) {}

    UserControllerAgent& agent() { return *agent_; }
    const std::string& did() const override { return agent_->did(); }
    DidDocument announcement() const override { return agent_->did_document(); }
    MessageEnvelope pack_for(const std::string& to, const WireMessage& m) override {
        return agent_->pack_message(to, m);
    }
    void on_frame(Simulator& sim, const Frame& frame) override;

private:
    void emit_audit_delta(Simulator& sim);

    std::unique_ptr<UserControllerAgent> agent_;
    std::size_t audited_ = 0;
};

class SpNode : public SimNode {
public:
    explicit SpNode(std::unique_ptr<SpControllerAgent> agent) : agent_(std::move(agent)) {}

    SpControllerAgent& agent() { return *agent_; }
    const std::string& did() const override { return agent_->did(); }
    DidDocument announcement() const override { return agent_->did_document(); }
    MessageEnvelope pack_for(const std::string& to, const WireMessage& m) override {
        return agent_->pack_message(to, m);
    }
    void on_frame(Simulator& sim, const Frame& frame) override;

    // emits sp_* trace events for outcome transitions since the last sync
    void sync_outcomes(Simulator& sim);

private:
    std::unique_ptr<SpControllerAgent> agent_;
    std::map<RequestId, RequestStatus> known_;
};

// Discrete-event simulator: single virtual clock, a totally ordered event
// queue, seeded RNG streams for latency/drops/adversary. Per ordered sender-
// recipient pair, frames deliver in send order (FIFO links), so envelope
// counters stay monotone for honest traffic.
class Simulator {
public:
    explicit Simulator(SimConfig config);

    void add_node(SimNode& node);  // non-owning
    void at(std::int64_t time_ms, std::function<void(Simulator&)> action);
    void send(SimNode& from, const Outbound& outbound);
    void announce(SimNode& from);  // reliable plaintext DID-document broadcast

    void run();  // drains the queue up to duration

    std::int64_t now() const { return now_ms_; }
    const SimConfig& config() const { return config_; }

    void emit(const std::string& kind, const std::string& actor, const std::string& detail,
              const std::string& payload_hash = "");

    const EventTrace& trace() const { return trace_; }

    // every frame byte the actor put on the wire, in send order
    const std::vector<Bytes>& outbound_frames(const std::string& did) const;
    const std::set<WireKind>& outbound_kinds(const std::string& did) const;

    std::uint64_t envelopes_sent() const { return envelopes_sent_; }
    std::uint64_t envelopes_delivered() const { return envelopes_delivered_; }
    std::uint64_t envelopes_dropped() const { return envelopes_dropped_; }

private:
    struct QueuedEvent {
        std::int64_t time_ms;
        std::uint64_t seq;
        std::string to;  // empty for actions
        Frame frame;
        std::function<void(Simulator&)> action;
        bool is_action = false;
        bool is_envelope = false;
    };
    struct EventAfter {
        bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
            if (a.time_ms != b.time_ms) return a.time_ms > b.time_ms;
            return a.seq > b.seq;
        }
    };

    void schedule_frame(const std::string& from, const std::string& to, Frame frame,
                        bool reliable);
    void deliver(const QueuedEvent& ev);
    std::int64_t sample_latency();
    bool roll(std::mt19937_64& rng, double probability);
    bool adversary_targets(const std::string& from, const std::string& to) const;

    // boundary adversary: may mutate the message and add injected copies
    std::vector<WireMessage> apply_boundary_adversary(const std::string& from,
                                                      const std::string& to, WireMessage message);
    // wire adversary: may mutate the frame or schedule extra deliveries
    Frame apply_wire_adversary(const std::string& from, const std::string& to, Frame frame,
                               const std::string& req_hex);

    SimConfig config_;
    std::map<std::string, SimNode*> nodes_;
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, EventAfter> queue_;
    std::int64_t now_ms_ = 0;
    std::uint64_t next_seq_ = 0;
    std::map<std::pair<std::string, std::string>, std::int64_t> link_clock_;
    std::mt19937_64 latency_rng_;
    std::mt19937_64 drop_rng_;
    std::mt19937_64 adv_rng_;
    crypto::SignKeypair adv_keypair_;  // forged signatures come from here
    EventTrace trace_;
    std::map<std::string, std::vector<Bytes>> outbound_frames_;
    std::map<std::string, std::set<WireKind>> outbound_kinds_;
    std::uint64_t envelopes_sent_ = 0;
    std::uint64_t envelopes_delivered_ = 0;
    std::uint64_t envelopes_dropped_ = 0;
};

enum class SecurityProperty : std::uint8_t {
    NoUnauthorizedPermit = 0,
    AllTamperRejected = 1,
    AllForgedAttRejected = 2,
    PoisonExcluded = 3,
};

const char* to_string(SecurityProperty p);
std::optional<SecurityProperty> security_property_from_string(std::string_view s);

struct SecurityCheck {
    bool holds = true;
    std::vector<TraceEvent> counterexamples;
};

SecurityCheck assert_security(const EventTrace& trace, SecurityProperty property);

}  // namespace pda
