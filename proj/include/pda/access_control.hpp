#pragma once

#include "pda/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pda {

class NoSuchGrantError : public std::runtime_error {
public:
    NoSuchGrantError() : std::runtime_error("no grant matches (sp, source, op)") {}
};

struct Grant {
    std::string sp_did;
    std::string source_id;
    OperationKind operation = OperationKind::Compute;
    std::int64_t granted_at_ms = 0;
    std::optional<std::int64_t> expires_at_ms;

    bool operator==(const Grant&) const = default;

    void encode_to(Encoder& e) const;
    static Grant decode_from(Decoder& d);
};

struct ComputationPolicy {
    std::set<std::string> allowed_function_ids;
    std::uint64_t max_records = 1;
    std::uint32_t max_requests_per_day = 1;
    bool require_enclave = true;

    bool operator==(const ComputationPolicy&) const = default;

    void encode_to(Encoder& e) const;
    static ComputationPolicy decode_from(Decoder& d);
};

struct AccessPolicy {
    std::string owner_did;
    std::vector<Grant> grants;  // no duplicate (sp, source, op) triples
    std::map<std::string, ComputationPolicy> policies;  // by source_id
    std::uint64_t revision = 0;

    bool operator==(const AccessPolicy&) const = default;
};

// permitted computations per UTC day, keyed by (sp_did, source_id, day index)
class RequestHistory {
public:
    std::uint32_t count(const std::string& sp_did, const std::string& source_id,
                        std::int64_t now_ms) const;
    void record(const std::string& sp_did, const std::string& source_id, std::int64_t now_ms);

    static std::int64_t utc_day(std::int64_t now_ms);

private:
    std::map<std::tuple<std::string, std::string, std::int64_t>, std::uint32_t> counts_;
};

enum class DenyReason : std::uint8_t {
    NoGrant = 0,
    PolicyViolation = 1,
    BadSignature = 2,
    RateLimited = 3,
    Expired = 4,
    Replay = 5,
    TamperDetected = 6,
    WrongRecipient = 7,
    ExecutionFailed = 8,
};

const char* to_string(DenyReason r);
std::optional<DenyReason> deny_reason_from_string(std::string_view s);

struct Decision {
    bool permitted = false;
    DenyReason reason = DenyReason::NoGrant;  // meaningful only when !permitted

    static Decision permit() { return Decision{true, DenyReason::NoGrant}; }
    static Decision deny(DenyReason r) { return Decision{false, r}; }

    bool operator==(const Decision&) const = default;
};

// grant/revoke mutate in place and bump the revision; a duplicate grant
// replaces the stored expiry
void grant(AccessPolicy& policy, const std::string& sp_did, const std::string& source_id,
           OperationKind op, std::optional<std::int64_t> expires_at_ms, std::int64_t now_ms);
void revoke(AccessPolicy& policy, const std::string& sp_did, const std::string& source_id,
            OperationKind op);  // throws NoSuchGrantError

// Perm(DS) = (SP, OP) -> 1: true iff an unexpired matching grant exists
bool perm(const AccessPolicy& policy, const std::string& source_id, const std::string& sp_did,
          OperationKind op, std::int64_t now_ms);

// Valid(RE, CP): function allowed, record bound respected, daily quota left,
// operation is not Share
bool valid_request(const ComputationRequest& re, const ComputationPolicy& cp,
                   const RequestHistory& history, std::int64_t now_ms);

// Allow(RE) = Valid(AC) and Valid(RE, CP), deny-by-default; auth_ok is the
// caller's verdict on the requester signature (the Auth component)
Decision allow(const AccessPolicy& policy, const ComputationRequest& re, bool auth_ok,
               std::int64_t now_ms, const RequestHistory& history);

}  // namespace pda
