#include "pda/access_control.hpp"

#include <algorithm>

namespace pda {

void Grant::encode_to(Encoder& e) const {
    e.str(sp_did);
    e.str(source_id);
    encode_operation(e, operation);
    e.i64(granted_at_ms);
    e.boolean(expires_at_ms.has_value());
    if (expires_at_ms) e.i64(*expires_at_ms);
}

Grant Grant::decode_from(Decoder& d) {
    Grant g;
    g.sp_did = d.str();
    g.source_id = d.str();
    g.operation = decode_operation(d);
    g.granted_at_ms = d.i64();
    if (d.boolean()) g.expires_at_ms = d.i64();
    return g;
}

void ComputationPolicy::encode_to(Encoder& e) const {
    e.u32(static_cast<std::uint32_t>(allowed_function_ids.size()));
    for (const auto& id : allowed_function_ids) e.str(id);
    e.u64(max_records);
    e.u32(max_requests_per_day);
    e.boolean(require_enclave);
}

ComputationPolicy ComputationPolicy::decode_from(Decoder& d) {
    ComputationPolicy cp;
    std::uint32_t n = d.u32();
    std::string prev;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string id = d.str();
        if (i > 0 && id <= prev) throw DecodeError("function id set not strictly increasing");
        prev = id;
        cp.allowed_function_ids.insert(std::move(id));
    }
    cp.max_records = d.u64();
    cp.max_requests_per_day = d.u32();
    cp.require_enclave = d.boolean();
    return cp;
}

std::int64_t RequestHistory::utc_day(std::int64_t now_ms) {
    constexpr std::int64_t day_ms = 86'400'000;
    std::int64_t day = now_ms / day_ms;
    if (now_ms < 0 && now_ms % day_ms != 0) --day;
    return day;
}

std::uint32_t RequestHistory::count(const std::string& sp_did, const std::string& source_id,
                                    std::int64_t now_ms) const {
    auto it = counts_.find({sp_did, source_id, utc_day(now_ms)});
    return it == counts_.end() ? 0 : it->second;
}

void RequestHistory::record(const std::string& sp_did, const std::string& source_id,
                            std::int64_t now_ms) {
    ++counts_[{sp_did, source_id, utc_day(now_ms)}];
}

const char* to_string(DenyReason r) {
    switch (r) {
        case DenyReason::NoGrant: return "NoGrant";
        case DenyReason::PolicyViolation: return "PolicyViolation";
        case DenyReason::BadSignature: return "BadSignature";
        case DenyReason::RateLimited: return "RateLimited";
        case DenyReason::Expired: return "Expired";
        case DenyReason::Replay: return "Replay";
        case DenyReason::TamperDetected: return "TamperDetected";
        case DenyReason::WrongRecipient: return "WrongRecipient";
        case DenyReason::ExecutionFailed: return "ExecutionFailed";
    }
    return "?";
}

std::optional<DenyReason> deny_reason_from_string(std::string_view s) {
    for (std::uint8_t v = 0; v <= 8; ++v) {
        auto r = static_cast<DenyReason>(v);
        if (s == to_string(r)) return r;
    }
    return std::nullopt;
}

static auto find_grant(std::vector<Grant>& grants, const std::string& sp_did,
                       const std::string& source_id, OperationKind op) {
    return std::find_if(grants.begin(), grants.end(), [&](const Grant& g) {
        return g.sp_did == sp_did && g.source_id == source_id && g.operation == op;
    });
}

void grant(AccessPolicy& policy, const std::string& sp_did, const std::string& source_id,
           OperationKind op, std::optional<std::int64_t> expires_at_ms, std::int64_t now_ms) {
    auto it = find_grant(policy.grants, sp_did, source_id, op);
    if (it != policy.grants.end()) {
        it->granted_at_ms = now_ms;
        it->expires_at_ms = expires_at_ms;
    } else {
        policy.grants.push_back(Grant{sp_did, source_id, op, now_ms, expires_at_ms});
    }
    ++policy.revision;
}

void revoke(AccessPolicy& policy, const std::string& sp_did, const std::string& source_id,
            OperationKind op) {
    auto it = find_grant(policy.grants, sp_did, source_id, op);
    if (it == policy.grants.end()) throw NoSuchGrantError();
    policy.grants.erase(it);
    ++policy.revision;
}

bool perm(const AccessPolicy& policy, const std::string& source_id, const std::string& sp_did,
          OperationKind op, std::int64_t now_ms) {
    for (const Grant& g : policy.grants) {
        if (g.sp_did != sp_did || g.source_id != source_id || g.operation != op) continue;
        if (g.expires_at_ms && *g.expires_at_ms <= now_ms) continue;
        return true;
    }
    return false;
}

bool valid_request(const ComputationRequest& re, const ComputationPolicy& cp,
                   const RequestHistory& history, std::int64_t now_ms) {
    if (re.operation == OperationKind::Share) return false;  // reserved, always rejected
    if (!cp.allowed_function_ids.contains(re.function_id)) return false;
    if (!re.selector.max_records) return false;  // unlimited selectors never satisfy a bounded CP
    if (*re.selector.max_records > cp.max_records) return false;
    if (history.count(re.requester_did, re.selector.source_id, now_ms) >= cp.max_requests_per_day)
        return false;
    return true;
}

Decision allow(const AccessPolicy& policy, const ComputationRequest& re, bool auth_ok,
               std::int64_t now_ms, const RequestHistory& history) {
    if (!auth_ok) return Decision::deny(DenyReason::BadSignature);

    // grant lookup: distinguish an expired grant from no grant at all
    bool matched = false;
    bool alive = false;
    for (const Grant& g : policy.grants) {
        if (g.sp_did != re.requester_did || g.source_id != re.selector.source_id ||
            g.operation != re.operation)
            continue;
        matched = true;
        if (!g.expires_at_ms || *g.expires_at_ms > now_ms) alive = true;
    }
    if (!alive) return Decision::deny(matched ? DenyReason::Expired : DenyReason::NoGrant);

    auto cp_it = policy.policies.find(re.selector.source_id);
    if (cp_it == policy.policies.end()) return Decision::deny(DenyReason::PolicyViolation);
    const ComputationPolicy& cp = cp_it->second;

    if (re.operation == OperationKind::Share) return Decision::deny(DenyReason::PolicyViolation);
    if (!cp.allowed_function_ids.contains(re.function_id))
        return Decision::deny(DenyReason::PolicyViolation);
    if (!re.selector.max_records || *re.selector.max_records > cp.max_records)
        return Decision::deny(DenyReason::PolicyViolation);
    if (history.count(re.requester_did, re.selector.source_id, now_ms) >= cp.max_requests_per_day)
        return Decision::deny(DenyReason::RateLimited);

    return Decision::permit();
}

}  // namespace pda
