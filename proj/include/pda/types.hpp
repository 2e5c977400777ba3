#pragma once

#include "pda/codec.hpp"
#include "pda/crypto.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace pda {

struct ContentHash {
    std::array<std::uint8_t, 32> digest{};

    auto operator<=>(const ContentHash&) const = default;

    std::string hex() const { return to_hex(digest); }

    void encode_to(Encoder& e) const { e.fixed(digest); }
    static ContentHash decode_from(Decoder& d) { return ContentHash{d.fixed<32>()}; }
};

inline ContentHash content_hash(std::span<const std::uint8_t> data) {
    return ContentHash{crypto::sha256(data)};
}

inline ContentHash content_hash(const Bytes& data) {
    return content_hash(std::span<const std::uint8_t>(data.data(), data.size()));
}

enum class OperationKind : std::uint8_t { Compute = 0, Train = 1, Share = 2 };

const char* to_string(OperationKind op);
std::optional<OperationKind> operation_from_string(std::string_view s);

inline void encode_operation(Encoder& e, OperationKind op) {
    e.u8(static_cast<std::uint8_t>(op));
}

inline OperationKind decode_operation(Decoder& d) {
    std::uint8_t v = d.u8();
    if (v > 2) throw DecodeError("unknown OperationKind discriminant");
    return static_cast<OperationKind>(v);
}

struct TimeRange {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;

    bool operator==(const TimeRange&) const = default;
};

struct DataSelector {
    std::string source_id;
    std::string schema_tag;
    std::optional<std::uint64_t> max_records;  // nullopt = unlimited; >= 1 otherwise
    std::optional<TimeRange> time_range;

    bool operator==(const DataSelector&) const = default;

    void validate() const;  // throws std::invalid_argument

    void encode_to(Encoder& e) const;
    static DataSelector decode_from(Decoder& d);
};

struct RequestId {
    std::array<std::uint8_t, 16> id{};

    auto operator<=>(const RequestId&) const = default;

    std::string hex() const { return to_hex(id); }

    void encode_to(Encoder& e) const { e.fixed(id); }
    static RequestId decode_from(Decoder& d) { return RequestId{d.fixed<16>()}; }
};

struct ComputationRequest {
    RequestId request_id;
    std::string requester_did;
    OperationKind operation = OperationKind::Compute;
    std::string function_id;
    Bytes function_params;
    DataSelector selector;
    std::int64_t issued_at_ms = 0;
    Bytes requester_signature;

    bool operator==(const ComputationRequest&) const = default;

    // canonical encoding of every field except the signature; this is what is signed
    Bytes signing_bytes() const;

    void encode_to(Encoder& e) const;
    static ComputationRequest decode_from(Decoder& d);
};

struct ComputeResult {
    RequestId request_id;
    Bytes payload;
    std::uint64_t record_count = 0;

    bool operator==(const ComputeResult&) const = default;

    void encode_to(Encoder& e) const;
    static ComputeResult decode_from(Decoder& d);
};

}  // namespace pda
