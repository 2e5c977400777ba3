#pragma once

#include "pda/access_control.hpp"
#include "pda/enclave.hpp"
#include "pda/federated.hpp"
#include "pda/identity.hpp"
#include "pda/types.hpp"

#include <variant>

namespace pda {

// Reply bodies. The variant below is the entire wire vocabulary: there is no
// message type that can carry a DataRecord, so raw records cannot leave an
// agent even by programming error.

struct DenyBody {
    RequestId request_id;
    DenyReason reason = DenyReason::NoGrant;

    bool operator==(const DenyBody&) const = default;
    void encode_to(Encoder& e) const;
    static DenyBody decode_from(Decoder& d);
};

struct ResultBody {
    ComputeResult result;
    Attestation attestation;

    bool operator==(const ResultBody&) const = default;
    void encode_to(Encoder& e) const;
    static ResultBody decode_from(Decoder& d);
};

enum class WireKind : std::uint8_t {
    DidDoc = 0,
    Request = 1,
    Deny = 2,
    Result = 3,
    TrainReply = 4,
};

const char* to_string(WireKind kind);

using WireMessage =
    std::variant<DidDocument, ComputationRequest, DenyBody, ResultBody, ModelUpdate>;

WireKind wire_kind(const WireMessage& m);

Bytes encode_wire_message(const WireMessage& m);
WireMessage decode_wire_message(std::span<const std::uint8_t> buf);  // throws DecodeError

// What actually travels: either a plaintext DID-document announcement (the
// bootstrap step before any channel exists) or an encrypted envelope whose
// ciphertext holds an encoded WireMessage.
using Frame = std::variant<DidDocument, MessageEnvelope>;

Bytes encode_frame(const Frame& f);
Frame decode_frame(std::span<const std::uint8_t> buf);  // throws DecodeError

}  // namespace pda
