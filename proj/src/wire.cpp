#include "pda/wire.hpp"

namespace pda {

void DenyBody::encode_to(Encoder& e) const {
    request_id.encode_to(e);
    e.u8(static_cast<std::uint8_t>(reason));
}

DenyBody DenyBody::decode_from(Decoder& d) {
    DenyBody b;
    b.request_id = RequestId::decode_from(d);
    std::uint8_t r = d.u8();
    if (r > static_cast<std::uint8_t>(DenyReason::ExecutionFailed))
        throw DecodeError("unknown DenyReason discriminant");
    b.reason = static_cast<DenyReason>(r);
    return b;
}

void ResultBody::encode_to(Encoder& e) const {
    result.encode_to(e);
    attestation.encode_to(e);
}

ResultBody ResultBody::decode_from(Decoder& d) {
    ResultBody b;
    b.result = ComputeResult::decode_from(d);
    b.attestation = Attestation::decode_from(d);
    return b;
}

const char* to_string(WireKind kind) {
    switch (kind) {
        case WireKind::DidDoc: return "DidDoc";
        case WireKind::Request: return "Request";
        case WireKind::Deny: return "Deny";
        case WireKind::Result: return "Result";
        case WireKind::TrainReply: return "TrainReply";
    }
    return "?";
}

WireKind wire_kind(const WireMessage& m) {
    return static_cast<WireKind>(m.index());
}

Bytes encode_wire_message(const WireMessage& m) {
    Encoder e;
    e.u8(static_cast<std::uint8_t>(m.index()));
    std::visit([&e](const auto& body) { body.encode_to(e); }, m);
    return e.take();
}

WireMessage decode_wire_message(std::span<const std::uint8_t> buf) {
    Decoder d(buf);
    std::uint8_t tag = d.u8();
    WireMessage m;
    switch (static_cast<WireKind>(tag)) {
        case WireKind::DidDoc: m = DidDocument::decode_from(d); break;
        case WireKind::Request: m = ComputationRequest::decode_from(d); break;
        case WireKind::Deny: m = DenyBody::decode_from(d); break;
        case WireKind::Result: m = ResultBody::decode_from(d); break;
        case WireKind::TrainReply: m = ModelUpdate::decode_from(d); break;
        default: throw DecodeError("unknown wire message tag");
    }
    d.expect_end();
    return m;
}

Bytes encode_frame(const Frame& f) {
    Encoder e;
    e.u8(static_cast<std::uint8_t>(f.index()));
    std::visit([&e](const auto& body) { body.encode_to(e); }, f);
    return e.take();
}

Frame decode_frame(std::span<const std::uint8_t> buf) {
    Decoder d(buf);
    std::uint8_t tag = d.u8();
    Frame f;
    if (tag == 0) {
        f = DidDocument::decode_from(d);
    } else if (tag == 1) {
        f = MessageEnvelope::decode_from(d);
    } else {
        throw DecodeError("unknown frame tag");
    }
    d.expect_end();
    return f;
}

}  // namespace pda
