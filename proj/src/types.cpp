#include "pda/types.hpp"

#include <stdexcept>

namespace pda {

const char* to_string(OperationKind op) {
    switch (op) {
        case OperationKind::Compute: return "Compute";
        case OperationKind::Train: return "Train";
        case OperationKind::Share: return "Share";
    }
    return "?";
}

std::optional<OperationKind> operation_from_string(std::string_view s) {
    if (s == "Compute") return OperationKind::Compute;
    if (s == "Train") return OperationKind::Train;
    if (s == "Share") return OperationKind::Share;
    return std::nullopt;
}

void DataSelector::validate() const {
    if (source_id.empty()) throw std::invalid_argument("selector: empty source_id");
    if (schema_tag.empty()) throw std::invalid_argument("selector: empty schema_tag");
    if (max_records && *max_records < 1) throw std::invalid_argument("selector: max_records < 1");
    if (time_range && time_range->start_ms > time_range->end_ms)
        throw std::invalid_argument("selector: time_range start > end");
}

void DataSelector::encode_to(Encoder& e) const {
    e.str(source_id);
    e.str(schema_tag);
    e.boolean(max_records.has_value());
    if (max_records) e.u64(*max_records);
    e.boolean(time_range.has_value());
    if (time_range) {
        e.i64(time_range->start_ms);
        e.i64(time_range->end_ms);
    }
}

DataSelector DataSelector::decode_from(Decoder& d) {
    DataSelector s;
    s.source_id = d.str();
    s.schema_tag = d.str();
    if (d.boolean()) s.max_records = d.u64();
    if (d.boolean()) {
        TimeRange r;
        r.start_ms = d.i64();
        r.end_ms = d.i64();
        s.time_range = r;
    }
    return s;
}

Bytes ComputationRequest::signing_bytes() const {
    Encoder e;
    e.fixed(request_id.id);
    e.str(requester_did);
    encode_operation(e, operation);
    e.str(function_id);
    e.bytes(function_params);
    selector.encode_to(e);
    e.i64(issued_at_ms);
    return e.take();
}

void ComputationRequest::encode_to(Encoder& e) const {
    e.raw(signing_bytes());
    e.bytes(requester_signature);
}

ComputationRequest ComputationRequest::decode_from(Decoder& d) {
    ComputationRequest r;
    r.request_id = RequestId::decode_from(d);
    r.requester_did = d.str();
    r.operation = decode_operation(d);
    r.function_id = d.str();
    r.function_params = d.bytes();
    r.selector = DataSelector::decode_from(d);
    r.issued_at_ms = d.i64();
    r.requester_signature = d.bytes();
    return r;
}

void ComputeResult::encode_to(Encoder& e) const {
    e.fixed(request_id.id);
    e.bytes(payload);
    e.u64(record_count);
}

ComputeResult ComputeResult::decode_from(Decoder& d) {
    ComputeResult r;
    r.request_id = RequestId::decode_from(d);
    r.payload = d.bytes();
    r.record_count = d.u64();
    return r;
}

}  // namespace pda
