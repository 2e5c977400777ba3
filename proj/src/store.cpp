#include "pda/store.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>

namespace pda {

using nlohmann::json;

void PostV1::encode_to(Encoder& e) const {
    e.str(title);
    e.str(body);
    e.boolean(liked);
}

PostV1 PostV1::decode_from(Decoder& d) {
    PostV1 p;
    p.title = d.str();
    p.body = d.str();
    p.liked = d.boolean();
    return p;
}

void CommentV1::encode_to(Encoder& e) const { e.str(text); }

CommentV1 CommentV1::decode_from(Decoder& d) {
    CommentV1 c;
    c.text = d.str();
    return c;
}

void LabeledTitleV1::encode_to(Encoder& e) const {
    e.str(title);
    e.boolean(engaged);
}

LabeledTitleV1 LabeledTitleV1::decode_from(Decoder& d) {
    LabeledTitleV1 t;
    t.title = d.str();
    t.engaged = d.boolean();
    return t;
}

bool schema_known(const std::string& schema_tag) {
    return schema_tag == kSchemaPost || schema_tag == kSchemaComment ||
           schema_tag == kSchemaLabeledTitle;
}

bool schema_validate(const std::string& schema_tag, const Bytes& payload) {
    try {
        if (schema_tag == kSchemaPost) {
            canonical_decode<PostV1>(payload);
        } else if (schema_tag == kSchemaComment) {
            canonical_decode<CommentV1>(payload);
        } else if (schema_tag == kSchemaLabeledTitle) {
            canonical_decode<LabeledTitleV1>(payload);
        } else {
            return false;
        }
        return true;
    } catch (const DecodeError&) {
        return false;
    }
}

std::vector<std::string> schema_texts(const std::string& schema_tag, const Bytes& payload) {
    if (schema_tag == kSchemaPost) {
        auto p = canonical_decode<PostV1>(payload);
        return {p.title, p.body};
    }
    if (schema_tag == kSchemaComment) {
        return {canonical_decode<CommentV1>(payload).text};
    }
    if (schema_tag == kSchemaLabeledTitle) {
        return {canonical_decode<LabeledTitleV1>(payload).title};
    }
    return {};
}

std::optional<double> schema_numeric_field(const std::string& schema_tag, const Bytes& payload,
                                           const std::string& field) {
    if (schema_tag == kSchemaPost) {
        auto p = canonical_decode<PostV1>(payload);
        if (field == "liked") return p.liked ? 1.0 : 0.0;
        if (field == "title_len") return static_cast<double>(p.title.size());
        if (field == "body_len") return static_cast<double>(p.body.size());
    } else if (schema_tag == kSchemaComment) {
        if (field == "text_len")
            return static_cast<double>(canonical_decode<CommentV1>(payload).text.size());
    } else if (schema_tag == kSchemaLabeledTitle) {
        auto t = canonical_decode<LabeledTitleV1>(payload);
        if (field == "engaged") return t.engaged ? 1.0 : 0.0;
        if (field == "title_len") return static_cast<double>(t.title.size());
    }
    return std::nullopt;
}

void DataSourceDescriptor::encode_to(Encoder& e) const {
    e.str(source_id);
    e.str(schema_tag);
    e.bytes(source_signing_key);
    e.u8(static_cast<std::uint8_t>(plug_kind));
    e.str(credential_ref);
    initial_policy.encode_to(e);
}

DataSourceDescriptor DataSourceDescriptor::decode_from(Decoder& d) {
    DataSourceDescriptor desc;
    desc.source_id = d.str();
    desc.schema_tag = d.str();
    desc.source_signing_key = d.bytes();
    std::uint8_t kind = d.u8();
    if (kind > 1) throw DecodeError("plug_kind out of range");
    desc.plug_kind = static_cast<DataSourceDescriptor::PlugKind>(kind);
    desc.credential_ref = d.str();
    desc.initial_policy = ComputationPolicy::decode_from(d);
    return desc;
}

Bytes DataRecord::signing_bytes() const {
    Encoder e;
    e.str(record_id);
    e.str(source_id);
    e.str(schema_tag);
    e.bytes(payload);
    e.i64(collected_at_ms);
    return e.take();
}

void DataRecord::encode_to(Encoder& e) const {
    e.raw(signing_bytes());
    e.bytes(source_signature);
}

DataRecord DataRecord::decode_from(Decoder& d) {
    DataRecord r;
    r.record_id = d.str();
    r.source_id = d.str();
    r.schema_tag = d.str();
    r.payload = d.bytes();
    r.collected_at_ms = d.i64();
    r.source_signature = d.bytes();
    return r;
}

// log framing: "pdalog1\n" header, then per entry u32 length + body, where the
// body is u8 kind (1 = source registration, 2 = record) + canonical encoding
static constexpr char kLogMagic[] = "pdalog1\n";
static constexpr std::uint8_t kEntrySource = 1;
static constexpr std::uint8_t kEntryRecord = 2;

RecordStore RecordStore::open(const std::filesystem::path& log_file) {
    RecordStore store;
    store.log_file_ = log_file;
    std::ifstream in(log_file, std::ios::binary);
    if (!in) {
        // fresh store; header written on first append
        return store;
    }
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kLogMagic, 8) != 0)
        throw std::runtime_error("record log: bad header");
    for (;;) {
        char lenbuf[4];
        if (!in.read(lenbuf, 4)) break;
        std::uint32_t len = 0;
        for (int i = 0; i < 4; ++i) len = (len << 8) | static_cast<std::uint8_t>(lenbuf[i]);
        Bytes body(len);
        if (!in.read(reinterpret_cast<char*>(body.data()), len))
            throw std::runtime_error("record log: truncated entry");
        Decoder d(body);
        std::uint8_t kind = d.u8();
        if (kind == kEntrySource) {
            DataSourceDescriptor desc = DataSourceDescriptor::decode_from(d);
            Bytes secret = d.bytes();
            d.expect_end();
            store.sources_[desc.source_id] = SourceState{desc, std::move(secret), 0};
        } else if (kind == kEntryRecord) {
            DataRecord rec = DataRecord::decode_from(d);
            d.expect_end();
            auto src = store.sources_.find(rec.source_id);
            if (src != store.sources_.end()) {
                // record_id is "<source>/<seq>"; keep the counter past what the log holds
                auto slash = rec.record_id.rfind('/');
                if (slash != std::string::npos) {
                    std::uint64_t seq = std::strtoull(rec.record_id.c_str() + slash + 1, nullptr, 10);
                    src->second.next_record_seq = std::max(src->second.next_record_seq, seq + 1);
                }
            }
            store.by_source_[rec.source_id].push_back(store.records_.size());
            store.records_.push_back(std::move(rec));
        } else {
            throw std::runtime_error("record log: unknown entry kind");
        }
    }
    return store;
}

void RecordStore::write_log_entry(std::uint8_t kind, const Bytes& body) {
    if (!log_file_) return;
    bool fresh =
        !std::filesystem::exists(*log_file_) || std::filesystem::file_size(*log_file_) == 0;
    std::ofstream out(*log_file_, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("record log: cannot open for append");
    if (fresh) out.write(kLogMagic, 8);
    std::size_t len = body.size() + 1;
    char lenbuf[4];
    for (int i = 0; i < 4; ++i) lenbuf[i] = static_cast<char>((len >> (24 - 8 * i)) & 0xff);
    out.write(lenbuf, 4);
    char kc = static_cast<char>(kind);
    out.write(&kc, 1);
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
}

void RecordStore::register_source(const DataSourceDescriptor& descriptor,
                                  const std::string& credential, Bytes source_signing_secret) {
    if (sources_.contains(descriptor.source_id)) throw DuplicateSourceError();
    if (!schema_known(descriptor.schema_tag))
        throw std::invalid_argument("unknown schema_tag: " + descriptor.schema_tag);
    // the mock plugs accept any non-empty credential
    if (credential.empty()) throw BadCredentialError();
    Encoder e;
    descriptor.encode_to(e);
    e.bytes(source_signing_secret);
    write_log_entry(kEntrySource, e.take());
    sources_[descriptor.source_id] = SourceState{descriptor, std::move(source_signing_secret), 0};
}

bool RecordStore::has_source(const std::string& source_id) const {
    return sources_.contains(source_id);
}

std::vector<std::string> RecordStore::list_sources() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : sources_) out.push_back(id);
    return out;
}

const DataSourceDescriptor& RecordStore::descriptor(const std::string& source_id) const {
    auto it = sources_.find(source_id);
    if (it == sources_.end()) throw UnknownSourceError();
    return it->second.descriptor;
}

std::optional<Bytes> RecordStore::source_public_key(const std::string& source_id) const {
    auto it = sources_.find(source_id);
    if (it == sources_.end()) return std::nullopt;
    return it->second.descriptor.source_signing_key;
}

static std::optional<Bytes> payload_from_json(const std::string& schema_tag, const json& j) {
    if (!j.is_object()) return std::nullopt;
    try {
        if (schema_tag == kSchemaPost) {
            PostV1 p{j.at("title").get<std::string>(), j.at("body").get<std::string>(),
                     j.at("liked").get<bool>()};
            return canonical_encode(p);
        }
        if (schema_tag == kSchemaComment) {
            CommentV1 c{j.at("text").get<std::string>()};
            return canonical_encode(c);
        }
        if (schema_tag == kSchemaLabeledTitle) {
            LabeledTitleV1 t{j.at("title").get<std::string>(), j.at("engaged").get<bool>()};
            return canonical_encode(t);
        }
    } catch (const json::exception&) {
        return std::nullopt;
    }
    return std::nullopt;
}

IngestStats RecordStore::ingest(const std::string& source_id, const std::vector<RawItem>& items,
                                std::int64_t now_ms) {
    auto it = sources_.find(source_id);
    if (it == sources_.end()) throw UnknownSourceError();
    SourceState& src = it->second;

    IngestStats stats;
    for (const RawItem& item : items) {
        json j = json::parse(item.json_line, nullptr, /*allow_exceptions=*/false);
        auto payload = j.is_discarded()
                           ? std::nullopt
                           : payload_from_json(src.descriptor.schema_tag, j);
        if (!payload) {
            ++stats.rejected;
            continue;
        }
        DataRecord rec;
        rec.record_id = source_id + "/" + std::to_string(src.next_record_seq++);
        rec.source_id = source_id;
        rec.schema_tag = src.descriptor.schema_tag;
        rec.payload = std::move(*payload);
        rec.collected_at_ms = now_ms;
        rec.source_signature = crypto::sign_detached(rec.signing_bytes(), src.signing_secret);
        if (!crypto::sign_verify(rec.signing_bytes(), rec.source_signature,
                                 src.descriptor.source_signing_key)) {
            ++stats.rejected;  // key mismatch in the descriptor
            continue;
        }
        append(std::move(rec));
        ++stats.accepted;
    }
    return stats;
}

void RecordStore::append(DataRecord record) {
    write_log_entry(kEntryRecord, canonical_encode(record));
    by_source_[record.source_id].push_back(records_.size());
    records_.push_back(std::move(record));
}

std::vector<DataRecord> RecordStore::query(const DataSelector& selector) const {
    selector.validate();
    std::vector<const DataRecord*> matched;
    auto it = by_source_.find(selector.source_id);
    if (it != by_source_.end()) {
        for (std::size_t idx : it->second) {
            const DataRecord& r = records_[idx];
            if (r.schema_tag != selector.schema_tag) continue;
            if (selector.time_range &&
                (r.collected_at_ms < selector.time_range->start_ms ||
                 r.collected_at_ms > selector.time_range->end_ms))
                continue;
            matched.push_back(&r);
        }
    }
    std::stable_sort(matched.begin(), matched.end(), [](const DataRecord* a, const DataRecord* b) {
        if (a->collected_at_ms != b->collected_at_ms) return a->collected_at_ms > b->collected_at_ms;
        return a->record_id < b->record_id;
    });
    if (selector.max_records && matched.size() > *selector.max_records)
        matched.resize(*selector.max_records);

    std::vector<DataRecord> out;
    out.reserve(matched.size());
    for (const DataRecord* r : matched) out.push_back(*r);
    return out;
}

bool RecordStore::verify_chain(const std::string& source_id) const {
    auto idx = by_source_.find(source_id);
    if (idx == by_source_.end()) return true;  // nothing stored, vacuously intact
    auto src = sources_.find(source_id);
    if (src == sources_.end()) return false;  // records without a registered signer
    const Bytes& key = src->second.descriptor.source_signing_key;
    for (std::size_t i : idx->second) {
        const DataRecord& r = records_[i];
        if (!crypto::sign_verify(r.signing_bytes(), r.source_signature, key)) return false;
    }
    return true;
}

void MockApiService::push(const std::string& source_id, RawItem item) {
    queues_[source_id].push_back(std::move(item));
}

std::vector<RawItem> MockApiService::poll(const std::string& source_id) {
    auto it = queues_.find(source_id);
    if (it == queues_.end()) return {};
    std::vector<RawItem> out = std::move(it->second);
    it->second.clear();
    return out;
}

std::vector<RawItem> read_filedrop(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open filedrop input: " + file.string());
    std::vector<RawItem> items;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        items.push_back(RawItem{line});
    }
    return items;
}

}  // namespace pda
