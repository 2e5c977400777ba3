#pragma once

#include "pda/access_control.hpp"
#include "pda/crypto.hpp"
#include "pda/types.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pda {

class DuplicateSourceError : public std::runtime_error {
public:
    DuplicateSourceError() : std::runtime_error("source_id already registered") {}
};
class BadCredentialError : public std::runtime_error {
public:
    BadCredentialError() : std::runtime_error("credential rejected by plug") {}
};
class UnknownSourceError : public std::runtime_error {
public:
    UnknownSourceError() : std::runtime_error("source_id not registered") {}
};

// v1 record schemas

struct PostV1 {
    std::string title;
    std::string body;
    bool liked = false;

    bool operator==(const PostV1&) const = default;
    void encode_to(Encoder& e) const;
    static PostV1 decode_from(Decoder& d);
};

struct CommentV1 {
    std::string text;

    bool operator==(const CommentV1&) const = default;
    void encode_to(Encoder& e) const;
    static CommentV1 decode_from(Decoder& d);
};

struct LabeledTitleV1 {
    std::string title;
    bool engaged = false;

    bool operator==(const LabeledTitleV1&) const = default;
    void encode_to(Encoder& e) const;
    static LabeledTitleV1 decode_from(Decoder& d);
};

inline constexpr const char* kSchemaPost = "post.v1";
inline constexpr const char* kSchemaComment = "comment.v1";
inline constexpr const char* kSchemaLabeledTitle = "labeled_title.v1";

bool schema_known(const std::string& schema_tag);
bool schema_validate(const std::string& schema_tag, const Bytes& payload);

// text-bearing view used by ner/sentiment; post.v1 yields title and body
std::vector<std::string> schema_texts(const std::string& schema_tag, const Bytes& payload);
// numeric view used by stat/linreg: liked/engaged as 0/1, collected_at handled upstream
std::optional<double> schema_numeric_field(const std::string& schema_tag, const Bytes& payload,
                                           const std::string& field);

struct DataSourceDescriptor {
    std::string source_id;
    std::string schema_tag;
    Bytes source_signing_key;  // public half; the store simulates the source's signer
    enum class PlugKind : std::uint8_t { FileDrop = 0, MockApi = 1 } plug_kind = PlugKind::FileDrop;
    std::string credential_ref;
    ComputationPolicy initial_policy;

    void encode_to(Encoder& e) const;
    static DataSourceDescriptor decode_from(Decoder& d);
};

struct DataRecord {
    std::string record_id;
    std::string source_id;
    std::string schema_tag;
    Bytes payload;
    std::int64_t collected_at_ms = 0;
    Bytes source_signature;

    bool operator==(const DataRecord&) const = default;

    Bytes signing_bytes() const;
    void encode_to(Encoder& e) const;
    static DataRecord decode_from(Decoder& d);
};

struct IngestStats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
};

// raw item as delivered by a plug, one JSON object per line in FileDrop files
struct RawItem {
    std::string json_line;
};

// Append-only record store with a per-source index. Single writer; queries
// see a consistent snapshot. Optionally file-backed: every append goes to
// the log, recovery replays it.
class RecordStore {
public:
    RecordStore() = default;
    static RecordStore open(const std::filesystem::path& log_file);

    void register_source(const DataSourceDescriptor& descriptor, const std::string& credential,
                         Bytes source_signing_secret);
    bool has_source(const std::string& source_id) const;
    std::vector<std::string> list_sources() const;
    const DataSourceDescriptor& descriptor(const std::string& source_id) const;

    // public signing key per source, the resolver the enclave verifies against
    std::optional<Bytes> source_public_key(const std::string& source_id) const;

    IngestStats ingest(const std::string& source_id, const std::vector<RawItem>& items,
                       std::int64_t now_ms);

    std::vector<DataRecord> query(const DataSelector& selector) const;

    bool verify_chain(const std::string& source_id) const;

    std::size_t size() const { return records_.size(); }
    const std::vector<DataRecord>& records() const { return records_; }

private:
    void append(DataRecord record);
    void write_log_entry(std::uint8_t kind, const Bytes& body);

    struct SourceState {
        DataSourceDescriptor descriptor;
        Bytes signing_secret;
        std::uint64_t next_record_seq = 0;
    };

    std::map<std::string, SourceState> sources_;
    std::vector<DataRecord> records_;
    std::map<std::string, std::vector<std::size_t>> by_source_;
    std::optional<std::filesystem::path> log_file_;
};

// in-process stand-in for a remote API a plug would poll
class MockApiService {
public:
    void push(const std::string& source_id, RawItem item);
    std::vector<RawItem> poll(const std::string& source_id);

private:
    std::map<std::string, std::vector<RawItem>> queues_;
};

std::vector<RawItem> read_filedrop(const std::filesystem::path& file);

}  // namespace pda
