#pragma once

#include "pda/analytics.hpp"
#include "pda/crypto.hpp"
#include "pda/types.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pda {

struct DataRecord;  // store.hpp; execute takes records, never exposes them

class UnknownFunctionFamilyError : public std::runtime_error {
public:
    explicit UnknownFunctionFamilyError(const std::string& family)
        : std::runtime_error("unknown function family: " + family) {}
};
class DuplicateFunctionError : public std::runtime_error {
public:
    DuplicateFunctionError() : std::runtime_error("function_id already loaded") {}
};
class FunctionNotLoadedError : public std::runtime_error {
public:
    FunctionNotLoadedError() : std::runtime_error("function_id not loaded") {}
};
class InputSignatureInvalidError : public std::runtime_error {
public:
    InputSignatureInvalidError() : std::runtime_error("record failed source verification") {}
};

inline constexpr const char* kFamilyNer = "ner.v1";
inline constexpr const char* kFamilySentiment = "sentiment.v1";
inline constexpr const char* kFamilyStat = "stat.v1";
inline constexpr const char* kFamilyLinreg = "linreg.v1";
inline constexpr const char* kFamilyTrain = "train.logreg.v1";

struct FunctionBundle {
    std::string function_id;
    Bytes code_spec;  // family tag + family-specific canonical body
    std::string output_schema;
    std::string provided_by;  // sp did

    bool operator==(const FunctionBundle&) const = default;
    void encode_to(Encoder& e) const;
    static FunctionBundle decode_from(Decoder& d);
};

// code_spec builders, one per family
Bytes code_spec_ner(const EntityDictionary& dict);
Bytes code_spec_sentiment(const SentimentLexicon& lex);
Bytes code_spec_stat(StatKind kind, const std::string& field);
Bytes code_spec_linreg(const std::string& x_field, const std::string& y_field);
Bytes code_spec_train(const ModelLayout& layout);

// family tag of a code_spec, or nullopt if it does not parse
std::optional<std::string> code_spec_family(const Bytes& code_spec);

inline constexpr const char* kEnclaveVersionTag = "pda-enclave/1";

using Measurement = ContentHash;

Measurement measure_bundle(const FunctionBundle& bundle, const std::string& version_tag);

struct Attestation {
    Measurement measurement;
    ContentHash request_hash;
    ContentHash result_hash;
    std::array<std::uint8_t, 16> nonce{};
    Bytes enclave_signature;

    bool operator==(const Attestation&) const = default;
    Bytes signing_bytes() const;
    void encode_to(Encoder& e) const;
    static Attestation decode_from(Decoder& d);
};

// typed result payloads, one per family

struct NerResultBody {
    std::map<std::string, std::uint64_t> counts;

    bool operator==(const NerResultBody&) const = default;
    void encode_to(Encoder& e) const;
    static NerResultBody decode_from(Decoder& d);
};

struct SentimentResultBody {
    double mean = 0.0;
    std::uint64_t matched_tokens = 0;

    bool operator==(const SentimentResultBody&) const = default;
    void encode_to(Encoder& e) const;
    static SentimentResultBody decode_from(Decoder& d);
};

struct StatResultBody {
    double value = 0.0;

    bool operator==(const StatResultBody&) const = default;
    void encode_to(Encoder& e) const;
    static StatResultBody decode_from(Decoder& d);
};

struct LinregResultBody {
    double slope = 0.0;
    double intercept = 0.0;
    std::uint64_t n = 0;

    bool operator==(const LinregResultBody&) const = default;
    void encode_to(Encoder& e) const;
    static LinregResultBody decode_from(Decoder& d);
};

// function_params for the train family; other families take empty params
struct TrainRequestBody {
    std::uint32_t round = 0;
    ModelParams model_in;
    TrainHyper hyper;

    bool operator==(const TrainRequestBody&) const = default;
    void encode_to(Encoder& e) const;
    static TrainRequestBody decode_from(Decoder& d);
};

struct TrainResultBody {
    std::uint32_t round = 0;
    ModelParams model_out;
    std::uint64_t n_samples = 0;
    double loss_final = 0.0;

    bool operator==(const TrainResultBody&) const = default;
    void encode_to(Encoder& e) const;
    static TrainResultBody decode_from(Decoder& d);
};

// resolves a source_id to its signing public key; nullopt fails verification
using SourceKeyResolver = std::function<std::optional<Bytes>(const std::string&)>;

// emulated setup/per-record cost, busy-waited inside execute; zero = off
struct ExecOverhead {
    std::uint64_t setup_micros = 0;
    std::uint64_t per_record_micros = 0;
};

class EnclaveInstance {
public:
    explicit EnclaveInstance(std::optional<crypto::Seed> seed = std::nullopt,
                             std::string version_tag = kEnclaveVersionTag);

    EnclaveInstance(const EnclaveInstance&) = delete;
    EnclaveInstance& operator=(const EnclaveInstance&) = delete;

    Measurement load_bundle(const FunctionBundle& bundle);

    bool has_function(const std::string& function_id) const;
    std::optional<Measurement> measurement_of(const std::string& function_id) const;
    const Bytes& attestation_public_key() const { return keypair_.public_key; }
    const std::string& version_tag() const { return version_tag_; }

    void set_overhead(ExecOverhead overhead) { overhead_ = overhead; }

    std::pair<ComputeResult, Attestation> execute(const ComputationRequest& re,
                                                  const std::vector<DataRecord>& records,
                                                  const SourceKeyResolver& resolve_key) const;

private:
    struct Loaded {
        FunctionBundle bundle;
        Measurement measurement;
    };

    Bytes evaluate(const FunctionBundle& bundle, const ComputationRequest& re,
                   const std::vector<DataRecord>& records) const;
    std::array<std::uint8_t, 16> next_nonce() const;

    crypto::SignKeypair keypair_;
    std::string version_tag_;
    std::map<std::string, Loaded> bundles_;
    ExecOverhead overhead_;
    mutable std::atomic<std::uint64_t> nonce_counter_{0};
};

// Theorem-1 gate: signature by the enclave key, expected measurement, and the
// request/result bindings all hold
bool vrf(const Bytes& enclave_public_key, const Measurement& expected_measurement,
         const ComputationRequest& re, const ComputeResult& result, const Attestation& att);

}  // namespace pda
