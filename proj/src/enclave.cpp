#include "pda/enclave.hpp"

#include "pda/store.hpp"

#include <chrono>

namespace pda {

void FunctionBundle::encode_to(Encoder& e) const {
    e.str(function_id);
    e.bytes(code_spec);
    e.str(output_schema);
    e.str(provided_by);
}

FunctionBundle FunctionBundle::decode_from(Decoder& d) {
    FunctionBundle b;
    b.function_id = d.str();
    b.code_spec = d.bytes();
    b.output_schema = d.str();
    b.provided_by = d.str();
    return b;
}

Bytes code_spec_ner(const EntityDictionary& dict) {
    dict.validate();
    Encoder e;
    e.str(kFamilyNer);
    dict.encode_to(e);
    return e.take();
}

Bytes code_spec_sentiment(const SentimentLexicon& lex) {
    lex.validate();
    Encoder e;
    e.str(kFamilySentiment);
    lex.encode_to(e);
    return e.take();
}

Bytes code_spec_stat(StatKind kind, const std::string& field) {
    Encoder e;
    e.str(kFamilyStat);
    e.u8(static_cast<std::uint8_t>(kind));
    e.str(field);
    return e.take();
}

Bytes code_spec_linreg(const std::string& x_field, const std::string& y_field) {
    Encoder e;
    e.str(kFamilyLinreg);
    e.str(x_field);
    e.str(y_field);
    return e.take();
}

Bytes code_spec_train(const ModelLayout& layout) {
    Encoder e;
    e.str(kFamilyTrain);
    layout.encode_to(e);
    return e.take();
}

std::optional<std::string> code_spec_family(const Bytes& code_spec) {
    try {
        Decoder d(code_spec);
        std::string family = d.str();
        if (family == kFamilyNer) {
            EntityDictionary::decode_from(d);
        } else if (family == kFamilySentiment) {
            SentimentLexicon::decode_from(d);
        } else if (family == kFamilyStat) {
            std::uint8_t kind = d.u8();
            if (kind > 2) return std::nullopt;
            d.str();
        } else if (family == kFamilyLinreg) {
            d.str();
            d.str();
        } else if (family == kFamilyTrain) {
            ModelLayout::decode_from(d);
        } else {
            return std::nullopt;
        }
        d.expect_end();
        return family;
    } catch (const DecodeError&) {
        return std::nullopt;
    }
}

Measurement measure_bundle(const FunctionBundle& bundle, const std::string& version_tag) {
    Encoder e;
    bundle.encode_to(e);
    e.raw(to_bytes(version_tag));
    return content_hash(e.take());
}

Bytes Attestation::signing_bytes() const {
    Encoder e;
    measurement.encode_to(e);
    request_hash.encode_to(e);
    result_hash.encode_to(e);
    e.fixed(nonce);
    return e.take();
}

void Attestation::encode_to(Encoder& e) const {
    e.raw(signing_bytes());
    e.bytes(enclave_signature);
}

Attestation Attestation::decode_from(Decoder& d) {
    Attestation a;
    a.measurement = ContentHash::decode_from(d);
    a.request_hash = ContentHash::decode_from(d);
    a.result_hash = ContentHash::decode_from(d);
    a.nonce = d.fixed<16>();
    a.enclave_signature = d.bytes();
    return a;
}

void NerResultBody::encode_to(Encoder& e) const {
    e.u32(static_cast<std::uint32_t>(counts.size()));
    for (const auto& [entity, n] : counts) {
        e.str(entity);
        e.u64(n);
    }
}

NerResultBody NerResultBody::decode_from(Decoder& d) {
    NerResultBody b;
    std::uint32_t n = d.u32();
    std::string prev;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string entity = d.str();
        if (i > 0 && entity <= prev) throw DecodeError("ner counts not strictly increasing");
        prev = entity;
        b.counts[entity] = d.u64();
    }
    return b;
}

void SentimentResultBody::encode_to(Encoder& e) const {
    e.f64(mean);
    e.u64(matched_tokens);
}

SentimentResultBody SentimentResultBody::decode_from(Decoder& d) {
    SentimentResultBody b;
    b.mean = d.f64();
    b.matched_tokens = d.u64();
    return b;
}

void StatResultBody::encode_to(Encoder& e) const { e.f64(value); }

StatResultBody StatResultBody::decode_from(Decoder& d) {
    StatResultBody b;
    b.value = d.f64();
    return b;
}

void LinregResultBody::encode_to(Encoder& e) const {
    e.f64(slope);
    e.f64(intercept);
    e.u64(n);
}

LinregResultBody LinregResultBody::decode_from(Decoder& d) {
    LinregResultBody b;
    b.slope = d.f64();
    b.intercept = d.f64();
    b.n = d.u64();
    return b;
}

void TrainRequestBody::encode_to(Encoder& e) const {
    e.u32(round);
    model_in.encode_to(e);
    hyper.encode_to(e);
}

TrainRequestBody TrainRequestBody::decode_from(Decoder& d) {
    TrainRequestBody b;
    b.round = d.u32();
    b.model_in = ModelParams::decode_from(d);
    b.hyper = TrainHyper::decode_from(d);
    return b;
}

void TrainResultBody::encode_to(Encoder& e) const {
    e.u32(round);
    model_out.encode_to(e);
    e.u64(n_samples);
    e.f64(loss_final);
}

TrainResultBody TrainResultBody::decode_from(Decoder& d) {
    TrainResultBody b;
    b.round = d.u32();
    b.model_out = ModelParams::decode_from(d);
    b.n_samples = d.u64();
    b.loss_final = d.f64();
    return b;
}

EnclaveInstance::EnclaveInstance(std::optional<crypto::Seed> seed, std::string version_tag)
    : keypair_(crypto::sign_keygen(seed)), version_tag_(std::move(version_tag)) {}

Measurement EnclaveInstance::load_bundle(const FunctionBundle& bundle) {
    auto family = code_spec_family(bundle.code_spec);
    if (!family) throw UnknownFunctionFamilyError("unparseable code_spec");
    if (bundles_.contains(bundle.function_id)) throw DuplicateFunctionError();
    Measurement m = measure_bundle(bundle, version_tag_);
    bundles_[bundle.function_id] = Loaded{bundle, m};
    return m;
}

bool EnclaveInstance::has_function(const std::string& function_id) const {
    return bundles_.contains(function_id);
}

std::optional<Measurement> EnclaveInstance::measurement_of(const std::string& function_id) const {
    auto it = bundles_.find(function_id);
    if (it == bundles_.end()) return std::nullopt;
    return it->second.measurement;
}

std::array<std::uint8_t, 16> EnclaveInstance::next_nonce() const {
    std::uint64_t n = nonce_counter_.fetch_add(1, std::memory_order_relaxed);
    Encoder e;
    e.bytes(keypair_.public_key);
    e.u64(n);
    ContentHash h = content_hash(e.take());
    std::array<std::uint8_t, 16> nonce{};
    std::copy(h.digest.begin(), h.digest.begin() + 16, nonce.begin());
    return nonce;
}

static void busy_wait_micros(std::uint64_t micros) {
    if (micros == 0) return;
    auto until = std::chrono::steady_clock::now() + std::chrono::microseconds(micros);
    while (std::chrono::steady_clock::now() < until) {
    }
}

Bytes EnclaveInstance::evaluate(const FunctionBundle& bundle, const ComputationRequest& re,
                                const std::vector<DataRecord>& records) const {
    Decoder spec(bundle.code_spec);
    std::string family = spec.str();
    Encoder out;

    if (family == kFamilyNer) {
        EntityDictionary dict = EntityDictionary::decode_from(spec);
        std::vector<std::string> texts;
        for (const DataRecord& r : records)
            for (std::string& t : schema_texts(r.schema_tag, r.payload))
                texts.push_back(std::move(t));
        NerResultBody body{ner_count(texts, dict)};
        body.encode_to(out);
    } else if (family == kFamilySentiment) {
        SentimentLexicon lex = SentimentLexicon::decode_from(spec);
        std::vector<std::string> texts;
        for (const DataRecord& r : records)
            for (std::string& t : schema_texts(r.schema_tag, r.payload))
                texts.push_back(std::move(t));
        SentimentResult sr = sentiment_avg(texts, lex);
        SentimentResultBody body{sr.mean, sr.matched_tokens};
        body.encode_to(out);
    } else if (family == kFamilyStat) {
        StatKind kind = static_cast<StatKind>(spec.u8());
        std::string field = spec.str();
        std::vector<double> values;
        for (const DataRecord& r : records) {
            if (field == "collected_at_ms") {
                values.push_back(static_cast<double>(r.collected_at_ms));
            } else if (auto v = schema_numeric_field(r.schema_tag, r.payload, field)) {
                values.push_back(*v);
            }
        }
        StatResultBody body{stat(kind, records.size(), values)};
        body.encode_to(out);
    } else if (family == kFamilyLinreg) {
        std::string x_field = spec.str();
        std::string y_field = spec.str();
        std::vector<double> xs, ys;
        for (const DataRecord& r : records) {
            auto get = [&](const std::string& field) -> std::optional<double> {
                if (field == "collected_at_ms") return static_cast<double>(r.collected_at_ms);
                return schema_numeric_field(r.schema_tag, r.payload, field);
            };
            auto x = get(x_field);
            auto y = get(y_field);
            if (x && y) {
                xs.push_back(*x);
                ys.push_back(*y);
            }
        }
        LinregResult lr = linreg_fit(xs, ys);
        LinregResultBody body{lr.slope, lr.intercept, lr.n};
        body.encode_to(out);
    } else if (family == kFamilyTrain) {
        ModelLayout layout = ModelLayout::decode_from(spec);
        TrainRequestBody req = canonical_decode<TrainRequestBody>(re.function_params);
        if (req.model_in.layout != layout)
            throw EvaluationError(EvaluationError::Kind::LayoutMismatch,
                                  "model_in layout differs from bundle layout");
        std::vector<LabeledSample> samples;
        for (const DataRecord& r : records) {
            if (r.schema_tag != kSchemaLabeledTitle)
                throw EvaluationError(EvaluationError::Kind::BadParams,
                                      "train expects labeled_title.v1 records");
            LabeledTitleV1 t = canonical_decode<LabeledTitleV1>(r.payload);
            samples.push_back(LabeledSample{std::move(t.title), t.engaged});
        }
        TrainOutput tr = local_train(samples, req.model_in, req.hyper);
        TrainResultBody body{req.round, std::move(tr.model_out), tr.n_samples, tr.loss_final};
        body.encode_to(out);
    } else {
        throw UnknownFunctionFamilyError(family);
    }
    return out.take();
}

std::pair<ComputeResult, Attestation> EnclaveInstance::execute(
    const ComputationRequest& re, const std::vector<DataRecord>& records,
    const SourceKeyResolver& resolve_key) const {
    auto it = bundles_.find(re.function_id);
    if (it == bundles_.end()) throw FunctionNotLoadedError();

    for (const DataRecord& r : records) {
        std::optional<Bytes> key = resolve_key(r.source_id);
        if (!key || !crypto::sign_verify(r.signing_bytes(), r.source_signature, *key))
            throw InputSignatureInvalidError();
    }

    busy_wait_micros(overhead_.setup_micros);
    busy_wait_micros(overhead_.per_record_micros * records.size());

    ComputeResult result;
    result.request_id = re.request_id;
    result.payload = evaluate(it->second.bundle, re, records);
    result.record_count = records.size();

    Attestation att;
    att.measurement = it->second.measurement;
    att.request_hash = content_hash(canonical_encode(re));
    att.result_hash = content_hash(canonical_encode(result));
    att.nonce = next_nonce();
    att.enclave_signature = crypto::sign_detached(att.signing_bytes(), keypair_.secret_key);
    return {std::move(result), std::move(att)};
}

bool vrf(const Bytes& enclave_public_key, const Measurement& expected_measurement,
         const ComputationRequest& re, const ComputeResult& result, const Attestation& att) {
    if (!crypto::sign_verify(att.signing_bytes(), att.enclave_signature, enclave_public_key))
        return false;
    if (att.measurement != expected_measurement) return false;
    if (att.request_hash != content_hash(canonical_encode(re))) return false;
    if (att.result_hash != content_hash(canonical_encode(result))) return false;
    return true;
}

}  // namespace pda
