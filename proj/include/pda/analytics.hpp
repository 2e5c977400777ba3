#pragma once

#include "pda/codec.hpp"
#include "pda/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pda {

class EvaluationError : public std::runtime_error {
public:
    enum class Kind : std::uint8_t { EmptyInput, Degenerate, LayoutMismatch, BadParams };

    EvaluationError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// lowercase word tokens, split on non-alphanumeric
std::vector<std::string> tokenize(const std::string& text);

struct EntityDictionary {
    std::set<std::string> entries;  // lowercase, trimmed

    void validate() const;  // throws std::invalid_argument
    void encode_to(Encoder& e) const;
    static EntityDictionary decode_from(Decoder& d);
};

struct SentimentLexicon {
    std::map<std::string, double> scores;  // token -> [-1, +1]

    void validate() const;
    void encode_to(Encoder& e) const;
    static SentimentLexicon decode_from(Decoder& d);
};

// Case-insensitive phrase match on token boundaries; overlapping occurrences
// all count. Entities with zero matches are omitted from the result.
std::map<std::string, std::uint64_t> ner_count(const std::vector<std::string>& texts,
                                               const EntityDictionary& dict);

struct SentimentResult {
    double mean = 0.0;  // 0.0 by convention when nothing matched
    std::uint64_t matched_tokens = 0;
};

SentimentResult sentiment_avg(const std::vector<std::string>& texts,
                              const SentimentLexicon& lex);

enum class StatKind : std::uint8_t { Count = 0, Sum = 1, Mean = 2 };

std::string to_string(StatKind kind);
StatKind stat_kind_from_string(const std::string& s);

// count is over all selected records; sum/mean over the values present.
// Mean over zero values throws EvaluationError(EmptyInput).
double stat(StatKind kind, std::uint64_t record_count, const std::vector<double>& values);

struct LinregResult {
    double slope = 0.0;
    double intercept = 0.0;
    std::uint64_t n = 0;
};

// ordinary least squares; throws EvaluationError(Degenerate) on n<2 or zero x-variance
LinregResult linreg_fit(const std::vector<double>& x, const std::vector<double>& y);

// hashed bag-of-words features

inline constexpr std::uint32_t kFeatureDim = 256;

// token index = first 8 bytes of content_hash(token) as big-endian u64, mod dim
std::uint32_t feature_index(const std::string& token, std::uint32_t feature_dim);
std::vector<double> featurize(const std::string& text, std::uint32_t feature_dim);

// Flat weight layout. hidden_dim == 0 is plain logistic regression:
//   [w[0..F-1], b]                                  (F+1 weights)
// hidden_dim == H > 0 is one tanh hidden layer:
//   [W1 row-major H x F, b1[0..H-1], v[0..H-1], c]  (H*F + 2H + 1 weights)
struct ModelLayout {
    std::uint32_t feature_dim = kFeatureDim;
    std::uint32_t hidden_dim = 0;

    bool operator==(const ModelLayout&) const = default;
    std::size_t weight_count() const;
    void encode_to(Encoder& e) const;
    static ModelLayout decode_from(Decoder& d);
};

struct ModelParams {
    ModelLayout layout;
    std::vector<double> weights;

    bool operator==(const ModelParams&) const = default;
    void validate() const;  // throws EvaluationError(LayoutMismatch) on length/finite violations
    void encode_to(Encoder& e) const;
    static ModelParams decode_from(Decoder& d);
};

// zero weights for logreg; small deterministic tanh-init for the hidden layer
ModelParams init_params(const ModelLayout& layout, std::uint64_t seed);

// raw score z (pre-sigmoid) for one feature vector
double forward(const ModelParams& params, const std::vector<double>& features);

double sigmoid(double z);

// mean binary cross-entropy of sigmoid(forward(...)) against labels in {0,1}
double bce_loss(const ModelParams& params, const std::vector<std::vector<double>>& features,
                const std::vector<double>& labels);

// gradient of bce_loss w.r.t. every weight, same flat layout
std::vector<double> bce_gradient(const ModelParams& params,
                                 const std::vector<std::vector<double>>& features,
                                 const std::vector<double>& labels);

// full-batch gradient descent, epochs steps at fixed learning_rate
ModelParams gd_train(ModelParams params, const std::vector<std::vector<double>>& features,
                     const std::vector<double>& labels, std::uint32_t epochs,
                     double learning_rate);

struct TrainHyper {
    std::uint32_t epochs = 50;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;  // reserved for stochastic variants; full-batch GD ignores it

    bool operator==(const TrainHyper&) const = default;
    void encode_to(Encoder& e) const;
    static TrainHyper decode_from(Decoder& d);
};

struct LabeledSample {
    std::string title;
    bool engaged = false;
};

struct TrainOutput {
    ModelParams model_out;
    std::uint64_t n_samples = 0;
    double loss_final = 0.0;
};

// throws EvaluationError(EmptyInput) on no samples, (LayoutMismatch) on bad model_in
TrainOutput local_train(const std::vector<LabeledSample>& samples, const ModelParams& model_in,
                        const TrainHyper& hyper);

double predict_prob(const ModelParams& params, const std::string& title);

}  // namespace pda
