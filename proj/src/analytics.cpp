#include "pda/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

namespace pda {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

void EntityDictionary::validate() const {
    if (entries.empty()) throw std::invalid_argument("entity dictionary is empty");
    for (const std::string& e : entries) {
        if (e.empty() || e.front() == ' ' || e.back() == ' ')
            throw std::invalid_argument("entity entry not trimmed: '" + e + "'");
        for (char c : e) {
            if (c == '\n' || c == '\r')
                throw std::invalid_argument("entity entry contains newline");
            if (std::isupper(static_cast<unsigned char>(c)))
                throw std::invalid_argument("entity entry not lowercase: '" + e + "'");
        }
    }
}

void EntityDictionary::encode_to(Encoder& e) const {
    e.u32(static_cast<std::uint32_t>(entries.size()));
    for (const std::string& s : entries) e.str(s);  // set order = sorted = canonical
}

EntityDictionary EntityDictionary::decode_from(Decoder& d) {
    EntityDictionary dict;
    std::uint32_t n = d.u32();
    std::string prev;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string s = d.str();
        if (i > 0 && s <= prev) throw DecodeError("dictionary entries not strictly increasing");
        prev = s;
        dict.entries.insert(std::move(s));
    }
    return dict;
}

void SentimentLexicon::validate() const {
    for (const auto& [token, score] : scores) {
        if (token.empty()) throw std::invalid_argument("lexicon token empty");
        if (!(score >= -1.0 && score <= 1.0))
            throw std::invalid_argument("lexicon score out of [-1,1] for '" + token + "'");
    }
}

void SentimentLexicon::encode_to(Encoder& e) const {
    e.u32(static_cast<std::uint32_t>(scores.size()));
    for (const auto& [token, score] : scores) {
        e.str(token);
        e.f64(score);
    }
}

SentimentLexicon SentimentLexicon::decode_from(Decoder& d) {
    SentimentLexicon lex;
    std::uint32_t n = d.u32();
    std::string prev;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string token = d.str();
        if (i > 0 && token <= prev) throw DecodeError("lexicon tokens not strictly increasing");
        prev = token;
        lex.scores[token] = d.f64();
    }
    return lex;
}

std::map<std::string, std::uint64_t> ner_count(const std::vector<std::string>& texts,
                                               const EntityDictionary& dict) {
    std::vector<std::pair<std::string, std::vector<std::string>>> entity_tokens;
    for (const std::string& entity : dict.entries)
        entity_tokens.emplace_back(entity, tokenize(entity));

    std::map<std::string, std::uint64_t> counts;
    for (const std::string& text : texts) {
        std::vector<std::string> tokens = tokenize(text);
        for (const auto& [entity, etoks] : entity_tokens) {
            if (etoks.empty() || etoks.size() > tokens.size()) continue;
            for (std::size_t i = 0; i + etoks.size() <= tokens.size(); ++i) {
                if (std::equal(etoks.begin(), etoks.end(), tokens.begin() + i))
                    ++counts[entity];
            }
        }
    }
    return counts;
}

SentimentResult sentiment_avg(const std::vector<std::string>& texts,
                              const SentimentLexicon& lex) {
    double sum = 0.0;
    std::uint64_t matched = 0;
    for (const std::string& text : texts) {
        for (const std::string& token : tokenize(text)) {
            auto it = lex.scores.find(token);
            if (it != lex.scores.end()) {
                sum += it->second;
                ++matched;
            }
        }
    }
    SentimentResult r;
    r.matched_tokens = matched;
    r.mean = matched == 0 ? 0.0 : sum / static_cast<double>(matched);
    return r;
}

std::string to_string(StatKind kind) {
    switch (kind) {
        case StatKind::Count: return "count";
        case StatKind::Sum: return "sum";
        case StatKind::Mean: return "mean";
    }
    throw std::invalid_argument("bad StatKind");
}

StatKind stat_kind_from_string(const std::string& s) {
    if (s == "count") return StatKind::Count;
    if (s == "sum") return StatKind::Sum;
    if (s == "mean") return StatKind::Mean;
    throw std::invalid_argument("unknown stat kind: " + s);
}

double stat(StatKind kind, std::uint64_t record_count, const std::vector<double>& values) {
    switch (kind) {
        case StatKind::Count:
            return static_cast<double>(record_count);
        case StatKind::Sum: {
            double s = 0.0;
            for (double v : values) s += v;
            return s;
        }
        case StatKind::Mean: {
            if (values.empty())
                throw EvaluationError(EvaluationError::Kind::EmptyInput,
                                      "mean over zero values");
            double s = 0.0;
            for (double v : values) s += v;
            return s / static_cast<double>(values.size());
        }
    }
    throw std::invalid_argument("bad StatKind");
}

LinregResult linreg_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw EvaluationError(EvaluationError::Kind::BadParams, "x/y length mismatch");
    const std::size_t n = x.size();
    if (n < 2)
        throw EvaluationError(EvaluationError::Kind::Degenerate, "linreg needs n >= 2");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw EvaluationError(EvaluationError::Kind::Degenerate, "zero x-variance");
    LinregResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    r.n = n;
    return r;
}

std::uint32_t feature_index(const std::string& token, std::uint32_t feature_dim) {
    ContentHash h = content_hash(to_bytes(token));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | h.digest[static_cast<std::size_t>(i)];
    return static_cast<std::uint32_t>(v % feature_dim);
}

std::vector<double> featurize(const std::string& text, std::uint32_t feature_dim) {
    std::vector<double> f(feature_dim, 0.0);
    for (const std::string& token : tokenize(text)) f[feature_index(token, feature_dim)] += 1.0;
    return f;
}

std::size_t ModelLayout::weight_count() const {
    if (hidden_dim == 0) return static_cast<std::size_t>(feature_dim) + 1;
    return static_cast<std::size_t>(hidden_dim) * feature_dim + 2ull * hidden_dim + 1;
}

void ModelLayout::encode_to(Encoder& e) const {
    e.u32(feature_dim);
    e.u32(hidden_dim);
}

ModelLayout ModelLayout::decode_from(Decoder& d) {
    ModelLayout l;
    l.feature_dim = d.u32();
    l.hidden_dim = d.u32();
    if (l.feature_dim == 0) throw DecodeError("feature_dim must be positive");
    return l;
}

void ModelParams::validate() const {
    if (weights.size() != layout.weight_count())
        throw EvaluationError(EvaluationError::Kind::LayoutMismatch,
                              "weight vector length does not match layout");
    for (double w : weights)
        if (!std::isfinite(w))
            throw EvaluationError(EvaluationError::Kind::LayoutMismatch,
                                  "non-finite weight");
}

void ModelParams::encode_to(Encoder& e) const {
    layout.encode_to(e);
    e.u32(static_cast<std::uint32_t>(weights.size()));
    for (double w : weights) e.f64(w);
}

ModelParams ModelParams::decode_from(Decoder& d) {
    ModelParams p;
    p.layout = ModelLayout::decode_from(d);
    std::uint32_t n = d.u32();
    if (n != p.layout.weight_count()) throw DecodeError("weight count mismatch with layout");
    p.weights.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) p.weights.push_back(d.f64());
    return p;
}

// uniform in [-scale, scale) from raw mt19937_64 output; std distributions are
// not bit-stable across standard libraries
static double uniform_signed(std::mt19937_64& rng, double scale) {
    double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
    return (2.0 * u - 1.0) * scale;
}

ModelParams init_params(const ModelLayout& layout, std::uint64_t seed) {
    ModelParams p;
    p.layout = layout;
    p.weights.assign(layout.weight_count(), 0.0);
    if (layout.hidden_dim > 0) {
        // break hidden-unit symmetry; zero init would keep all units identical
        std::mt19937_64 rng(seed);
        double scale = 1.0 / std::sqrt(static_cast<double>(layout.feature_dim));
        std::size_t w1 = static_cast<std::size_t>(layout.hidden_dim) * layout.feature_dim;
        for (std::size_t i = 0; i < w1; ++i) p.weights[i] = uniform_signed(rng, scale);
        std::size_t voff = w1 + layout.hidden_dim;
        for (std::size_t i = 0; i < layout.hidden_dim; ++i)
            p.weights[voff + i] = uniform_signed(rng, 0.5);
    }
    return p;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double forward(const ModelParams& params, const std::vector<double>& features) {
    const ModelLayout& l = params.layout;
    const std::vector<double>& w = params.weights;
    if (l.hidden_dim == 0) {
        double z = w[l.feature_dim];  // bias
        for (std::uint32_t j = 0; j < l.feature_dim; ++j) z += w[j] * features[j];
        return z;
    }
    const std::size_t w1 = static_cast<std::size_t>(l.hidden_dim) * l.feature_dim;
    const std::size_t b1 = w1;
    const std::size_t voff = w1 + l.hidden_dim;
    const std::size_t coff = voff + l.hidden_dim;
    double z = w[coff];
    for (std::uint32_t h = 0; h < l.hidden_dim; ++h) {
        double a = w[b1 + h];
        const double* row = w.data() + static_cast<std::size_t>(h) * l.feature_dim;
        for (std::uint32_t j = 0; j < l.feature_dim; ++j) a += row[j] * features[j];
        z += w[voff + h] * std::tanh(a);
    }
    return z;
}

// log(1 + e^z) without overflow
static double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double bce_loss(const ModelParams& params, const std::vector<std::vector<double>>& features,
                const std::vector<double>& labels) {
    if (features.empty())
        throw EvaluationError(EvaluationError::Kind::EmptyInput, "bce_loss over zero samples");
    double total = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        double z = forward(params, features[i]);
        total += softplus(z) - labels[i] * z;  // -[y log p + (1-y) log (1-p)]
    }
    return total / static_cast<double>(features.size());
}

std::vector<double> bce_gradient(const ModelParams& params,
                                 const std::vector<std::vector<double>>& features,
                                 const std::vector<double>& labels) {
    const ModelLayout& l = params.layout;
    const std::vector<double>& w = params.weights;
    std::vector<double> grad(w.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(features.size());

    if (l.hidden_dim == 0) {
        for (std::size_t i = 0; i < features.size(); ++i) {
            double z = forward(params, features[i]);
            double delta = (sigmoid(z) - labels[i]) * inv_n;  // dL/dz
            for (std::uint32_t j = 0; j < l.feature_dim; ++j)
                grad[j] += delta * features[i][j];
            grad[l.feature_dim] += delta;
        }
        return grad;
    }

    const std::size_t w1 = static_cast<std::size_t>(l.hidden_dim) * l.feature_dim;
    const std::size_t b1 = w1;
    const std::size_t voff = w1 + l.hidden_dim;
    const std::size_t coff = voff + l.hidden_dim;
    std::vector<double> act(l.hidden_dim);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const std::vector<double>& x = features[i];
        double z = w[coff];
        for (std::uint32_t h = 0; h < l.hidden_dim; ++h) {
            double a = w[b1 + h];
            const double* row = w.data() + static_cast<std::size_t>(h) * l.feature_dim;
            for (std::uint32_t j = 0; j < l.feature_dim; ++j) a += row[j] * x[j];
            act[h] = std::tanh(a);
            z += w[voff + h] * act[h];
        }
        double delta = (sigmoid(z) - labels[i]) * inv_n;
        grad[coff] += delta;
        for (std::uint32_t h = 0; h < l.hidden_dim; ++h) {
            grad[voff + h] += delta * act[h];
            double dh = delta * w[voff + h] * (1.0 - act[h] * act[h]);  // tanh'
            grad[b1 + h] += dh;
            double* grow = grad.data() + static_cast<std::size_t>(h) * l.feature_dim;
            for (std::uint32_t j = 0; j < l.feature_dim; ++j) grow[j] += dh * x[j];
        }
    }
    return grad;
}

ModelParams gd_train(ModelParams params, const std::vector<std::vector<double>>& features,
                     const std::vector<double>& labels, std::uint32_t epochs,
                     double learning_rate) {
    for (std::uint32_t e = 0; e < epochs; ++e) {
        std::vector<double> grad = bce_gradient(params, features, labels);
        for (std::size_t i = 0; i < params.weights.size(); ++i)
            params.weights[i] -= learning_rate * grad[i];
    }
    return params;
}

void TrainHyper::encode_to(Encoder& e) const {
    e.u32(epochs);
    e.f64(learning_rate);
    e.u64(seed);
}

TrainHyper TrainHyper::decode_from(Decoder& d) {
    TrainHyper h;
    h.epochs = d.u32();
    h.learning_rate = d.f64();
    h.seed = d.u64();
    return h;
}

TrainOutput local_train(const std::vector<LabeledSample>& samples, const ModelParams& model_in,
                        const TrainHyper& hyper) {
    if (samples.empty())
        throw EvaluationError(EvaluationError::Kind::EmptyInput, "local_train with no samples");
    model_in.validate();

    std::vector<std::vector<double>> features;
    std::vector<double> labels;
    features.reserve(samples.size());
    labels.reserve(samples.size());
    for (const LabeledSample& s : samples) {
        features.push_back(featurize(s.title, model_in.layout.feature_dim));
        labels.push_back(s.engaged ? 1.0 : 0.0);
    }

    TrainOutput out;
    out.model_out = gd_train(model_in, features, labels, hyper.epochs, hyper.learning_rate);
    out.n_samples = samples.size();
    out.loss_final = bce_loss(out.model_out, features, labels);
    return out;
}

double predict_prob(const ModelParams& params, const std::string& title) {
    return sigmoid(forward(params, featurize(title, params.layout.feature_dim)));
}

}  // namespace pda
