#include "pda/bench.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace pda {

using nlohmann::json;

void BenchConfig::validate() const {
    if (sizes.size() < 2) throw std::invalid_argument("bench needs at least two sizes");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1])
            throw std::invalid_argument("bench sizes must be strictly increasing");
    if (sizes.front() == 0) throw std::invalid_argument("bench sizes must be positive");
    if (trials == 0) throw std::invalid_argument("bench needs at least one trial");
    if (modes.empty()) throw std::invalid_argument("bench needs at least one mode");
    static const std::set<std::string> known = {kModeCentralized, kModeDecentralized,
                                               kModeEnclave};
    for (const std::string& m : modes)
        if (!known.contains(m)) throw std::invalid_argument("unknown bench mode: " + m);
}

namespace {

const std::vector<std::string>& entity_pool() {
    static const std::vector<std::string> pool = {"aurora", "basalt", "cobalt",
                                                  "delta",  "ember",  "flux"};
    return pool;
}

const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> pool = {
        "the",    "quick",   "signal", "update",  "morning", "project", "garden",
        "coffee", "meeting", "travel", "network", "picture", "because", "sunday",
        "window", "thread",  "market", "silver",  "orange",  "puzzle",  "stream",
        "quiet",  "bright",  "random"};
    return pool;
}

std::string synth_body(std::mt19937_64& rng, std::size_t min_chars) {
    const auto& words = word_pool();
    const auto& entities = entity_pool();
    std::string body;
    std::size_t i = 0;
    while (body.size() < min_chars) {
        if (!body.empty()) body += ' ';
        if (i % 15 == 14) body += entities[rng() % entities.size()];
        else body += words[rng() % words.size()];
        ++i;
    }
    return body;
}

std::vector<std::string> synth_posts(std::uint64_t seed, std::uint64_t count) {
    std::mt19937_64 rng(seed);
    const auto& words = word_pool();
    const auto& entities = entity_pool();
    std::vector<std::string> items;
    items.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string title;
        std::size_t title_words = 4 + rng() % 5;
        for (std::size_t w = 0; w < title_words; ++w) {
            if (w) title += ' ';
            if (w == 1 && rng() % 3 == 0) title += entities[rng() % entities.size()];
            else title += words[rng() % words.size()];
        }
        json j;
        j["title"] = title;
        j["body"] = synth_body(rng, 2'000);
        j["liked"] = (rng() % 2) == 0;
        items.push_back(j.dump());
    }
    return items;
}

EntityDictionary bench_dictionary() {
    EntityDictionary dict;
    for (const std::string& e : entity_pool()) dict.entries.insert(e);
    return dict;
}

double timed_ms(const std::function<void()>& work) {
    auto t0 = std::chrono::steady_clock::now();
    work();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void run_centralized(const std::vector<std::string>& items, const EntityDictionary& dict) {
    std::vector<std::string> texts;
    texts.reserve(items.size() * 2);
    for (const std::string& item : items) {
        json j = json::parse(item);
        texts.push_back(j.at("title").get<std::string>());
        texts.push_back(j.at("body").get<std::string>());
    }
    auto counts = ner_count(texts, dict);
    if (counts.empty()) throw std::runtime_error("bench corpus matched no entities");
}

ScenarioSpec pipeline_spec(std::uint64_t seed, std::uint64_t count,
                           const std::vector<std::string>& items, bool with_overhead,
                           const ExecOverhead& overhead) {
    ScenarioSpec spec;
    spec.sim.seed = seed;
    spec.sim.latency.min_ms = 1;
    spec.sim.latency.max_ms = 1;
    spec.sim.drop_rate = 0.0;
    spec.sim.duration_ms = 60'000;
    if (with_overhead) spec.enclave_overhead = overhead;

    FunctionBundle fb;
    fb.function_id = "entity-count";
    fb.code_spec = code_spec_ner(bench_dictionary());
    fb.output_schema = "ner.counts.v1";
    spec.functions.push_back(fb);

    ScenarioUser user;
    ScenarioSource source;
    source.source_id = "posts";
    source.schema_tag = kSchemaPost;
    source.items = items;
    user.sources.push_back(std::move(source));
    user.grants.push_back(ScenarioGrant{"posts", OperationKind::Compute, std::nullopt});
    ScenarioPolicy policy;
    policy.source_id = "posts";
    policy.policy.allowed_function_ids = {"entity-count"};
    policy.policy.max_records = count;
    policy.policy.max_requests_per_day = 16;
    user.policies.push_back(std::move(policy));
    spec.users.push_back(std::move(user));

    ComputeAction act;
    act.at_ms = 10;
    act.user = 0;
    act.function_id = "entity-count";
    act.selector.source_id = "posts";
    act.selector.schema_tag = kSchemaPost;
    act.selector.max_records = count;
    act.timeout_ms = 50'000;
    spec.computes.push_back(std::move(act));
    return spec;
}

void run_pipeline(const ScenarioSpec& spec) {
    ScenarioResult result = run_scenario(spec);
    if (result.outcomes.size() != 1 ||
        result.outcomes.begin()->second.status != RequestStatus::Verified)
        throw std::runtime_error("bench pipeline request did not verify");
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

double r_squared_linear(const std::vector<double>& x, const std::vector<double>& y) {
    LinregResult fit = linreg_fit(x, y);
    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double pred = fit.slope * x[i] + fit.intercept;
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    if (ss_tot <= 0.0) return 1.0;
    return 1.0 - ss_res / ss_tot;
}

BenchReport run_bench(const BenchConfig& config) {
    config.validate();
    EntityDictionary dict = bench_dictionary();

    std::map<std::uint64_t, std::vector<std::string>> corpus;
    for (std::uint64_t size : config.sizes)
        corpus[size] = synth_posts(config.seed ^ size, size);

    BenchReport report;
    for (const std::string& mode : config.modes) {
        std::vector<double> xs, ys;
        for (std::uint64_t size : config.sizes) {
            const std::vector<std::string>& items = corpus[size];
            std::function<void()> work;
            ScenarioSpec spec;
            if (mode == kModeCentralized) {
                work = [&items, &dict] { run_centralized(items, dict); };
            } else {
                spec = pipeline_spec(config.seed, size, items, mode == kModeEnclave,
                                     config.enclave_overhead);
                work = [&spec] { run_pipeline(spec); };
            }
            work();  // warmup, untimed
            std::vector<double> samples;
            samples.reserve(config.trials);
            for (std::uint32_t t = 0; t < config.trials; ++t) samples.push_back(timed_ms(work));
            double med = median(samples);
            report.rows.push_back(BenchRow{size, mode, med, config.trials});
            xs.push_back(static_cast<double>(size));
            ys.push_back(med);
        }
        BenchFit fit;
        fit.mode = mode;
        LinregResult lr = linreg_fit(xs, ys);
        fit.slope_ms_per_record = lr.slope;
        fit.intercept_ms = lr.intercept;
        fit.r_squared = r_squared_linear(xs, ys);
        report.fits.push_back(fit);
    }
    return report;
}

std::string bench_report_jsonl(const BenchReport& report) {
    std::ostringstream out;
    for (const BenchRow& row : report.rows) {
        json j;
        j["schema"] = kBenchSchema;
        j["kind"] = "row";
        j["record_count"] = row.record_count;
        j["mode"] = row.mode;
        j["runtime_ms"] = row.runtime_ms;
        j["trials"] = row.trials;
        out << j.dump() << '\n';
    }
    for (const BenchFit& fit : report.fits) {
        json j;
        j["schema"] = kBenchSchema;
        j["kind"] = "fit";
        j["mode"] = fit.mode;
        j["slope_ms_per_record"] = fit.slope_ms_per_record;
        j["intercept_ms"] = fit.intercept_ms;
        j["r_squared"] = fit.r_squared;
        out << j.dump() << '\n';
    }
    return out.str();
}

std::string bench_series_csv(const BenchReport& report) {
    std::ostringstream out;
    out << "mode,record_count,runtime_ms\n";
    for (const BenchRow& row : report.rows)
        out << row.mode << ',' << row.record_count << ',' << row.runtime_ms << '\n';
    return out.str();
}

}  // namespace pda
