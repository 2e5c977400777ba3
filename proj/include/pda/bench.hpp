#pragma once

#include "pda/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pda {

inline constexpr const char* kBenchSchema = "bench.v1";

inline constexpr const char* kModeCentralized = "centralized";
inline constexpr const char* kModeDecentralized = "decentralized";
inline constexpr const char* kModeEnclave = "decentralized+enclave";

struct BenchRow {
    std::uint64_t record_count = 0;
    std::string mode;
    double runtime_ms = 0.0;  // median over trials
    std::uint32_t trials = 0;
};

struct BenchFit {
    std::string mode;
    double slope_ms_per_record = 0.0;
    double intercept_ms = 0.0;
    double r_squared = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::vector<BenchFit> fits;
};

struct BenchConfig {
    std::vector<std::uint64_t> sizes;  // strictly increasing, at least two
    std::vector<std::string> modes = {kModeCentralized, kModeDecentralized, kModeEnclave};
    std::uint32_t trials = 3;
    std::uint64_t seed = 1;
    ExecOverhead enclave_overhead{10'000, 50};  // emulated attested-execution cost

    void validate() const;  // throws std::invalid_argument
};

// End-to-end entity-count timing per (size, mode): centralized calls the
// function on pooled records directly; decentralized drives the full
// request/attest/verify pipeline over the simulated network; enclave mode
// adds the emulated execution overhead. One untimed warmup per pair.
BenchReport run_bench(const BenchConfig& config);

// fraction of runtime variance a linear model explains; 1.0 for a perfect fit
double r_squared_linear(const std::vector<double>& x, const std::vector<double>& y);

std::string bench_report_jsonl(const BenchReport& report);
std::string bench_series_csv(const BenchReport& report);

}  // namespace pda
