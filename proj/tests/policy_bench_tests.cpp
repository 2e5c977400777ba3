#include "doctest.h"

#include "pda/bench.hpp"
#include "pda/policy_file.hpp"

#include <filesystem>
#include <fstream>

using namespace pda;
namespace fs = std::filesystem;

namespace {

AccessPolicy sample_policy() {
    AccessPolicy p;
    p.owner_did = "did:pda:zowner";
    grant(p, "did:pda:zsp1", "posts", OperationKind::Compute, std::nullopt, 100);
    grant(p, "did:pda:zsp1", "titles", OperationKind::Train, 9'999'999, 200);
    grant(p, "did:pda:zsp2", "posts", OperationKind::Compute, std::nullopt, 300);
    ComputationPolicy posts_cp;
    posts_cp.allowed_function_ids = {"fn.ner", "fn.sentiment"};
    posts_cp.max_records = 50;
    posts_cp.max_requests_per_day = 10;
    p.policies["posts"] = posts_cp;
    ComputationPolicy titles_cp;
    titles_cp.allowed_function_ids = {"fn.train"};
    titles_cp.max_records = 500;
    titles_cp.max_requests_per_day = 24;
    p.policies["titles"] = titles_cp;
    return p;
}

}  // namespace

TEST_CASE("policy text renders and parses back to the same value") {
    AccessPolicy p = sample_policy();
    std::string text = policy_to_text(p);
    AccessPolicy back = policy_from_text(text);
    CHECK(back == p);

    // a render of the parse is stable too
    CHECK(policy_to_text(back) == text);

    // comments and blank lines are ignored
    std::string commented = "# leading comment\n\n" + text + "\n# trailing\n";
    CHECK(policy_from_text(commented) == p);
}

TEST_CASE("empty policy round trips") {
    AccessPolicy p;
    p.owner_did = "did:pda:zempty";
    AccessPolicy back = policy_from_text(policy_to_text(p));
    CHECK(back == p);
    CHECK(back.grants.empty());
    CHECK(back.policies.empty());
}

TEST_CASE("policy parser reports malformed input with line context") {
    CHECK_THROWS_AS(policy_from_text("owner = unquoted"), PolicyFileError);
    CHECK_THROWS_AS(policy_from_text("revision = \"nope\""), PolicyFileError);
    CHECK_THROWS_AS(policy_from_text("[unknown.section]\n"), PolicyFileError);
    CHECK_THROWS_AS(policy_from_text("[[grant]]\noperation = \"Teleport\"\n"), PolicyFileError);
    CHECK_THROWS_AS(policy_from_text("stray = true\n"), PolicyFileError);

    try {
        policy_from_text("owner = \"x\"\nbroken line here\n");
        FAIL("expected PolicyFileError");
    } catch (const PolicyFileError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("policy files save and load") {
    fs::path file = fs::temp_directory_path() / "pda-policy-test.toml";
    AccessPolicy p = sample_policy();
    save_policy_file(file, p);
    AccessPolicy back = load_policy_file(file);
    CHECK(back == p);
    fs::remove(file);

    CHECK_THROWS_AS(load_policy_file(fs::temp_directory_path() / "pda-no-such-policy.toml"),
                    PolicyFileError);
}

TEST_CASE("r_squared_linear is 1 on exact lines and low on noise") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y = {3, 5, 7, 9, 11};  // exactly 2x+1
    CHECK(r_squared_linear(x, y) == doctest::Approx(1.0));

    std::vector<double> flat = {4, 4, 4, 4, 4};
    CHECK(r_squared_linear(x, flat) == doctest::Approx(1.0));  // zero variance: perfect fit

    std::vector<double> zigzag = {10, 0, 10, 0, 10};
    CHECK(r_squared_linear(x, zigzag) < 0.5);
}

TEST_CASE("bench config validation") {
    BenchConfig cfg;
    cfg.sizes = {10, 20};
    CHECK_NOTHROW(cfg.validate());
    BenchConfig one;
    one.sizes = {10};
    CHECK_THROWS_AS(one.validate(), std::invalid_argument);
    BenchConfig unsorted;
    unsorted.sizes = {20, 10};
    CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);
    BenchConfig no_modes;
    no_modes.sizes = {10, 20};
    no_modes.modes.clear();
    CHECK_THROWS_AS(no_modes.validate(), std::invalid_argument);
    BenchConfig bad_mode;
    bad_mode.sizes = {10, 20};
    bad_mode.modes = {"quantum"};
    CHECK_THROWS_AS(bad_mode.validate(), std::invalid_argument);
}

TEST_CASE("a small bench run produces rows and sane fits") {
    BenchConfig cfg;
    cfg.sizes = {20, 40, 80};
    cfg.trials = 1;
    cfg.seed = 5;
    cfg.enclave_overhead = ExecOverhead{20'000, 100};  // wide margin over scheduler noise
    BenchReport report = run_bench(cfg);

    REQUIRE(report.rows.size() == 9);  // 3 sizes x 3 modes
    REQUIRE(report.fits.size() == 3);
    for (const BenchRow& row : report.rows) {
        CHECK(row.runtime_ms >= 0.0);
        CHECK(row.trials == 1);
    }
    for (const BenchFit& fit : report.fits) CHECK(std::isfinite(fit.r_squared));

    // the emulated enclave can never beat the plain pipeline
    auto median_of = [&](const std::string& mode, std::uint64_t size) {
        for (const BenchRow& row : report.rows)
            if (row.mode == mode && row.record_count == size) return row.runtime_ms;
        FAIL("missing row");
        return 0.0;
    };
    for (std::uint64_t size : cfg.sizes)
        CHECK(median_of(kModeEnclave, size) >= median_of(kModeDecentralized, size));

    // serializers cover every row and fit
    std::string jsonl = bench_report_jsonl(report);
    CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 12);
    CHECK(jsonl.find(kBenchSchema) != std::string::npos);
    std::string csv = bench_series_csv(report);
    CHECK(csv.rfind("mode,record_count,runtime_ms", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);  // header + 9 rows
}
