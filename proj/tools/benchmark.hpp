#pragma once
#include <socialsparse/model_selection.hpp>

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace socialsparse::cli {

struct BenchmarkRow {
    PenaltyKind estimator = PenaltyKind::social;
    int repeat = 0;
    double accuracy = 0.0;
    double wall_time_seconds = 0.0;
    Index n_nonzero = 0;
    double chosen_lambda = 0.0;
};

struct BenchmarkOptions {
    int repeats = 10;
    double test_fraction = 0.2;
    std::vector<PenaltyKind> estimators{PenaltyKind::social, PenaltyKind::l1, PenaltyKind::group};
    FitConfig fit{};
};

/// Train/test split with `test_fraction` of each class held out (at least one
/// sample per class on each side for classification).
struct Split {
    std::vector<Index> train;
    std::vector<Index> test;
};

Split stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed, int repeat);

/// Outer evaluation loop: for every repeat, one seeded split, then a full
/// cross-validated fit per estimator on the training part, scored on the
/// held-out part. Wall time covers the whole fit, parameter selection included.
std::vector<BenchmarkRow> run_benchmark(const Dataset& data, const BenchmarkOptions& options);

// Deterministic columns: estimator,repeat,accuracy,n_nonzero,chosen_lambda
void write_report_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);
// estimator,repeat,wall_time_seconds
void write_timing_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);
// {estimator: {accuracy: {mean, std}, wall_time_seconds: {mean, std}, n_nonzero: {mean, std}}}
nlohmann::json benchmark_summary(const std::vector<BenchmarkRow>& rows);

// Shortest round-trip decimal form.
std::string format_double(double value);

} // namespace socialsparse::cli
