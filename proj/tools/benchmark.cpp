#include "benchmark.hpp"

#include <socialsparse/error.hpp>
#include <socialsparse/random.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace socialsparse::cli {

std::string format_double(double value)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

Split stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed, int repeat)
{
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw UsageError("test fraction must be in (0, 1)");
    Rng rng(seed, Stream::splits, static_cast<std::uint64_t>(repeat));

    std::vector<std::vector<Index>> strata;
    if (data.task() == Task::classification) {
        strata.resize(2);
        for (Index i = 0; i < data.n_samples(); ++i) strata[data.y()[i] > 0 ? 0 : 1].push_back(i);
    } else {
        strata.emplace_back(static_cast<std::size_t>(data.n_samples()));
        std::iota(strata[0].begin(), strata[0].end(), Index{0});
    }

    Split split;
    for (auto& s : strata) {
        if (s.size() < 2) throw UsageError("each class needs at least 2 samples to split");
        rng.shuffle(std::span<Index>(s));
        auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(s.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, s.size() - 1);
        split.test.insert(split.test.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), s.begin() + static_cast<std::ptrdiff_t>(n_test), s.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<BenchmarkRow> run_benchmark(const Dataset& data, const BenchmarkOptions& options)
{
    if (options.repeats < 1) throw UsageError("repeats must be at least 1");
    if (options.estimators.empty()) throw UsageError("no estimators selected");

    std::vector<BenchmarkRow> rows;
    for (int r = 0; r < options.repeats; ++r) {
        const Split split = stratified_split(data, options.test_fraction, options.fit.seed, r);
        const Dataset train = data.rows(split.train);
        const Dataset test = data.rows(split.test);
        for (auto estimator : options.estimators) {
            FitConfig cfg = options.fit;
            cfg.penalty = estimator;
            cfg.seed = mix64(options.fit.seed + static_cast<std::uint64_t>(r));

            const auto start = std::chrono::steady_clock::now();
            const CvResult cv = fit_cv(train, cfg);
            const auto stop = std::chrono::steady_clock::now();

            const Prediction pred = predict(cv.model, test.X());
            BenchmarkRow row;
            row.estimator = estimator;
            row.repeat = r;
            row.accuracy = prediction_score(test.task(), test.y(), pred.scores);
            row.wall_time_seconds = std::chrono::duration<double>(stop - start).count();
            row.n_nonzero = cv.model.n_nonzero();
            row.chosen_lambda = cv.mean_chosen_lambda;
            rows.push_back(row);
        }
    }
    return rows;
}

void write_report_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows)
{
    out << "estimator,repeat,accuracy,n_nonzero,chosen_lambda\n";
    for (const auto& r : rows) {
        out << penalty_name(r.estimator) << ',' << r.repeat << ',' << format_double(r.accuracy) << ','
            << r.n_nonzero << ',' << format_double(r.chosen_lambda) << '\n';
    }
}

void write_timing_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows)
{
    out << "estimator,repeat,wall_time_seconds\n";
    for (const auto& r : rows) {
        out << penalty_name(r.estimator) << ',' << r.repeat << ',' << format_double(r.wall_time_seconds) << '\n';
    }
}

nlohmann::json benchmark_summary(const std::vector<BenchmarkRow>& rows)
{
    std::map<std::string, std::vector<const BenchmarkRow*>> by_estimator;
    for (const auto& r : rows) by_estimator[std::string(penalty_name(r.estimator))].push_back(&r);

    auto stats = [](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double sq = 0.0;
        for (double x : v) sq += (x - mean) * (x - mean);
        return nlohmann::json{{"mean", mean}, {"std", std::sqrt(sq / static_cast<double>(v.size()))}};
    };

    nlohmann::json summary = nlohmann::json::object();
    for (const auto& [name, group] : by_estimator) {
        std::vector<double> acc, time, nnz;
        for (const auto* r : group) {
            acc.push_back(r->accuracy);
            time.push_back(r->wall_time_seconds);
            nnz.push_back(static_cast<double>(r->n_nonzero));
        }
        summary[name] = {{"accuracy", stats(acc)}, {"wall_time_seconds", stats(time)}, {"n_nonzero", stats(nnz)}};
    }
    return summary;
}

} // namespace socialsparse::cli
