#include <socialsparse/model_selection.hpp>

#include <socialsparse/error.hpp>
#include <socialsparse/random.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

namespace socialsparse {

void FitConfig::validate() const
{
    if (n_folds < 2) throw UsageError("need at least 2 folds");
    if (n_lambdas < 2) throw UsageError("need at least 2 lambdas");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) throw UsageError("lambda_min_ratio must be in (0, 1)");
    if (!(screening_fraction > 0.0 && screening_fraction <= 1.0)) throw UsageError("screening fraction must be in (0, 1]");
    if (!(neighbor_weight >= 0.0)) throw UsageError("neighbor weight must be non-negative");
    if (check_every < 1 || patience < 1) throw UsageError("early stopping needs check_every >= 1 and patience >= 1");
    if (power_iterations < 1) throw UsageError("power_iterations must be at least 1");
    if (threads < 1) throw UsageError("threads must be at least 1");
    solver.validate();
}

double lambda_max(const LossSpec& loss, const Dataset& data)
{
    if (loss.kind == LossKind::logistic && data.task() != Task::classification) {
        throw UsageError("logistic loss needs two-class targets");
    }
    const double b = zero_model_intercept(loss, data);
    const Vector zero = Vector::Zero(data.n_features());
    const double value = loss_gradient(loss, data, zero, b).w.lpNorm<Eigen::Infinity>();
    if (!(value > 0.0)) throw UsageError("lambda_max is zero: targets are uncorrelated with every feature");
    return value;
}

std::vector<double> lambda_grid(double lambda_max, int count, double min_ratio)
{
    if (!(lambda_max > 0.0)) throw UsageError("lambda_max must be positive");
    if (count < 2) throw UsageError("need at least 2 lambdas");
    if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw UsageError("lambda_min_ratio must be in (0, 1)");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] = lambda_max * std::pow(min_ratio, static_cast<double>(i) / (count - 1));
    }
    return grid;
}

Vector screening_scores(const Dataset& data)
{
    const auto& X = data.X();
    const auto& y = data.y();
    const auto n = static_cast<double>(X.rows());
    Vector scores(X.cols());

    if (data.task() == Task::classification) {
        const auto pos = static_cast<double>(data.n_positive());
        const auto neg = static_cast<double>(data.n_negative());
        for (Index j = 0; j < X.cols(); ++j) {
            double sum_pos = 0.0, sum_neg = 0.0;
            for (Index i = 0; i < X.rows(); ++i) (y[i] > 0 ? sum_pos : sum_neg) += X(i, j);
            const double mean_pos = sum_pos / pos;
            const double mean_neg = sum_neg / neg;
            const double mean = (sum_pos + sum_neg) / n;
            double within = 0.0;
            for (Index i = 0; i < X.rows(); ++i) {
                const double r = X(i, j) - (y[i] > 0 ? mean_pos : mean_neg);
                within += r * r;
            }
            const double between = pos * (mean_pos - mean) * (mean_pos - mean) + neg * (mean_neg - mean) * (mean_neg - mean);
            // Two groups: between has 1 degree of freedom, within has n - 2.
            if (within <= 0.0) {
                scores[j] = between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
            } else {
                scores[j] = between / (within / std::max(n - 2.0, 1.0));
            }
        }
        return scores;
    }

    const Vector yc = y.array() - y.mean();
    const double syy = yc.squaredNorm();
    for (Index j = 0; j < X.cols(); ++j) {
        const Vector xc = X.col(j).array() - X.col(j).mean();
        const double sxx = xc.squaredNorm();
        if (sxx <= 0.0 || syy <= 0.0) {
            scores[j] = 0.0;
            continue;
        }
        const double sxy = xc.dot(yc);
        scores[j] = sxy * sxy / (sxx * syy);
    }
    return scores;
}

ScreeningResult univariate_screening(const Dataset& data, double fraction)
{
    if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("screening fraction must be in (0, 1]");
    const Index p = data.n_features();
    // The relative nudge keeps products like 0.2 * 10 from rounding up past an integer.
    const auto keep = std::clamp<Index>(static_cast<Index>(std::ceil(fraction * static_cast<double>(p) * (1.0 - 1e-12))), 1, p);

    std::vector<Index> kept(static_cast<std::size_t>(p));
    std::iota(kept.begin(), kept.end(), Index{0});
    if (keep < p) {
        const Vector scores = screening_scores(data);
        std::stable_sort(kept.begin(), kept.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
        kept.resize(static_cast<std::size_t>(keep));
        std::sort(kept.begin(), kept.end());
    }
    return ScreeningResult{data.columns(kept), std::move(kept)};
}

std::vector<int> assign_folds(const Dataset& data, int n_folds, std::uint64_t seed)
{
    const Index n = data.n_samples();
    if (n_folds < 2) throw UsageError("need at least 2 folds");
    if (n < n_folds) {
        throw UsageError("cannot split " + std::to_string(n) + " samples into " + std::to_string(n_folds) + " folds");
    }

    Rng rng(seed, Stream::folds);
    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(n));
    if (data.task() == Task::classification) {
        if (std::min(data.n_positive(), data.n_negative()) < n_folds) {
            throw UsageError("each class needs at least " + std::to_string(n_folds)
                             + " samples so that every fold sees both classes");
        }
        std::vector<Index> pos, neg;
        for (Index i = 0; i < n; ++i) (data.y()[i] > 0 ? pos : neg).push_back(i);
        rng.shuffle(std::span<Index>(pos));
        rng.shuffle(std::span<Index>(neg));
        order.insert(order.end(), pos.begin(), pos.end());
        order.insert(order.end(), neg.begin(), neg.end());
    } else {
        order.resize(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index{0});
        rng.shuffle(std::span<Index>(order));
    }

    std::vector<int> folds(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < order.size(); ++k) folds[static_cast<std::size_t>(order[k])] = static_cast<int>(k % static_cast<std::size_t>(n_folds));
    return folds;
}

namespace {

void require_finite(const Dataset& data, const char* what)
{
    const Matrix& X = data.X();
    for (Index j = 0; j < X.cols(); ++j) {
        for (Index i = 0; i < X.rows(); ++i) {
            if (!std::isfinite(X(i, j))) {
                throw NumericError(std::string(what) + " has a non-finite value at sample " + std::to_string(i) + ", voxel "
                                   + std::to_string(j));
            }
        }
    }
    if (!data.y().allFinite()) throw NumericError(std::string(what) + " has non-finite targets");
}

} // namespace

PathResult fit_path(const Dataset& train, const Dataset& validation, const ShrinkageOperator& shrink,
                    const FitConfig& cfg)
{
    cfg.validate();
    require_finite(train, "training data");
    require_finite(validation, "validation data");
    if (validation.n_features() != train.n_features()) {
        throw UsageError("validation data has a different number of features");
    }

    PathResult path;
    path.lambdas = lambda_grid(lambda_max(cfg.loss, train), cfg.n_lambdas, cfg.lambda_min_ratio);

    SolverConfig solver = cfg.solver;
    if (cfg.early_stopping) {
        solver.early_stop = EarlyStopping{std::make_shared<const Dataset>(validation), cfg.check_every, cfg.patience};
    }
    const double lipschitz = lipschitz_constant(cfg.loss, train, cfg.power_iterations, cfg.seed);

    Vector w = Vector::Zero(train.n_features());
    double b = zero_model_intercept(cfg.loss, train);
    for (double lambda : path.lambdas) {
        FistaResult fit;
        try {
            fit = fista(cfg.loss, train, shrink, lambda, w, b, solver, lipschitz);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (lambda = " + std::to_string(lambda) + ")");
        }
        w = fit.model.w;
        b = fit.model.intercept;
        const Prediction pred = predict(fit.model, validation.X());
        path.validation_scores.push_back(prediction_score(validation.task(), validation.y(), pred.scores));
        path.coefficients.push_back(w);
        path.intercepts.push_back(b);
        path.iterations.push_back(fit.iterations);
        path.stop_reasons.push_back(fit.reason);
    }

    // Strict comparison keeps the earliest, i.e. largest, lambda on ties.
    for (std::size_t i = 1; i < path.validation_scores.size(); ++i) {
        if (path.validation_scores[i] > path.validation_scores[path.best]) path.best = i;
    }
    return path;
}

namespace {

FoldResult fit_fold(const Dataset& data, const FitConfig& cfg, const std::vector<int>& folds, int fold)
{
    std::vector<Index> train_rows, val_rows;
    for (std::size_t i = 0; i < folds.size(); ++i) {
        (folds[i] == fold ? val_rows : train_rows).push_back(static_cast<Index>(i));
    }
    if (val_rows.empty()) throw UsageError("fold " + std::to_string(fold) + " is empty");

    const Dataset train = data.rows(train_rows);
    ScreeningResult screened = univariate_screening(train, cfg.screening_fraction);
    const Dataset validation = data.rows(val_rows).columns(screened.kept);
    const ShrinkageOperator shrink = make_shrinkage(cfg.penalty, *screened.reduced.grid(), cfg.neighbor_weight);

    FoldResult out;
    out.path = fit_path(screened.reduced, validation, shrink, cfg);
    out.kept = std::move(screened.kept);
    const auto best = out.path.best;
    out.chosen_lambda = out.path.lambdas[best];
    out.validation_score = out.path.validation_scores[best];
    out.intercept = out.path.intercepts[best];
    out.w = Vector::Zero(data.n_features());
    const Vector& coef = out.path.coefficients[best];
    for (std::size_t j = 0; j < out.kept.size(); ++j) out.w[out.kept[j]] = coef[static_cast<Index>(j)];
    return out;
}

} // namespace

CvResult fit_cv(const Dataset& data, const FitConfig& cfg)
{
    cfg.validate();
    return fit_cv(data, cfg, assign_folds(data, cfg.n_folds, cfg.seed));
}

CvResult fit_cv(const Dataset& data, const FitConfig& cfg, const std::vector<int>& folds)
{
    cfg.validate();
    if (static_cast<Index>(folds.size()) != data.n_samples()) throw UsageError("one fold id per sample required");
    require_finite(data, "design matrix");
    for (int f : folds) {
        if (f < 0 || f >= cfg.n_folds) throw UsageError("fold id out of range");
    }

    const auto n_folds = static_cast<std::size_t>(cfg.n_folds);
    std::vector<FoldResult> results(n_folds);
    std::vector<std::exception_ptr> errors(n_folds);

    auto run = [&](std::size_t f) {
        try {
            results[f] = fit_fold(data, cfg, folds, static_cast<int>(f));
        } catch (...) {
            errors[f] = std::current_exception();
        }
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), n_folds);
    if (workers <= 1) {
        for (std::size_t f = 0; f < n_folds; ++f) run(f);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (auto f = next++; f < n_folds; f = next++) run(f);
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    // Reduce in fold order so the arithmetic does not depend on scheduling.
    CvResult cv;
    cv.model.grid = data.grid();
    cv.model.w = Vector::Zero(data.n_features());
    for (const auto& fold : results) {
        cv.model.w += fold.w;
        cv.model.intercept += fold.intercept;
        cv.mean_validation_score += fold.validation_score;
        cv.mean_chosen_lambda += fold.chosen_lambda;
    }
    const auto k = static_cast<double>(n_folds);
    cv.model.w /= k;
    cv.model.intercept /= k;
    cv.mean_validation_score /= k;
    cv.mean_chosen_lambda /= k;
    cv.folds = std::move(results);
    return cv;
}

} // namespace socialsparse
