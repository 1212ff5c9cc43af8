#include "doctest.h"
#include "properties.hpp"

#include <socialsparse/error.hpp>
#include <socialsparse/model_selection.hpp>
#include <socialsparse/synthetic.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

using namespace socialsparse;

namespace {

SyntheticData small_problem(std::uint64_t seed = 0, Task task = Task::classification)
{
    SyntheticSpec spec;
    spec.dims = {10, 8, 6};
    spec.mask = MaskShape::full;
    spec.n_samples = 64;
    spec.blob_radius = 1.5;
    spec.task = task;
    spec.seed = seed;
    return generate_synthetic(spec);
}

FitConfig quick_config()
{
    FitConfig cfg;
    cfg.n_folds = 4;
    cfg.screening_fraction = 0.5;
    return cfg;
}

} // namespace

TEST_CASE("default protocol constants")
{
    const FitConfig cfg;
    CHECK(cfg.n_folds == 8);
    CHECK(cfg.n_lambdas == 5);
    CHECK(cfg.lambda_min_ratio == 1.0 / 20.0);
    CHECK(cfg.screening_fraction == 0.20);
    CHECK(cfg.neighbor_weight == 0.7);
    CHECK(cfg.solver.tol == 1e-4);
    CHECK(cfg.penalty == PenaltyKind::social);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config validation")
{
    FitConfig cfg;
    cfg.n_folds = 1;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = {};
    cfg.lambda_min_ratio = 1.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = {};
    cfg.n_lambdas = 1;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = {};
    cfg.screening_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("lambda_max examples")
{
    Matrix X(2, 2);
    X << 1, 0, 0, 2;
    const Dataset d(X, Vector::Ones(2), oracle::line_grid(2), Task::regression);
    CHECK(lambda_max({LossKind::squared, false}, d) == 1.0);

    // y orthogonal to every column.
    Matrix Xo(2, 1);
    Xo << 1, 1;
    const Dataset orth(Xo, (Vector(2) << 1, -1).finished(), oracle::line_grid(1), Task::regression);
    CHECK_THROWS_AS(lambda_max({LossKind::squared, false}, orth), UsageError);

    const Dataset reg(X, (Vector(2) << 1, 2).finished(), oracle::line_grid(2), Task::regression);
    CHECK_THROWS_AS(lambda_max({LossKind::logistic, true}, reg), UsageError);
}

TEST_CASE("logistic lambda_max equals the balanced pseudo-response formula")
{
    Rng rng(31, Stream::noise);
    for (int c = 0; c < 50; ++c) {
        const Index n = 6 + static_cast<Index>(rng.below(30));
        const Index p = 1 + static_cast<Index>(rng.below(20));
        const auto inst = oracle::random_instance(rng, n, p, true);
        const Dataset d(inst.X, inst.y, oracle::line_grid(p), Task::classification);
        const double nn = static_cast<double>(n);
        const double np = static_cast<double>(d.n_positive()), nm = static_cast<double>(d.n_negative());
        Vector ytilde(n);
        for (Index i = 0; i < n; ++i) ytilde[i] = inst.y[i] > 0 ? nm / nn : -np / nn;
        CHECK(std::abs(ytilde.sum()) < 1e-12);
        const double want = (inst.X.transpose() * ytilde).lpNorm<Eigen::Infinity>() / nn;
        CHECK(lambda_max({LossKind::logistic, true}, d) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("lambda_max characterization")
{
    CHECK(props::lambda_max_characterization(50, 4) == "");
}

TEST_CASE("lambda grid")
{
    const auto grid = lambda_grid(2.0, 5, 1.0 / 20.0);
    REQUIRE(grid.size() == 5);
    CHECK(grid.front() == 2.0);
    CHECK(grid.back() == doctest::Approx(0.1).epsilon(1e-14));
    const double ratio = std::pow(1.0 / 20.0, 0.25);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        CHECK(grid[i + 1] < grid[i]);
        CHECK(grid[i + 1] / grid[i] == doctest::Approx(ratio).epsilon(1e-14));
        CHECK(grid[i] == doctest::Approx(2.0 * std::pow(1.0 / 20.0, static_cast<double>(i) / 4.0)).epsilon(1e-15));
    }
    CHECK_THROWS_AS(lambda_grid(0.0, 5, 0.05), UsageError);
}

TEST_CASE("screening scores match group-mean F statistics")
{
    Rng rng(32, Stream::noise);
    const auto inst = oracle::random_instance(rng, 30, 12, true);
    const Dataset d(inst.X, inst.y, oracle::line_grid(12), Task::classification);
    const Vector s = screening_scores(d);
    for (Index j = 0; j < 12; ++j) CHECK(s[j] == doctest::Approx(oracle::anova_f(inst.X.col(j), inst.y)).epsilon(1e-12));

    const auto reg = oracle::random_instance(rng, 30, 6, false);
    const Dataset r(reg.X, reg.y, oracle::line_grid(6), Task::regression);
    const Vector sr = screening_scores(r);
    for (Index j = 0; j < 6; ++j) {
        const Vector xc = reg.X.col(j).array() - reg.X.col(j).mean();
        const Vector yc = reg.y.array() - reg.y.mean();
        const double c = xc.dot(yc) / std::sqrt(xc.squaredNorm() * yc.squaredNorm());
        CHECK(sr[j] == doctest::Approx(c * c).epsilon(1e-12));
    }
}

TEST_CASE("screening keeps the planted voxel")
{
    Rng rng(33, Stream::noise);
    Matrix X(40, 10);
    Vector y(40);
    for (Index i = 0; i < 40; ++i) {
        y[i] = i % 2 ? 1.0 : -1.0;
        for (Index j = 0; j < 10; ++j) X(i, j) = rng.normal();
        X(i, 7) += 2.0 * y[i];
    }
    const Dataset d(X, y, oracle::line_grid(10), Task::classification);
    const ScreeningResult r = univariate_screening(d, 0.2);
    CHECK(r.kept.size() == 2);
    CHECK(std::find(r.kept.begin(), r.kept.end(), Index{7}) != r.kept.end());
    CHECK(std::is_sorted(r.kept.begin(), r.kept.end()));
    CHECK(r.reduced.n_features() == 2);

    const ScreeningResult all = univariate_screening(d, 1.0);
    CHECK(all.kept == std::vector<Index>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(all.reduced.X() == X);
}

TEST_CASE("screening ties go to the lower index")
{
    Matrix X(4, 5);
    X << 1, 1, 0, 1, 1, 2, 2, 0, 2, 2, -1, -1, 0, -1, -1, -2, -2, 0, -2, -2;
    const Dataset d(X, (Vector(4) << 1, 1, -1, -1).finished(), oracle::line_grid(5), Task::classification);
    CHECK(univariate_screening(d, 0.4).kept == std::vector<Index>{0, 1});
}

TEST_CASE("stratified folds")
{
    const auto sd = small_problem();
    const Dataset& d = sd.data;
    const auto folds = assign_folds(d, 8, 3);
    CHECK(folds == assign_folds(d, 8, 3));
    CHECK(folds != assign_folds(d, 8, 4));

    const double global = static_cast<double>(d.n_positive()) / static_cast<double>(d.n_samples());
    std::map<int, std::pair<int, int>> counts;
    for (std::size_t i = 0; i < folds.size(); ++i) (d.y()[static_cast<Index>(i)] > 0 ? counts[folds[i]].first : counts[folds[i]].second)++;
    CHECK(counts.size() == 8);
    for (const auto& [f, c] : counts) {
        const int size = c.first + c.second;
        CHECK(std::abs(c.first - global * size) <= 1.0);
        CHECK(c.first >= 1);
        CHECK(c.second >= 1);
    }

    Matrix X = Matrix::Random(16, 2);
    Vector y(16);
    for (Index i = 0; i < 16; ++i) y[i] = i < 8 ? 1.0 : -1.0;
    const Dataset sixteen(X, y, oracle::line_grid(2), Task::classification);
    std::vector<int> per_fold(8, 0);
    for (int f : assign_folds(sixteen, 8, 0)) per_fold[static_cast<std::size_t>(f)]++;
    CHECK(per_fold == std::vector<int>(8, 2));

    y[0] = -1;
    y[1] = -1;  // 6 positives < 8 folds
    CHECK_THROWS_AS(assign_folds(Dataset(X, y, oracle::line_grid(2), Task::classification), 8, 0), UsageError);
}

TEST_CASE("path starts at zero with the majority-class rate")
{
    const auto sd = small_problem(1);
    const auto folds = assign_folds(sd.data, 4, 0);
    std::vector<Index> tr, va;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == 0 ? va : tr).push_back(static_cast<Index>(i));
    const Dataset train = sd.data.rows(tr), val = sd.data.rows(va);
    FitConfig cfg = quick_config();
    cfg.penalty = PenaltyKind::l1;
    const PathResult path = fit_path(train, val, make_l1_operator(), cfg);

    REQUIRE(path.lambdas.size() == 5);
    CHECK(path.lambdas[0] == lambda_max(cfg.loss, train));
    CHECK(path.coefficients[0].isZero(0.0));
    const double b = zero_model_intercept(cfg.loss, train);
    const double majority = b >= 0 ? 1.0 : -1.0;
    double rate = 0.0;
    for (Index i = 0; i < val.n_samples(); ++i) rate += val.y()[i] == majority ? 1.0 : 0.0;
    CHECK(path.validation_scores[0] == doctest::Approx(rate / static_cast<double>(val.n_samples())));

    const auto best = path.best;
    for (std::size_t i = 0; i < path.validation_scores.size(); ++i) {
        CHECK(path.validation_scores[i] <= path.validation_scores[best]);
        if (i < best) CHECK(path.validation_scores[i] < path.validation_scores[best]);
    }
}

TEST_CASE("warm and cold starts agree")
{
    // More training samples than kept voxels. With p > n and near-separable
    // classes the social iteration can fail to settle at the smallest lambda,
    // and then neither start converges.
    SyntheticSpec spec;
    spec.dims = {10, 8, 6};
    spec.mask = MaskShape::full;
    spec.n_samples = 160;
    spec.blob_radius = 1.5;
    spec.seed = 2;
    const auto sd = generate_synthetic(spec);
    const auto folds = assign_folds(sd.data, 4, 0);
    std::vector<Index> tr, va;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == 0 ? va : tr).push_back(static_cast<Index>(i));
    const ScreeningResult s = univariate_screening(sd.data.rows(tr), 0.1);
    REQUIRE(s.reduced.n_features() < s.reduced.n_samples());
    const Dataset val = sd.data.rows(va).columns(s.kept);

    for (PenaltyKind kind : {PenaltyKind::l1, PenaltyKind::group, PenaltyKind::social}) {
        CAPTURE(penalty_name(kind));
        FitConfig cfg = quick_config();
        cfg.early_stopping = false;
        cfg.solver.tol = 1e-8;
        cfg.solver.max_iter = 200000;
        const auto shrink = make_shrinkage(kind, *s.reduced.grid());
        const PathResult warm = fit_path(s.reduced, val, shrink, cfg);
        const double L = lipschitz_constant(cfg.loss, s.reduced);
        for (std::size_t i = 0; i < warm.lambdas.size(); ++i) {
            CAPTURE(i);
            const FistaResult cold = fista(cfg.loss, s.reduced, shrink, warm.lambdas[i], Vector::Zero(s.reduced.n_features()),
                                           zero_model_intercept(cfg.loss, s.reduced), cfg.solver, L);
            CHECK(cold.reason == StopReason::converged);
            CHECK(warm.stop_reasons[i] == StopReason::converged);
            CHECK((cold.model.w - warm.coefficients[i]).lpNorm<Eigen::Infinity>() < 1e-4);
        }
    }
}

TEST_CASE("screening never sees the validation fold")
{
    const auto sd = small_problem(3);
    FitConfig cfg = quick_config();
    const auto folds = assign_folds(sd.data, cfg.n_folds, 0);
    const CvResult a = fit_cv(sd.data, cfg, folds);

    // Shuffle the labels inside fold 0 (class counts per fold are preserved).
    Vector y = sd.data.y();
    std::vector<Index> in0;
    for (std::size_t i = 0; i < folds.size(); ++i)
        if (folds[i] == 0) in0.push_back(static_cast<Index>(i));
    std::vector<double> vals;
    for (Index i : in0) vals.push_back(y[i]);
    std::rotate(vals.begin(), vals.begin() + 1, vals.end());
    for (std::size_t k = 0; k < in0.size(); ++k) y[in0[k]] = vals[k];
    REQUIRE(y != sd.data.y());
    const Dataset permuted(sd.data.X(), y, sd.data.grid(), Task::classification);
    const CvResult b = fit_cv(permuted, cfg, folds);
    CHECK(a.folds[0].kept == b.folds[0].kept);
    CHECK(a.folds[0].path.lambdas == b.folds[0].path.lambdas);
}

TEST_CASE("final model averages the folds")
{
    const auto sd = small_problem(4);
    FitConfig cfg = quick_config();
    const CvResult cv = fit_cv(sd.data, cfg);
    REQUIRE(cv.folds.size() == 4);
    Vector mean = Vector::Zero(sd.data.n_features());
    double b = 0.0, lam = 0.0, score = 0.0;
    for (const auto& f : cv.folds) {
        mean += f.w;
        b += f.intercept;
        lam += f.chosen_lambda;
        score += f.validation_score;
        CHECK(f.chosen_lambda == f.path.lambdas[f.path.best]);
        CHECK(std::is_sorted(f.kept.begin(), f.kept.end()));
        for (Index j = 0; j < f.w.size(); ++j) {
            if (!std::binary_search(f.kept.begin(), f.kept.end(), j)) CHECK(f.w[j] == 0.0);
        }
    }
    CHECK((cv.model.w - mean / 4.0).lpNorm<Eigen::Infinity>() < 1e-15);
    CHECK(cv.model.intercept == doctest::Approx(b / 4.0));
    CHECK(cv.mean_chosen_lambda == doctest::Approx(lam / 4.0));
    CHECK(cv.mean_validation_score == doctest::Approx(score / 4.0));

    // Union support, up to exact cancellation across folds.
    for (Index j = 0; j < mean.size(); ++j) {
        bool any = false;
        for (const auto& f : cv.folds) any = any || f.w[j] != 0.0;
        if (!any) CHECK(cv.model.w[j] == 0.0);
    }
}

TEST_CASE("identical folds average to the common vector")
{
    // Duplicate the sample set so every fold sees the same training data:
    // with fraction 1 screening each fold solves the same problem only when
    // folds coincide, which a 2-fold split of two identical halves gives.
    const auto sd = small_problem(5);
    const Index n = sd.data.n_samples();
    Matrix X(2 * n, sd.data.n_features());
    X << sd.data.X(), sd.data.X();
    Vector y(2 * n);
    y << sd.data.y(), sd.data.y();
    const Dataset doubled(X, y, sd.data.grid(), Task::classification);
    std::vector<int> folds(static_cast<std::size_t>(2 * n));
    for (Index i = 0; i < 2 * n; ++i) folds[static_cast<std::size_t>(i)] = i < n ? 0 : 1;
    FitConfig cfg = quick_config();
    cfg.n_folds = 2;
    const CvResult cv = fit_cv(doubled, cfg, folds);
    CHECK(cv.folds[0].w == cv.folds[1].w);
    CHECK(cv.model.w == cv.folds[0].w);
}

TEST_CASE("thread count does not change the result")
{
    const auto sd = small_problem(6);
    FitConfig cfg = quick_config();
    cfg.threads = 1;
    const CvResult one = fit_cv(sd.data, cfg);
    cfg.threads = 3;
    const CvResult three = fit_cv(sd.data, cfg);
    CHECK(one.model.w == three.model.w);
    CHECK(one.model.intercept == three.model.intercept);
    CHECK(one.mean_validation_score == three.mean_validation_score);
}

TEST_CASE("regression pipeline")
{
    const auto sd = small_problem(7, Task::regression);
    FitConfig cfg = quick_config();
    cfg.loss.kind = LossKind::squared;
    const CvResult cv = fit_cv(sd.data, cfg);
    CHECK(cv.model.w.allFinite());
    CHECK(cv.mean_validation_score <= 1.0);
}

TEST_CASE("non-finite data is rejected before fitting")
{
    const auto sd = small_problem(8);
    Matrix X = sd.data.X();
    X(5, 17) = std::numeric_limits<double>::quiet_NaN();
    const Dataset bad(X, sd.data.y(), sd.data.grid(), Task::classification);
    try {
        fit_cv(bad, quick_config());
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("sample 5, voxel 17") != std::string::npos);
    }
}
