#include "doctest.h"
#include "properties.hpp"

#include <socialsparse/error.hpp>
#include <socialsparse/losses.hpp>

#include <cmath>
#include <limits>

using namespace socialsparse;

namespace {

Dataset regression(const Matrix& X, const Vector& y)
{
    return Dataset(X, y, oracle::line_grid(X.cols()), Task::regression);
}

Dataset classification(const Matrix& X, const Vector& y)
{
    return Dataset(X, y, oracle::line_grid(X.cols()), Task::classification);
}

} // namespace

TEST_CASE("loss value examples")
{
    const LossSpec sq{LossKind::squared, true};
    const LossSpec lg{LossKind::logistic, true};

    Matrix X(3, 2);
    X << 1, 2, -1, 0.5, 3, -2;
    const Vector w = (Vector(2) << 0.3, -0.7).finished();
    const Vector y_exact = X * w + Vector::Constant(3, 1.25);
    CHECK(loss_value(sq, regression(X, y_exact), w, 1.25) < 1e-30);

    const Vector balanced = (Vector(4) << 1, -1, 1, -1).finished();
    CHECK(loss_value(lg, classification(Matrix::Random(4, 3), balanced), Vector::Zero(3), 0.0) == doctest::Approx(std::log(2.0)));

    const Matrix X1 = (Matrix(2, 1) << 1, 0).finished();
    CHECK(loss_value(sq, regression(X1, (Vector(2) << 2, 0).finished()), Vector::Ones(1), 0.0) == doctest::Approx(0.25));
}

TEST_CASE("intercept ignored without fit_intercept")
{
    const Matrix X1 = (Matrix(2, 1) << 1, 0).finished();
    const Dataset d = regression(X1, (Vector(2) << 2, 0).finished());
    CHECK(loss_value({LossKind::squared, false}, d, Vector::Ones(1), 10.0) == doctest::Approx(0.25));
    CHECK(loss_gradient({LossKind::squared, false}, d, Vector::Ones(1), 10.0).intercept == 0.0);
}

TEST_CASE("logistic loss is stable for large margins")
{
    const Matrix X = (Matrix(2, 1) << 1000, -1000).finished();
    const Dataset d = classification(X, (Vector(2) << 1, -1).finished());
    const LossSpec lg{LossKind::logistic, true};
    CHECK(loss_value(lg, d, Vector::Ones(1), 0.0) == doctest::Approx(0.0).scale(1e-300));
    CHECK(loss_value(lg, d, -Vector::Ones(1), 0.0) == doctest::Approx(1000.0));
    CHECK(std::isfinite(loss_gradient(lg, d, -Vector::Ones(1) * 1e6, 0.0).w[0]));
}

TEST_CASE("non-finite weights are a numeric error")
{
    const Dataset d = regression(Matrix::Ones(2, 1), Vector::Ones(2));
    const Vector bad = Vector::Constant(1, std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(loss_value({LossKind::squared, true}, d, bad, 0.0), NumericError);
    CHECK_THROWS_AS(loss_value({LossKind::squared, true}, d, Vector::Zero(1), INFINITY), NumericError);
}

TEST_CASE("gradient examples")
{
    Rng rng(3, Stream::noise);
    const auto inst = oracle::random_instance(rng, 12, 5, true);
    const Dataset d = classification(inst.X, inst.y);
    const LossGradient g = loss_gradient({LossKind::logistic, true}, d, Vector::Zero(5), 0.0);
    const Vector expected = -inst.X.transpose() * inst.y / (2.0 * 12.0);
    CHECK((g.w - expected).lpNorm<Eigen::Infinity>() < 1e-15);

    Matrix X(3, 2);
    X << 1, 2, -1, 0.5, 3, -2;
    const Vector w = (Vector(2) << 0.3, -0.7).finished();
    const LossGradient zero = loss_gradient({LossKind::squared, true}, regression(X, X * w), w, 0.0);
    CHECK(zero.w.isZero(1e-15));
    CHECK(zero.intercept == doctest::Approx(0.0).scale(1e-15));
}

TEST_CASE("gradients match finite differences")
{
    double worst = 0.0;
    CHECK(props::gradient_check(100, 2, 1e-5, &worst) == "");
    MESSAGE("worst relative error " << worst);
}

TEST_CASE("lipschitz examples")
{
    const Dataset d = classification(Matrix::Identity(2, 2), (Vector(2) << 1, -1).finished());
    CHECK(lipschitz_constant({LossKind::squared, false}, d) == doctest::Approx(1.01 * 0.5).epsilon(1e-12));
    CHECK(lipschitz_constant({LossKind::logistic, false}, d) == doctest::Approx(1.01 / 8.0).epsilon(1e-12));
    CHECK(lipschitz_constant({LossKind::squared, true}, classification(Matrix::Zero(2, 3), (Vector(2) << 1, -1).finished()))
          == doctest::Approx(1.01 * 2.0 / 2.0));
    CHECK(lipschitz_constant({LossKind::squared, false}, regression(Matrix::Zero(4, 3), Vector::Ones(4))) == 1e-12);
}

TEST_CASE("lipschitz bound against dense eigenvalues")
{
    Rng rng(4, Stream::noise);
    for (int c = 0; c < 100; ++c) {
        const Index n = 2 + static_cast<Index>(rng.below(40));
        const Index p = 1 + static_cast<Index>(rng.below(30));
        const bool intercept = c % 2 == 0;
        const bool logistic = c % 3 == 0;
        const auto inst = oracle::random_instance(rng, n, p, logistic);
        const Dataset d(inst.X, inst.y, oracle::line_grid(p), logistic ? Task::classification : Task::regression);
        Matrix A = inst.X;
        if (intercept) {
            A.conservativeResize(n, p + 1);
            A.col(p).setOnes();
        }
        const double exact = oracle::top_eigenvalue_of_gram(A) / static_cast<double>(n) / (logistic ? 4.0 : 1.0);
        const double est = lipschitz_constant({logistic ? LossKind::logistic : LossKind::squared, intercept}, d);
        CHECK(est >= exact);
        CHECK(est <= 1.05 * exact);
    }
}

TEST_CASE("descent lemma holds at the estimated constant")
{
    Rng rng(6, Stream::noise);
    for (int c = 0; c < 200; ++c) {
        const bool logistic = c % 2 == 1;
        const Index n = 3 + static_cast<Index>(rng.below(30));
        const Index p = 1 + static_cast<Index>(rng.below(20));
        const auto inst = oracle::random_instance(rng, n, p, logistic);
        const Dataset d(inst.X, inst.y, oracle::line_grid(p), logistic ? Task::classification : Task::regression);
        const LossSpec spec{logistic ? LossKind::logistic : LossKind::squared, true};
        const double L = lipschitz_constant(spec, d);
        const Vector w = props::random_vector(rng, p, 0.0);
        const double b = rng.normal();
        const LossGradient g = loss_gradient(spec, d, w, b);
        const double before = loss_value(spec, d, w, b);
        const double after = loss_value(spec, d, w - g.w / L, b - g.intercept / L);
        const double gnorm2 = g.w.squaredNorm() + g.intercept * g.intercept;
        CHECK(after <= before - gnorm2 / (2.0 * L) + 1e-12 * (1.0 + before));
    }
}

TEST_CASE("zero-model intercept")
{
    const Matrix X = Matrix::Ones(5, 1);
    const Vector y = (Vector(5) << 1, 1, 1, -1, -1).finished();
    CHECK(zero_model_intercept({LossKind::logistic, true}, classification(X, y)) == doctest::Approx(std::log(1.5)));
    CHECK(zero_model_intercept({LossKind::squared, true}, regression(X, (Vector(5) << 1, 2, 3, 4, 5).finished())) == doctest::Approx(3.0));
    CHECK(zero_model_intercept({LossKind::logistic, false}, classification(X, y)) == 0.0);

    // It minimizes the loss over b when w = 0.
    const LossSpec lg{LossKind::logistic, true};
    const Dataset d = classification(X, y);
    const double b = zero_model_intercept(lg, d);
    CHECK(std::abs(loss_gradient(lg, d, Vector::Zero(1), b).intercept) < 1e-15);
}
