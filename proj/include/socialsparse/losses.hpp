#pragma once
#include <socialsparse/grid.hpp>

#include <cstdint>

namespace socialsparse {

enum class LossKind { logistic, squared };

struct LossSpec {
    LossKind kind = LossKind::logistic;
    bool fit_intercept = true;
};

struct LossGradient {
    Vector w;
    double intercept = 0.0;
};

/// Mean loss over samples.
///   squared:  (1/2n) sum (y_i - x_i.w - b)^2
///   logistic: (1/n)  sum log(1 + exp(-y_i (x_i.w + b)))
/// The intercept is ignored when spec.fit_intercept is false.
double loss_value(const LossSpec& spec, const Dataset& data, const Vector& w, double intercept = 0.0);

LossGradient loss_gradient(const LossSpec& spec, const Dataset& data, const Vector& w, double intercept = 0.0);

/// Upper bound on the Lipschitz constant of the gradient in (w, b).
///
/// Power iteration estimates sigma_max^2 of X (of [X 1] when an intercept is
/// fit); the bound is that value over n for the squared loss, over 4n for the
/// logistic loss, times a 1.01 safety factor. Never smaller than 1e-12.
double lipschitz_constant(const LossSpec& spec, const Dataset& data, int iters = 100, std::uint64_t seed = 0);

/// Intercept minimizing the loss when w = 0: mean(y) for the squared loss,
/// log(n+/n-) for the logistic loss, 0 without an intercept.
double zero_model_intercept(const LossSpec& spec, const Dataset& data);

// Score-space building blocks shared with the solver, which keeps X.w + b
// up to date incrementally. `scores` holds x_i.w + b for every sample.
double mean_loss_from_scores(LossKind kind, const Vector& y, const Vector& scores);

/// Per-sample derivative of the mean loss w.r.t. each score; the gradient is
/// X^T d for w and sum(d) for the intercept.
Vector score_derivative(LossKind kind, const Vector& y, const Vector& scores);

} // namespace socialsparse
