#pragma once
#include <socialsparse/grid.hpp>
#include <socialsparse/losses.hpp>
#include <socialsparse/shrinkage.hpp>

#include <memory>
#include <optional>
#include <vector>

namespace socialsparse {

struct EarlyStopping {
    std::shared_ptr<const Dataset> validation;
    int check_every = 10;
    int patience = 3;
};

struct SolverConfig {
    double tol = 1e-4;
    int max_iter = 10000;
    std::optional<EarlyStopping> early_stop;

    void validate() const;
};

enum class StopReason { converged, max_iter, early_stop };

const char* stop_reason_name(StopReason reason);

struct FistaResult {
    WeightMap model;
    StopReason reason = StopReason::max_iter;
    int iterations = 0;
    double lipschitz = 0.0;
    // Loss at each iterate w_(k), k = 1..iterations.
    std::vector<double> objective_trace;
    // Validation error at the last early-stopping check, if any.
    std::optional<double> validation_error;
};

/// Accelerated proximal gradient with a pluggable shrinkage step.
///
/// Each iteration takes w <- S(v - grad/L, lambda/L) and extrapolates
/// v <- w + ((t_k - 1)/t_{k+1}) (w - w_prev) with t_1 = 1 and
/// t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2. The intercept follows the same
/// gradient and momentum steps but is never shrunk.
///
/// Stops when max|delta| <= tol * max|iterate| over (w, b) (this includes the
/// all-zero fixed point), after max_iter iterations, or when the validation
/// error has not strictly improved for `patience` consecutive checks.
FistaResult fista(const LossSpec& loss, const Dataset& data, const ShrinkageOperator& shrink, double lambda,
                  const Vector& w0, double intercept0, const SolverConfig& cfg, double lipschitz);

/// Same, with the Lipschitz constant estimated by 100 power iterations.
FistaResult fista(const LossSpec& loss, const Dataset& data, const ShrinkageOperator& shrink, double lambda,
                  const Vector& w0, double intercept0 = 0.0, const SolverConfig& cfg = {});

// t_{k+1} from t_k.
double next_momentum(double t);

struct Prediction {
    Vector scores;
    Vector labels;  // sign of the score, with 0 sent to +1
};

Prediction predict(const WeightMap& model, const Matrix& X);

/// Misclassification rate for classification, mean squared error for regression.
double prediction_error(Task task, const Vector& y, const Vector& scores);

/// Accuracy for classification, R^2 for regression. Higher is better.
double prediction_score(Task task, const Vector& y, const Vector& scores);

} // namespace socialsparse
