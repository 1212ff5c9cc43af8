#include <socialsparse/solver.hpp>

#include <socialsparse/error.hpp>

#include <cassert>
#include <cmath>
#include <limits>
#include <string>

namespace socialsparse {

void SolverConfig::validate() const
{
    if (!(tol > 0.0)) throw UsageError("solver tolerance must be positive");
    if (max_iter < 1) throw UsageError("max_iter must be at least 1");
    if (early_stop) {
        if (!early_stop->validation) throw UsageError("early stopping needs validation data");
        if (early_stop->check_every < 1) throw UsageError("check_every must be at least 1");
        if (early_stop->patience < 1) throw UsageError("patience must be at least 1");
    }
}

const char* stop_reason_name(StopReason reason)
{
    switch (reason) {
    case StopReason::converged: return "converged";
    case StopReason::max_iter: return "max_iter";
    case StopReason::early_stop: return "early_stop";
    }
    return "unknown";
}

double next_momentum(double t)
{
    return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
}

FistaResult fista(const LossSpec& loss, const Dataset& data, const ShrinkageOperator& shrink, double lambda,
                  const Vector& w0, double intercept0, const SolverConfig& cfg, double lipschitz)
{
    cfg.validate();
    if (!(lambda >= 0.0)) throw UsageError("lambda must be non-negative");
    if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) throw NumericError("Lipschitz constant must be positive and finite");
    if (w0.size() != data.n_features()) throw UsageError("initial weights have the wrong length");
    if (cfg.early_stop && cfg.early_stop->validation->n_features() != data.n_features()) {
        throw UsageError("validation data has a different number of features");
    }

    const auto& X = data.X();
    const auto& y = data.y();
    const bool with_intercept = loss.fit_intercept;
    const double step = 1.0 / lipschitz;
    const double threshold = lambda * step;

    Vector w = w0;
    double b = with_intercept ? intercept0 : 0.0;
    Vector scores = X * w;
    scores.array() += b;

    Vector v = w;
    double bv = b;
    Vector v_scores = scores;
    double t = 1.0;

    FistaResult result;
    result.lipschitz = lipschitz;
    result.model.grid = data.grid();

    double best_error = std::numeric_limits<double>::infinity();
    int checks_without_improvement = 0;

    for (int k = 1; k <= cfg.max_iter; ++k) {
        const Vector d = score_derivative(loss.kind, y, v_scores);
        const Vector forward = v - step * (X.transpose() * d);
        Vector w_next = shrink(forward, threshold);
        const double b_next = with_intercept ? bv - step * d.sum() : 0.0;

        if (!w_next.allFinite() || !std::isfinite(b_next)) {
            throw NumericError("non-finite iterate at iteration " + std::to_string(k));
        }
#ifndef NDEBUG
        for (Index i = 0; i < w_next.size(); ++i) {
            assert(std::abs(w_next[i]) <= std::abs(forward[i]));
            assert(w_next[i] == 0.0 || (w_next[i] > 0) == (forward[i] > 0));
        }
#endif

        Vector scores_next = X * w_next;
        scores_next.array() += b_next;
        result.objective_trace.push_back(mean_loss_from_scores(loss.kind, y, scores_next));

        const double t_next = next_momentum(t);
        const double beta = (t - 1.0) / t_next;
        const double delta = std::max((w_next - w).lpNorm<Eigen::Infinity>(), std::abs(b_next - b));
        const double scale = std::max(w_next.size() ? w_next.lpNorm<Eigen::Infinity>() : 0.0, std::abs(b_next));

        v = w_next + beta * (w_next - w);
        bv = b_next + beta * (b_next - b);
        v_scores = scores_next + beta * (scores_next - scores);
        w = std::move(w_next);
        b = b_next;
        scores = std::move(scores_next);
        t = t_next;
        result.iterations = k;

        if (delta <= cfg.tol * scale) {
            result.reason = StopReason::converged;
            break;
        }
        if (cfg.early_stop && k % cfg.early_stop->check_every == 0) {
            const auto& val = *cfg.early_stop->validation;
            Vector val_scores = val.X() * w;
            val_scores.array() += b;
            const double err = prediction_error(val.task(), val.y(), val_scores);
            result.validation_error = err;
            if (err < best_error) {
                best_error = err;
                checks_without_improvement = 0;
            } else if (++checks_without_improvement >= cfg.early_stop->patience) {
                result.reason = StopReason::early_stop;
                break;
            }
        }
        if (k == cfg.max_iter) result.reason = StopReason::max_iter;
    }

    result.model.w = std::move(w);
    result.model.intercept = b;
    return result;
}

FistaResult fista(const LossSpec& loss, const Dataset& data, const ShrinkageOperator& shrink, double lambda,
                  const Vector& w0, double intercept0, const SolverConfig& cfg)
{
    return fista(loss, data, shrink, lambda, w0, intercept0, cfg, lipschitz_constant(loss, data));
}

Prediction predict(const WeightMap& model, const Matrix& X)
{
    if (X.cols() != model.w.size()) {
        throw UsageError("data has " + std::to_string(X.cols()) + " features, model has "
                         + std::to_string(model.w.size()));
    }
    Prediction out;
    out.scores = X * model.w;
    out.scores.array() += model.intercept;
    out.labels = out.scores.unaryExpr([](double s) { return s >= 0.0 ? 1.0 : -1.0; });
    return out;
}

double prediction_error(Task task, const Vector& y, const Vector& scores)
{
    if (task == Task::regression) return (y - scores).squaredNorm() / static_cast<double>(y.size());
    return 1.0 - prediction_score(task, y, scores);
}

double prediction_score(Task task, const Vector& y, const Vector& scores)
{
    const auto n = static_cast<double>(y.size());
    if (task == Task::classification) {
        Index correct = 0;
        for (Index i = 0; i < y.size(); ++i) correct += ((scores[i] >= 0.0 ? 1.0 : -1.0) == y[i]);
        return static_cast<double>(correct) / n;
    }
    const double ss_res = (y - scores).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).square().sum();
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

} // namespace socialsparse
