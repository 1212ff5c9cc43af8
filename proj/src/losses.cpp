#include <socialsparse/losses.hpp>

#include <socialsparse/error.hpp>
#include <socialsparse/random.hpp>

#include <cmath>
#include <string>

namespace socialsparse {

namespace {

constexpr double lipschitz_safety = 1.01;
constexpr double lipschitz_floor = 1e-12;

// log(1 + exp(z)) without overflow.
double log1p_exp(double z)
{
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// 1 / (1 + exp(-z))
double sigmoid(double z)
{
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_inputs(const Dataset& data, const Vector& w, double intercept)
{
    if (w.size() != data.n_features()) {
        throw UsageError("weight vector has length " + std::to_string(w.size()) + ", expected "
                         + std::to_string(data.n_features()));
    }
    if (!w.allFinite() || !std::isfinite(intercept)) throw NumericError("non-finite weights passed to loss");
}

Vector scores_of(const LossSpec& spec, const Dataset& data, const Vector& w, double intercept)
{
    Vector z = data.X() * w;
    if (spec.fit_intercept) z.array() += intercept;
    return z;
}

} // namespace

double mean_loss_from_scores(LossKind kind, const Vector& y, const Vector& scores)
{
    const auto n = static_cast<double>(y.size());
    if (kind == LossKind::squared) return 0.5 * (y - scores).squaredNorm() / n;
    double total = 0.0;
    for (Index i = 0; i < y.size(); ++i) total += log1p_exp(-y[i] * scores[i]);
    return total / n;
}

Vector score_derivative(LossKind kind, const Vector& y, const Vector& scores)
{
    const auto n = static_cast<double>(y.size());
    if (kind == LossKind::squared) return (scores - y) / n;
    Vector d(y.size());
    for (Index i = 0; i < y.size(); ++i) d[i] = -y[i] * sigmoid(-y[i] * scores[i]) / n;
    return d;
}

double loss_value(const LossSpec& spec, const Dataset& data, const Vector& w, double intercept)
{
    check_inputs(data, w, intercept);
    return mean_loss_from_scores(spec.kind, data.y(), scores_of(spec, data, w, intercept));
}

LossGradient loss_gradient(const LossSpec& spec, const Dataset& data, const Vector& w, double intercept)
{
    check_inputs(data, w, intercept);
    const Vector d = score_derivative(spec.kind, data.y(), scores_of(spec, data, w, intercept));
    LossGradient g;
    g.w = data.X().transpose() * d;
    g.intercept = spec.fit_intercept ? d.sum() : 0.0;
    return g;
}

double lipschitz_constant(const LossSpec& spec, const Dataset& data, int iters, std::uint64_t seed)
{
    if (iters < 1) throw UsageError("power iteration needs at least one iteration");
    const auto& X = data.X();
    const Index p = X.cols();
    const bool augmented = spec.fit_intercept;

    // Power iteration on A^T A with A = X or [X 1]; v holds (w-part, intercept-part).
    Rng rng(seed, Stream::power_iteration);
    Vector v(p);
    for (Index j = 0; j < p; ++j) v[j] = rng.normal();
    double c = augmented ? rng.normal() : 0.0;

    double sigma_sq = 0.0;
    for (int it = 0; it < iters; ++it) {
        const double norm = std::sqrt(v.squaredNorm() + c * c);
        if (norm == 0.0) break;
        v /= norm;
        c /= norm;
        Vector u = X * v;
        if (augmented) u.array() += c;
        // Rayleigh quotient of the unit vector: ||A v||^2.
        sigma_sq = u.squaredNorm();
        v = X.transpose() * u;
        c = augmented ? u.sum() : 0.0;
    }

    const double n = static_cast<double>(X.rows());
    double lipschitz = sigma_sq / n;
    if (spec.kind == LossKind::logistic) lipschitz /= 4.0;
    lipschitz *= lipschitz_safety;
    if (!std::isfinite(lipschitz)) throw NumericError("Lipschitz constant is not finite");
    return std::max(lipschitz, lipschitz_floor);
}

double zero_model_intercept(const LossSpec& spec, const Dataset& data)
{
    if (!spec.fit_intercept) return 0.0;
    if (spec.kind == LossKind::squared) return data.y().mean();
    const auto pos = static_cast<double>(data.n_positive());
    const auto neg = static_cast<double>(data.n_negative());
    if (pos == 0 || neg == 0) throw UsageError("logistic loss needs both classes");
    return std::log(pos / neg);
}

} // namespace socialsparse
