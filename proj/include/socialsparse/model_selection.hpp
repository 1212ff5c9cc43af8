#pragma once
#include <socialsparse/grid.hpp>
#include <socialsparse/losses.hpp>
#include <socialsparse/shrinkage.hpp>
#include <socialsparse/solver.hpp>

#include <cstdint>
#include <vector>

namespace socialsparse {

/// Estimation protocol settings. Defaults are the published protocol: 8
/// folds, 5 log-spaced lambdas down to lambda_max/20, 20% univariate
/// screening, neighbor weight 0.7, tolerance 1e-4.
struct FitConfig {
    int n_folds = 8;
    int n_lambdas = 5;
    double lambda_min_ratio = 1.0 / 20.0;
    double screening_fraction = 0.20;
    PenaltyKind penalty = PenaltyKind::social;
    double neighbor_weight = 0.7;
    LossSpec loss{};
    SolverConfig solver{};
    bool early_stopping = true;
    int check_every = 10;
    int patience = 3;
    int power_iterations = 100;
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

/// Smallest lambda for which the l1-penalized fit started from zero is zero.
///
/// Computed as ||grad_w F(0, b*)||_inf, with b* the best intercept for the
/// zero model. Squared loss: ||X^T (y - mean y)||_inf / n (no centering
/// without intercept). Logistic loss: (1/n) ||X^T y~||_inf with
/// y~_i = n-/n for positives and -n+/n for negatives.
/// Throws UsageError when the value is zero (no correlation at all).
double lambda_max(const LossSpec& loss, const Dataset& data);

/// lambda_max * ratio^(i/(count-1)), i = 0..count-1, strictly decreasing.
std::vector<double> lambda_grid(double lambda_max, int count, double min_ratio);

/// One-way ANOVA F statistic per feature (classification) or squared
/// Pearson correlation with y (regression). Constant features score 0.
Vector screening_scores(const Dataset& data);

struct ScreeningResult {
    Dataset reduced;
    std::vector<Index> kept;  // sorted masked indices of the input grid
};

/// Keeps the ceil(fraction * p) best-scoring voxels, ties to the lower index.
ScreeningResult univariate_screening(const Dataset& data, double fraction);

/// Fold id per sample. Classification folds are stratified: samples of each
/// class are shuffled and dealt round-robin, positives first.
std::vector<int> assign_folds(const Dataset& data, int n_folds, std::uint64_t seed);

struct PathResult {
    std::vector<double> lambdas;
    std::vector<double> validation_scores;
    std::vector<Vector> coefficients;  // in the training set's feature space
    std::vector<double> intercepts;
    std::vector<int> iterations;
    std::vector<StopReason> stop_reasons;
    std::size_t best = 0;  // highest validation score, ties to the larger lambda
};

/// Descending lambda path on one train/validation split with warm starts.
/// The grid starts at the l1 lambda_max of `train` whatever the shrinkage;
/// social shrinkage at that lambda is not necessarily all-zero.
PathResult fit_path(const Dataset& train, const Dataset& validation, const ShrinkageOperator& shrink,
                    const FitConfig& cfg);

struct FoldResult {
    std::vector<Index> kept;
    PathResult path;
    double chosen_lambda = 0.0;
    double validation_score = 0.0;
    Vector w;  // full masked space of the input data, zero for screened-out voxels
    double intercept = 0.0;
};

struct CvResult {
    std::vector<FoldResult> folds;
    WeightMap model;  // mean of the fold coefficients at each fold's chosen lambda
    double mean_validation_score = 0.0;
    double mean_chosen_lambda = 0.0;
};

/// Throws NumericError if the design matrix or targets hold non-finite values.
CvResult fit_cv(const Dataset& data, const FitConfig& cfg);

/// Same, with explicit fold ids (0..n_folds-1 per sample).
CvResult fit_cv(const Dataset& data, const FitConfig& cfg, const std::vector<int>& folds);

} // namespace socialsparse
