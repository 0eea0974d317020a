#pragma once

#include "rgam/dataset.hpp"
#include "rgam/lasso.hpp"
#include "rgam/parallel.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rgam {

enum class CvMetric { deviance, mse, auc };

std::string to_string(CvMetric metric);
CvMetric parse_metric(std::string_view name);

struct NonzeroCount {
    Eigen::Index linear = 0;
    Eigen::Index nonlinear = 0;
};

struct CvResult {
    LambdaPath lambda;
    Eigen::VectorXd mean_metric;
    Eigen::VectorXd se_metric;
    std::size_t lambda_min_index = 0;
    std::size_t lambda_1se_index = 0;
    std::vector<int> fold_assignments; // fold id in [0, k) per row
    CvMetric metric = CvMetric::deviance;
    std::vector<NonzeroCount> nonzero_counts;
    std::uint64_t seed = 0;
};

/// Result of fitting the full data: the shared lambda path plus per-lambda
/// (linear, non-linear) selected counts.
struct PathFit {
    LambdaPath path;
    std::vector<NonzeroCount> nonzero;
};

/// A model-fitting procedure for cross-validation.
///   fit_full(d)                         -> shared path built on the full data
///   fit_predict(train, x_test, path, f) -> n_test x m response-scale predictions
/// `f` is the fold index, available for deriving per-fold seeds.
struct PathFitter {
    std::function<PathFit(const Dataset&)> fit_full;
    std::function<Eigen::MatrixXd(const Dataset&, const Eigen::MatrixXd&, const LambdaPath&, std::size_t)> fit_predict;
};

/// Seeded shuffle into k folds of sizes differing by at most one; binomial
/// responses are stratified by class.
std::vector<int> assign_folds(const Eigen::VectorXd& y, Family family, std::size_t k, std::uint64_t seed);

/// Full k-fold cross-validation: fit_full on all rows, then each fold.
CvResult cross_validate(const Dataset& d, const PathFitter& fitter, std::size_t k, CvMetric metric, std::uint64_t seed,
                        Execution exec = Execution::serial);

/// Cross-validation on an already-built shared path.
CvResult cross_validate_path(const Dataset& d, const PathFitter& fitter, const PathFit& full, std::size_t k,
                             CvMetric metric, std::uint64_t seed, Execution exec = Execution::serial);

/// Probability that a random positive outranks a random negative, ties 1/2.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

/// -2/n sum [y log p + (1 - y) log(1 - p)], p clamped to [1e-10, 1 - 1e-10].
double binomial_deviance(const Eigen::VectorXd& prob, const Eigen::VectorXd& labels);

/// Held-out metric for response-scale predictions.
double score_predictions(CvMetric metric, Family family, const Eigen::VectorXd& y, const Eigen::VectorXd& pred);

PathFitter make_lasso_fitter(const LassoOptions& options = {});

/// Training-mean predictor. Its path is the lasso path of the data; it ignores lambda.
PathFitter make_null_fitter(const LassoOptions& options = {});

/// Tidy CSV: lambda, mean, se, nonzero_linear, nonzero_nonlinear.
std::string cv_result_csv(const CvResult& result);

} // namespace rgam
