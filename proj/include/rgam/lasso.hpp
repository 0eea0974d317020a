#pragma once

#include "rgam/dataset.hpp"
#include "rgam/family.hpp"

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace rgam {

/// Strictly decreasing, non-negative penalty grid.
struct LambdaPath {
    std::vector<double> values;
    double lambda_max = 0.0;
    double min_ratio = 0.0;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t k) const { return values[k]; }

    /// m log-linearly spaced values from lambda_max to min_ratio * lambda_max.
    static LambdaPath log_spaced(double lambda_max, std::size_t m, double min_ratio);
    /// User-supplied grid; validated (strictly decreasing, >= 0, non-empty).
    static LambdaPath from_values(std::vector<double> values);
};

/// glmnet default: 1e-2 when n < p, else 1e-4.
double default_min_ratio(Eigen::Index n, Eigen::Index p);

/// lambda_max = max_j |<x_j, r>| / n on standardized columns, then a
/// log-linear grid. Throws DataError when lambda_max is 0.
LambdaPath make_lambda_path(const Eigen::MatrixXd& x_std, const Eigen::VectorXd& working_response, std::size_t m,
                            double min_ratio);

enum class Scale { link, response };

struct LassoOptions {
    std::size_t nlambda = 100;
    std::optional<double> lambda_min_ratio; // default_min_ratio() when unset
    std::optional<LambdaPath> path;         // overrides nlambda / lambda_min_ratio

    // Per-column flag, true = penalized. Empty means every column penalized.
    std::vector<bool> penalty_mask;

    // Divisor used for internal scaling of each column, replacing its own
    // population sd. Columns are still centred. Zero-variance columns stay masked.
    std::optional<Eigen::VectorXd> column_scales;

    double tolerance = 1e-7;      // max |coefficient change| per sweep, internal scale
    int max_irls_iterations = 25; // per lambda, binomial/poisson
    double weight_floor = 1e-5;
    long max_sweeps = 200000;     // per lambda, safety net
};

/// Coefficient path on the original feature scale.
struct FittedLinearModel {
    Eigen::MatrixXd beta;       // m x q
    Eigen::VectorXd intercepts; // m
    LambdaPath lambda;
    Family family = Family::gaussian;
    double null_deviance = 0.0;  // mean deviance of the intercept-only model
    Eigen::VectorXd deviances;   // mean training deviance per lambda
    std::vector<bool> masked;    // zero-variance columns, coefficient fixed at 0
    Eigen::VectorXd center;      // column means used internally
    Eigen::VectorXd scale;       // column divisors used internally

    std::size_t n_lambda() const { return lambda.size(); }
    Eigen::Index n_coef() const { return beta.cols(); }
    /// Nonzero coefficient count at one lambda.
    Eigen::Index nonzero(std::size_t lambda_index) const;
};

/// Penalized GLM path: coordinate descent (gaussian) or IRLS-wrapped
/// coordinate descent (binomial, poisson), warm-started along the path.
/// Throws NumericError on divergence or non-finite objective.
FittedLinearModel fit_lasso_path(const Dataset& d, const LassoOptions& options = {});

Eigen::VectorXd predict_linear(const FittedLinearModel& model, const Eigen::MatrixXd& x_new, std::size_t lambda_index,
                               Scale scale = Scale::link);

/// Predictions at every lambda, n x m.
Eigen::MatrixXd predict_linear_path(const FittedLinearModel& model, const Eigen::MatrixXd& x_new,
                                    Scale scale = Scale::link);

} // namespace rgam
