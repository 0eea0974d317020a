#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace rgam {

/// Natural cubic smoothing spline with knots at the unique x values.
///
/// The fit minimises sum_k w_k (rbar_k - f(u_k))^2 + lambda * int f''(t)^2 dt,
/// where u_k are the unique x values, w_k their multiplicities and rbar_k the
/// tie-averaged responses. The penalty is computed with x mapped to [0, 1],
/// so `smoothing_parameter` is comparable across features of any range.
/// A value of +inf denotes the least-squares line (df = 2).
struct SmoothingSplineFit {
    std::vector<double> knots;         // sorted unique x, original scale
    std::vector<double> values;        // f(knots)
    std::vector<double> second_derivs; // f''(knots) in original x units; 0 at both ends
    double smoothing_parameter = 0.0;
    double effective_df = 0.0;         // trace of the smoother matrix
    Eigen::VectorXd fitted;            // f(x_i) for the training rows
};

/// Fit with the smoothing parameter chosen so trace(S) == target_df.
/// target_df == 2 gives the least-squares line; target_df == #unique gives
/// the interpolating spline. Throws UsageError when fewer than 4 unique x
/// values exist or target_df is outside [2, #unique].
SmoothingSplineFit fit_smoothing_spline(std::span<const double> x, std::span<const double> r, double target_df);

/// Fit at a fixed smoothing parameter (>= 0, or +inf for the line).
SmoothingSplineFit fit_smoothing_spline_lambda(std::span<const double> x, std::span<const double> r, double lambda);

/// Exact trace of the smoother matrix at `lambda`, O(#unique).
double smoother_trace(std::span<const double> x, double lambda);

/// Inverts the df -> lambda map by log-scale bisection. Throws NumericError
/// if the target is not bracketed or 100 steps do not reach 1e-3.
double solve_df_to_lambda(std::span<const double> x, double target_df);

/// Number of distinct x values.
std::size_t count_unique(std::span<const double> x);

/// Piecewise cubic between knots, linear beyond the boundary knots.
Eigen::VectorXd evaluate_spline(const SmoothingSplineFit& fit, std::span<const double> x_new);

} // namespace rgam
