#pragma once

#include "rgam/parallel.hpp"
#include "rgam/rgam.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace rgam {

/// Fitting procedure under study: (x, y) -> fitted values.
using ResponseFitter = std::function<Eigen::VectorXd(const Eigen::MatrixXd&, const Eigen::VectorXd&)>;

struct DofConfig {
    Eigen::VectorXd mu;                // true signal, fixed across replicates
    double sigma = 1.0;                // noise sd
    std::size_t replicates = 100;      // B
    std::optional<Eigen::VectorXd> a;  // centring constants, default 0
    std::uint64_t seed = 1;

    void validate(Eigen::Index n) const;
};

struct DofEstimate {
    double df_hat = 0.0;
    double standard_error = 0.0; // sd of per-replicate contributions / sqrt(B)
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
};

/// Monte Carlo estimate of sum_i Cov(y_i, yhat_i) / sigma^2 with
/// y* = mu + sigma z. Replicate b draws z from the stream
/// derive_seed(seed, {b}); contributions are reduced in replicate order.
/// A fitter failure is rethrown as NumericError naming the replicate.
DofEstimate estimate_df(const ResponseFitter& fitter, const Eigen::MatrixXd& x, const DofConfig& config,
                        Execution exec = Execution::serial);

ResponseFitter identity_fitter();
ResponseFitter grand_mean_fitter();
ResponseFitter ols_fitter(); // least squares with intercept

/// RGAM with lambda = 0 in Step 3 (Step 1 still picks lambda by CV unless
/// `step1_lambda` is set). Throws UsageError unless n > p + #splines.
ResponseFitter unpenalized_rgam_fitter(RgamConfig config);

ResponseFitter make_named_fitter(const std::string& name, const RgamConfig& base);

} // namespace rgam
