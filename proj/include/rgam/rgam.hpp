#pragma once

#include "rgam/cv.hpp"
#include "rgam/dataset.hpp"
#include "rgam/lasso.hpp"
#include "rgam/parallel.hpp"
#include "rgam/spline.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rgam {

/// Which features get a non-linear counterpart in addition to the Step-1
/// active set. Indices are 0-based.
struct InitNz {
    enum class Kind { all, none, list };
    Kind kind = Kind::all;
    std::vector<Eigen::Index> indices;

    static InitNz all() { return {Kind::all, {}}; }
    static InitNz none() { return {Kind::none, {}}; }
    static InitNz list(std::vector<Eigen::Index> idx) { return {Kind::list, std::move(idx)}; }

    /// "all", "none", or a comma list of 1-based feature numbers.
    static InitNz parse(const std::string& text);
    std::string to_string() const;
};

/// How Step 3 scales the [X F] design before coordinate descent.
///   reluctant:   X columns by their own sd, F columns by mean_k sd(X_k), so
///                each F column enters the penalty with sd = gamma.
///   standardize: every column by its own sd (gamma then only matters at 0).
enum class Step3Scaling { reluctant, standardize };

enum class LambdaRule { min, one_se };

struct RgamConfig {
    std::optional<double> gamma; // default 0.6, or 0.8 when init_nz is none
    double df = 4.0;
    InitNz init_nz = InitNz::all();
    std::size_t nfolds_step1 = 5;
    std::size_t nlambda = 100;
    std::optional<double> lambda_min_ratio;
    std::uint64_t seed = 1;
    LambdaRule step1_rule = LambdaRule::min;
    Step3Scaling step3_scaling = Step3Scaling::reluctant;

    // Fixed Step-1 lambda (skips the Step-1 CV), e.g. 0 for an unpenalized fit.
    std::optional<double> step1_lambda;
    // Fixed Step-3 path (used by outer CV folds and unpenalized fits).
    std::optional<LambdaPath> step3_path;

    Execution execution = Execution::serial;

    double resolved_gamma() const;
    /// Throws UsageError for out-of-range values.
    void validate(Eigen::Index p) const;
};

struct SplineFeature {
    Eigen::Index feature_index = 0;
    SmoothingSplineFit spline;
    double scale_factor = 0.0;
    bool active = false; // false when the fit is degenerate (constant or < 4 unique values)

    /// scale_factor * spline(x); zero when inactive.
    Eigen::VectorXd evaluate(std::span<const double> x) const;
};

struct RgamModel {
    FittedLinearModel step1_model;
    std::size_t step1_lambda_index = 0;
    double step1_lambda = 0.0;
    std::vector<Eigen::Index> step1_active;
    Eigen::VectorXd residual;
    std::vector<SplineFeature> spline_bank; // one per candidate feature, active or not
    FittedLinearModel step3_model;          // columns: p linear, then one per active spline
    RgamConfig config;                      // gamma resolved
    Family family = Family::gaussian;
    Eigen::Index p = 0;
    double mean_feature_sd = 0.0;
    bool pure_lasso = false; // no active spline feature

    std::vector<const SplineFeature*> active_splines() const;
    /// Per lambda, nonzero (linear, non-linear) component counts.
    NonzeroCount nonzero(std::size_t lambda_index) const;
    /// Features with a nonzero linear or non-linear coefficient.
    std::vector<bool> linear_selected(std::size_t lambda_index) const;
    std::vector<bool> nonlinear_selected(std::size_t lambda_index) const;
};

/// Steps 1-3: CV lasso on X, per-feature residual splines rescaled to
/// sd = gamma * mean sd(X), joint lasso path on [X F].
RgamModel fit_rgam(const Dataset& d, const RgamConfig& config);

/// {all} -> every feature; {none} -> the active set; list -> list U active set.
/// Result is sorted and unique. Throws UsageError on out-of-range indices.
std::vector<Eigen::Index> select_nonlinear_candidates(std::span<const Eigen::Index> active_set, const InitNz& init_nz,
                                                      Eigen::Index p);

/// Response-scale residual y - g^{-1}(eta) (plain y - fitted for gaussian).
Eigen::VectorXd compute_residual(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted_link, Family family);

/// [x_new, F(x_new)] for the model's active splines.
Eigen::MatrixXd rgam_design(const RgamModel& model, const Eigen::MatrixXd& x_new);

Eigen::VectorXd predict_rgam(const RgamModel& model, const Eigen::MatrixXd& x_new, std::size_t lambda_index,
                             Scale scale = Scale::link);

Eigen::MatrixXd predict_rgam_path(const RgamModel& model, const Eigen::MatrixXd& x_new, Scale scale = Scale::link);

/// Cross-validation fitter that reruns the whole pipeline inside each fold on
/// the full-data Step-3 path.
PathFitter make_rgam_fitter(const RgamConfig& config);

} // namespace rgam
