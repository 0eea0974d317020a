#include "rgam/rgam.hpp"

#include "rgam/error.hpp"
#include "rgam/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace rgam {

InitNz InitNz::parse(const std::string& text) {
    if (text == "all") return all();
    if (text == "none" || text.empty()) return none();
    std::vector<Eigen::Index> idx;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        long v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size() || v < 1)
            throw UsageError("init_nz entries must be 1-based feature numbers, got '" + item + "'");
        idx.push_back(static_cast<Eigen::Index>(v - 1));
    }
    return list(std::move(idx));
}

std::string InitNz::to_string() const {
    switch (kind) {
    case Kind::all: return "all";
    case Kind::none: return "none";
    case Kind::list: break;
    }
    std::string out;
    for (size_t i = 0; i < indices.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(indices[i] + 1);
    }
    return out;
}

double RgamConfig::resolved_gamma() const {
    if (gamma) return *gamma;
    return init_nz.kind == InitNz::Kind::none ? 0.8 : 0.6;
}

void RgamConfig::validate(Eigen::Index p) const {
    const double g = resolved_gamma();
    if (!(g >= 0.0 && g <= 1.0)) throw UsageError("gamma must lie in [0, 1]");
    if (!(df >= 2.0)) throw UsageError("df must be >= 2");
    if (nfolds_step1 < 2) throw UsageError("nfolds must be >= 2");
    if (nlambda < 2) throw UsageError("nlambda must be >= 2");
    if (lambda_min_ratio && !(*lambda_min_ratio > 0.0 && *lambda_min_ratio < 1.0))
        throw UsageError("lambda min ratio must lie in (0, 1)");
    if (step1_lambda && !(*step1_lambda >= 0.0)) throw UsageError("step-1 lambda must be >= 0");
    for (auto j : init_nz.indices)
        if (j < 0 || j >= p)
            throw UsageError("init_nz index " + std::to_string(j + 1) + " is outside [1, " + std::to_string(p) + "]");
}

Eigen::VectorXd SplineFeature::evaluate(std::span<const double> x) const {
    if (!active) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.size()));
    return scale_factor * evaluate_spline(spline, x).array();
}

std::vector<const SplineFeature*> RgamModel::active_splines() const {
    std::vector<const SplineFeature*> out;
    for (const auto& sf : spline_bank)
        if (sf.active) out.push_back(&sf);
    return out;
}

NonzeroCount RgamModel::nonzero(std::size_t lambda_index) const {
    NonzeroCount c;
    const auto k = static_cast<Eigen::Index>(lambda_index);
    for (Eigen::Index j = 0; j < step3_model.n_coef(); ++j) {
        if (step3_model.beta(k, j) == 0.0) continue;
        (j < p ? c.linear : c.nonlinear) += 1;
    }
    return c;
}

std::vector<bool> RgamModel::linear_selected(std::size_t lambda_index) const {
    std::vector<bool> sel(static_cast<size_t>(p), false);
    const auto k = static_cast<Eigen::Index>(lambda_index);
    for (Eigen::Index j = 0; j < p; ++j) sel[static_cast<size_t>(j)] = step3_model.beta(k, j) != 0.0;
    return sel;
}

std::vector<bool> RgamModel::nonlinear_selected(std::size_t lambda_index) const {
    std::vector<bool> sel(static_cast<size_t>(p), false);
    const auto k = static_cast<Eigen::Index>(lambda_index);
    const auto active = active_splines();
    for (size_t a = 0; a < active.size(); ++a)
        if (step3_model.beta(k, p + static_cast<Eigen::Index>(a)) != 0.0)
            sel[static_cast<size_t>(active[a]->feature_index)] = true;
    return sel;
}

std::vector<Eigen::Index> select_nonlinear_candidates(std::span<const Eigen::Index> active_set, const InitNz& init_nz,
                                                      Eigen::Index p) {
    std::vector<Eigen::Index> out;
    for (auto j : active_set)
        if (j < 0 || j >= p) throw UsageError("active-set index " + std::to_string(j + 1) + " is out of range");
    switch (init_nz.kind) {
    case InitNz::Kind::all:
        out.resize(static_cast<size_t>(p));
        for (Eigen::Index j = 0; j < p; ++j) out[static_cast<size_t>(j)] = j;
        return out;
    case InitNz::Kind::none:
        out.assign(active_set.begin(), active_set.end());
        break;
    case InitNz::Kind::list:
        for (auto j : init_nz.indices)
            if (j < 0 || j >= p)
                throw UsageError("init_nz index " + std::to_string(j + 1) + " is outside [1, " + std::to_string(p) +
                                 "]");
        out.assign(active_set.begin(), active_set.end());
        out.insert(out.end(), init_nz.indices.begin(), init_nz.indices.end());
        break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Eigen::VectorXd compute_residual(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted_link, Family family) {
    if (y.size() != fitted_link.size()) throw UsageError("residual: length mismatch");
    return y - inverse_link(family, fitted_link);
}

namespace {

constexpr double kDegenerateSd = 1e-10;

SplineFeature fit_spline_feature(Eigen::Index j, std::span<const double> x, std::span<const double> r, double df,
                                 double gamma, double mean_sd) {
    SplineFeature sf;
    sf.feature_index = j;
    const std::size_t unique = count_unique(x);
    if (unique < 4) return sf;
    try {
        sf.spline = fit_smoothing_spline(x, r, std::min(df, static_cast<double>(unique)));
    } catch (const NumericError&) {
        return sf;
    }
    const double sd = sample_sd(sf.spline.fitted);
    if (!(sd >= kDegenerateSd)) return sf;
    sf.scale_factor = gamma * mean_sd / sd;
    sf.active = true;
    return sf;
}

} // namespace

Eigen::MatrixXd rgam_design(const RgamModel& model, const Eigen::MatrixXd& x_new) {
    if (x_new.cols() != model.p)
        throw DataError("prediction matrix has " + std::to_string(x_new.cols()) + " columns, model expects " +
                        std::to_string(model.p));
    const auto active = model.active_splines();
    Eigen::MatrixXd design(x_new.rows(), model.p + static_cast<Eigen::Index>(active.size()));
    design.leftCols(model.p) = x_new;
    for (size_t a = 0; a < active.size(); ++a) {
        const auto col = x_new.col(active[a]->feature_index);
        design.col(model.p + static_cast<Eigen::Index>(a)) =
            active[a]->evaluate(std::span<const double>(col.data(), static_cast<size_t>(col.size())));
    }
    return design;
}

RgamModel fit_rgam(const Dataset& d, const RgamConfig& config) {
    config.validate(d.p());
    const Eigen::Index n = d.n();
    const Eigen::Index p = d.p();
    const Family family = d.family();

    RgamModel model;
    model.config = config;
    model.config.gamma = config.resolved_gamma();
    model.family = family;
    model.p = p;
    const double gamma = *model.config.gamma;
    const double min_ratio = config.lambda_min_ratio.value_or(default_min_ratio(n, p));

    // Step 1: lasso of y on X at the CV-selected lambda
    LassoOptions step1;
    step1.nlambda = config.nlambda;
    step1.lambda_min_ratio = min_ratio;
    if (config.step1_lambda) {
        step1.path = LambdaPath::from_values({*config.step1_lambda});
        model.step1_model = fit_lasso_path(d, step1);
        model.step1_lambda_index = 0;
    } else {
        model.step1_model = fit_lasso_path(d, step1);
        PathFit full{model.step1_model.lambda, {}};
        full.nonzero.resize(model.step1_model.n_lambda());
        for (std::size_t l = 0; l < model.step1_model.n_lambda(); ++l)
            full.nonzero[l].linear = model.step1_model.nonzero(l);
        const auto cv = cross_validate_path(d, make_lasso_fitter(step1), full, config.nfolds_step1,
                                            CvMetric::deviance, derive_seed(config.seed, {1}), config.execution);
        model.step1_lambda_index = config.step1_rule == LambdaRule::min ? cv.lambda_min_index : cv.lambda_1se_index;
    }
    model.step1_lambda = model.step1_model.lambda[model.step1_lambda_index];
    const Eigen::VectorXd eta1 = predict_linear(model.step1_model, d.x(), model.step1_lambda_index, Scale::link);
    model.residual = compute_residual(d.y(), eta1, family);
    for (Eigen::Index j = 0; j < p; ++j)
        if (model.step1_model.beta(static_cast<Eigen::Index>(model.step1_lambda_index), j) != 0.0)
            model.step1_active.push_back(j);

    // Step 2: residual splines, rescaled so sd(F_j) = gamma * mean_k sd(X_k)
    const auto candidates = select_nonlinear_candidates(model.step1_active, config.init_nz, p);
    double sd_sum = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) sd_sum += sample_sd(Eigen::VectorXd(d.x().col(j)));
    model.mean_feature_sd = sd_sum / static_cast<double>(p);

    const std::span<const double> r(model.residual.data(), static_cast<size_t>(n));
    model.spline_bank.resize(candidates.size());
    for_each_index(config.execution, candidates.size(), [&](std::size_t c) {
        const Eigen::Index j = candidates[c];
        const auto col = d.x().col(j);
        model.spline_bank[c] = fit_spline_feature(j, std::span<const double>(col.data(), static_cast<size_t>(n)), r,
                                                  config.df, gamma, model.mean_feature_sd);
    });
    model.pure_lasso = model.active_splines().empty();

    // Step 3: lasso path on [X F]
    Eigen::MatrixXd design = rgam_design(model, d.x());
    const Eigen::Index q = design.cols();
    LassoOptions step3;
    step3.nlambda = config.nlambda;
    step3.lambda_min_ratio = min_ratio;
    step3.path = config.step3_path;
    if (config.step3_scaling == Step3Scaling::reluctant) {
        Eigen::VectorXd scales(q);
        for (Eigen::Index j = 0; j < p; ++j) scales[j] = sample_sd(Eigen::VectorXd(d.x().col(j)));
        for (Eigen::Index j = p; j < q; ++j) scales[j] = model.mean_feature_sd;
        step3.column_scales = std::move(scales);
    }
    model.step3_model = fit_lasso_path(Dataset(std::move(design), d.y(), family), step3);
    return model;
}

Eigen::VectorXd predict_rgam(const RgamModel& model, const Eigen::MatrixXd& x_new, std::size_t lambda_index,
                             Scale scale) {
    return predict_linear(model.step3_model, rgam_design(model, x_new), lambda_index, scale);
}

Eigen::MatrixXd predict_rgam_path(const RgamModel& model, const Eigen::MatrixXd& x_new, Scale scale) {
    return predict_linear_path(model.step3_model, rgam_design(model, x_new), scale);
}

PathFitter make_rgam_fitter(const RgamConfig& config) {
    PathFitter fitter;
    fitter.fit_full = [config](const Dataset& d) {
        const auto model = fit_rgam(d, config);
        PathFit out;
        out.path = model.step3_model.lambda;
        out.nonzero.resize(out.path.size());
        for (std::size_t l = 0; l < out.path.size(); ++l) out.nonzero[l] = model.nonzero(l);
        return out;
    };
    fitter.fit_predict = [config](const Dataset& train, const Eigen::MatrixXd& x_test, const LambdaPath& path,
                                  std::size_t fold) {
        RgamConfig fold_config = config;
        fold_config.step3_path = path;
        fold_config.seed = derive_seed(config.seed, {2, fold});
        return predict_rgam_path(fit_rgam(train, fold_config), x_test, Scale::response);
    };
    return fitter;
}

} // namespace rgam
