#include "rgam/dof.hpp"

#include "rgam/error.hpp"
#include "rgam/rng.hpp"

#include <Eigen/QR>
#include <cmath>
#include <random>
#include <vector>

namespace rgam {

void DofConfig::validate(Eigen::Index n) const {
    if (mu.size() != n) throw UsageError("mu length does not match the number of rows");
    if (!(sigma > 0.0)) throw UsageError("sigma must be > 0");
    if (replicates < 2) throw UsageError("replicate count B must be >= 2");
    if (a && a->size() != n) throw UsageError("centring constants length does not match the number of rows");
}

DofEstimate estimate_df(const ResponseFitter& fitter, const Eigen::MatrixXd& x, const DofConfig& config,
                        Execution exec) {
    const Eigen::Index n = x.rows();
    config.validate(n);
    const double sigma2 = config.sigma * config.sigma;
    std::vector<double> contribution(config.replicates, 0.0);

    for_each_index(exec, config.replicates, [&](std::size_t b) {
        Rng rng(derive_seed(config.seed, {b}));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y[i] = config.mu[i] + config.sigma * normal(rng);
        Eigen::VectorXd fitted;
        try {
            fitted = fitter(x, y);
        } catch (const std::exception& e) {
            throw NumericError("fitter failed on replicate " + std::to_string(b + 1) + ": " + e.what());
        }
        if (fitted.size() != n) throw NumericError("fitter returned the wrong number of fitted values");
        double c = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double ai = config.a ? (*config.a)[i] : 0.0;
            c += (fitted[i] - ai) * (y[i] - config.mu[i]);
        }
        contribution[b] = c / sigma2;
    });

    const double B = static_cast<double>(config.replicates);
    double mean = 0.0;
    for (double c : contribution) mean += c;
    mean /= B;
    double ss = 0.0;
    for (double c : contribution) ss += (c - mean) * (c - mean);
    DofEstimate est;
    est.df_hat = mean;
    est.standard_error = std::sqrt(ss / (B - 1.0)) / std::sqrt(B);
    est.replicates = config.replicates;
    est.seed = config.seed;
    return est;
}

ResponseFitter identity_fitter() {
    return [](const Eigen::MatrixXd&, const Eigen::VectorXd& y) { return y; };
}

ResponseFitter grand_mean_fitter() {
    return [](const Eigen::MatrixXd&, const Eigen::VectorXd& y) {
        return Eigen::VectorXd::Constant(y.size(), y.mean()).eval();
    };
}

ResponseFitter ols_fitter() {
    return [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
        Eigen::MatrixXd design(x.rows(), x.cols() + 1);
        design.col(0).setOnes();
        design.rightCols(x.cols()) = x;
        const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
        return (design * coef).eval();
    };
}

ResponseFitter unpenalized_rgam_fitter(RgamConfig config) {
    config.step3_path = LambdaPath::from_values({0.0});
    return [config](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
        // Step 3 sees at most p linear + p spline columns
        if (x.rows() <= 2 * x.cols())
            throw UsageError("unpenalized RGAM needs n > 2p (n=" + std::to_string(x.rows()) +
                             ", p=" + std::to_string(x.cols()) + ")");
        const Dataset d(x, y, Family::gaussian);
        const auto model = fit_rgam(d, config);
        return predict_rgam(model, x, 0, Scale::link);
    };
}

ResponseFitter make_named_fitter(const std::string& name, const RgamConfig& base) {
    if (name == "identity") return identity_fitter();
    if (name == "mean") return grand_mean_fitter();
    if (name == "ols") return ols_fitter();
    if (name == "rgam") {
        RgamConfig c = base;
        c.init_nz = InitNz::all();
        return unpenalized_rgam_fitter(c);
    }
    if (name == "rgam_sel") {
        RgamConfig c = base;
        c.init_nz = InitNz::none();
        return unpenalized_rgam_fitter(c);
    }
    throw UsageError("unknown fitter '" + name + "' (expected identity, mean, ols, rgam or rgam_sel)");
}

} // namespace rgam
