// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "cli.hpp"
#include "rgam/dof.hpp"
#include "rgam/io.hpp"
#include "rgam/model_io.hpp"
#include "rgam/rgam.hpp"
#include "rgam/sim.hpp"
#include "rgam/spline.hpp"

#include "test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

using namespace rgam;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int prec = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return buf;
}

Outcome solver_correctness() {
    Timer t;
    double worst_kkt = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Dataset d = oracle::gaussian_instance(50, 100, 1000 + s);
        const auto m = fit_lasso_path(d);
        for (std::size_t k = 0; k < m.n_lambda(); ++k) worst_kkt = std::max(worst_kkt, oracle::kkt_violation(m, d, k));
    }
    double worst_rel = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Eigen::Index n = 10 + static_cast<Eigen::Index>(s), p = 20 - static_cast<Eigen::Index>(s);
        const Dataset d = oracle::gaussian_instance(n, p, 2000 + s);
        const auto m = fit_lasso_path(d);
        const Eigen::MatrixXd z = oracle::standardized(d.x());
        const Eigen::VectorXd yc = d.y().array() - d.y().mean();
        for (std::size_t k = 0; k < m.n_lambda(); k += 9) {
            const Eigen::VectorXd b = m.beta.row(static_cast<Eigen::Index>(k)).transpose().cwiseProduct(m.scale);
            const double ours = oracle::lasso_objective(z, yc, b, m.lambda[k]);
            const double ref = oracle::lasso_objective(z, yc, oracle::proximal_gradient(z, yc, m.lambda[k]), m.lambda[k]);
            worst_rel = std::max(worst_rel, std::abs(ours - ref) / std::abs(ref));
        }
    }
    const double secs = t.seconds();
    return {worst_kkt < 1e-6 && worst_rel <= 1e-6 && secs < 30.0,
            "max KKT violation " + fmt(worst_kkt) + " (< 1e-6) over 50x100 path; max objective gap " + fmt(worst_rel) +
                " (<= 1e-6 rel); " + fmt(secs) + " s"};
}

Outcome spline_correctness() {
    Timer t;
    double worst_trace = 0.0;
    for (int n : {20, 100}) {
        const Eigen::MatrixXd xm = oracle::uniform_matrix(n, 1, 50 + static_cast<std::uint64_t>(n));
        const std::vector<double> x(xm.data(), xm.data() + n);
        for (double df : {3.0, 4.0, 6.0}) {
            const double lam = solve_df_to_lambda(x, df);
            Eigen::MatrixXd s(n, n);
            for (int i = 0; i < n; ++i) {
                std::vector<double> e(static_cast<std::size_t>(n), 0.0);
                e[static_cast<std::size_t>(i)] = 1.0;
                s.col(i) = fit_smoothing_spline_lambda(x, e, lam).fitted;
            }
            worst_trace = std::max(worst_trace, std::abs(s.trace() - df));
        }
    }
    const Eigen::MatrixXd xm = oracle::uniform_matrix(60, 1, 77, -2.0, 3.0);
    const std::vector<double> x(xm.data(), xm.data() + 60);
    const Eigen::VectorXd r = oracle::normal_vector(60, 78);
    const auto line_fit = fit_smoothing_spline(x, std::vector<double>(r.data(), r.data() + 60), 2.0);
    const Eigen::VectorXd coef = oracle::ols_with_intercept(xm, r);
    const double line_err = (line_fit.fitted - (coef[0] + coef[1] * xm.col(0).array()).matrix()).cwiseAbs().maxCoeff();

    double repro_err = 0.0;
    std::vector<double> lin(60);
    for (std::size_t i = 0; i < 60; ++i) lin[i] = 0.4 - 1.7 * x[i];
    for (double df : {3.0, 4.0, 6.0, 20.0}) {
        const auto f = fit_smoothing_spline(x, lin, df);
        for (std::size_t i = 0; i < 60; ++i)
            repro_err = std::max(repro_err, std::abs(f.fitted[static_cast<Eigen::Index>(i)] - lin[i]));
    }
    const double secs = t.seconds();
    return {worst_trace <= 1e-3 && line_err < 1e-6 && repro_err < 1e-8 && secs < 10.0,
            "max |trace - df| " + fmt(worst_trace) + " (<= 1e-3); df=2 vs LS line " + fmt(line_err) +
                " (< 1e-6); linear reproduction " + fmt(repro_err) + " (< 1e-8); " + fmt(secs) + " s"};
}

Dataset random_additive(std::uint64_t seed, Eigen::Index n, Eigen::Index p) {
    Eigen::MatrixXd x = oracle::uniform_matrix(n, p, seed, -2.0, 2.0);
    x.col(1) *= 3.0; // uneven feature scales
    Eigen::VectorXd y = oracle::normal_vector(n, seed + 1);
    y += x.col(0) + x.col(1).array().sin().matrix() + (x.col(2).array().square() - 1.0).matrix();
    return Dataset(std::move(x), std::move(y), Family::gaussian);
}

Outcome rescaling_identity() {
    double worst_ratio = 0.0;
    std::size_t columns = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Dataset d = random_additive(300 + s, 60 + 5 * static_cast<Eigen::Index>(s), 15);
        RgamConfig c;
        c.seed = s;
        if (s % 2) c.init_nz = InitNz::none();
        if (s % 3 == 0) c.gamma = 0.35;
        const auto m = fit_rgam(d, c);
        const double g = m.config.resolved_gamma();
        for (const auto* sf : m.active_splines()) {
            const auto col = d.x().col(sf->feature_index);
            const Eigen::VectorXd f = sf->evaluate(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
            worst_ratio = std::max(worst_ratio, std::abs(sample_sd(f) / m.mean_feature_sd - g));
            ++columns;
        }
    }
    double worst_gap = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Dataset d = random_additive(400 + s, 70, 20);
        RgamConfig c;
        c.gamma = 0.0;
        c.seed = s;
        const auto m = fit_rgam(d, c);
        const auto lasso = fit_lasso_path(d);
        if (m.step3_model.n_lambda() != lasso.n_lambda()) return {false, "gamma=0 path length differs from the lasso's"};
        worst_gap = std::max(worst_gap, (m.step3_model.beta.leftCols(d.p()) - lasso.beta).cwiseAbs().maxCoeff());
        worst_gap = std::max(worst_gap, (m.step3_model.intercepts - lasso.intercepts).cwiseAbs().maxCoeff());
        if (m.step3_model.beta.cols() > d.p())
            worst_gap = std::max(worst_gap, m.step3_model.beta.rightCols(m.step3_model.beta.cols() - d.p()).cwiseAbs().maxCoeff());
    }
    return {columns > 0 && worst_ratio <= 1e-8 && worst_gap <= 1e-8,
            "max |sd(F_j)/mean sd(X) - gamma| " + fmt(worst_ratio) + " over " + std::to_string(columns) +
                " columns (<= 1e-8); gamma=0 vs lasso max coefficient gap " + fmt(worst_gap) + " (<= 1e-8)"};
}

struct MethodStats {
    double rte_median = 0.0;
    double recovered_median = 0.0;
    std::size_t runs = 0;
};

// Runs the CLI bench for one scenario and collects per-method medians.
std::map<std::string, MethodStats> bench_medians(const std::string& scenario, const test::TempDir& dir, std::size_t& rows,
                                                 double& secs) {
    Timer t;
    const auto out = dir.file(scenario + ".csv");
    std::ostringstream sout, serr;
    const int code = cli::run({"bench", "--scenarios", scenario, "--snr", "2", "--replicates", "10", "--seed", "20240601",
                               "--out", out.string()},
                              sout, serr);
    secs = t.seconds();
    if (code != 0) throw std::runtime_error("bench failed: " + serr.str());
    const auto results = parse_sim_results_csv(read_file(out));
    rows = results.size();
    std::map<std::string, std::vector<double>> rte, rec;
    for (const auto& r : results) {
        if (r.status != "ok") continue;
        rte[r.method].push_back(r.relative_test_error);
        rec[r.method].push_back(static_cast<double>(r.n_true_recovered));
    }
    std::map<std::string, MethodStats> stats;
    for (auto& [method, v] : rte)
        stats[method] = {quantile(v, 0.5), quantile(rec[method], 0.5), v.size()};
    return stats;
}

Outcome nonlinear_scenario(const test::TempDir& dir) {
    std::size_t rows = 0;
    double secs = 0.0;
    auto s = bench_medians("nonlinear", dir, rows, secs);
    const double rgam = s["rgam"].rte_median, lasso = s["lasso"].rte_median, sel = s["rgam_sel"].rte_median;
    const bool pass = rows == 40 && s["rgam"].runs == 10 && s["lasso"].runs == 10 && s["rgam_sel"].runs == 10 &&
                      rgam < 0.95 && lasso >= 0.9 && sel >= 0.9 && rgam < lasso && rgam < sel &&
                      rgam < s["null"].rte_median;
    return {pass, "median RTE rgam " + fmt(rgam) + " (< 0.95), lasso " + fmt(lasso) + " (>= 0.9), rgam_sel " + fmt(sel) +
                      " (>= 0.9), null " + fmt(s["null"].rte_median) + "; " + std::to_string(rows) + " rows; " + fmt(secs) +
                      " s"};
}

Outcome hier_scenario(const test::TempDir& dir) {
    std::size_t rows = 0;
    double secs = 0.0;
    auto s = bench_medians("hier", dir, rows, secs);
    const double rgam = s["rgam"].rte_median, lasso = s["lasso"].rte_median, sel = s["rgam_sel"].rte_median;
    const double rec = s["rgam_sel"].recovered_median;
    const bool pass = rows == 40 && s["rgam"].runs == 10 && s["rgam_sel"].runs == 10 && s["lasso"].runs == 10 &&
                      rgam < lasso && sel < lasso && rec >= 4.0;
    return {pass, "median RTE rgam " + fmt(rgam) + ", rgam_sel " + fmt(sel) + " (both < lasso " + fmt(lasso) +
                      "); rgam_sel median recovery " + fmt(rec) + " of 5 (>= 4); " + fmt(secs) + " s"};
}

Outcome degrees_of_freedom() {
    Timer t;
    const Eigen::MatrixXd x = oracle::uniform_matrix(30, 5, 600);
    DofConfig c;
    c.mu = x * Eigen::VectorXd::LinSpaced(5, 1.0, -1.0);
    c.replicates = 200;
    c.seed = 601;
    const auto ols = estimate_df(ols_fitter(), x, c);
    const auto mean = estimate_df(grand_mean_fitter(), x, c);
    const auto id = estimate_df(identity_fitter(), x, c);
    const bool ok_ols = std::abs(ols.df_hat - 6.0) <= 2.0 * ols.standard_error;
    const bool ok_mean = std::abs(mean.df_hat - 1.0) <= 2.0 * mean.standard_error;
    const bool ok_id = std::abs(id.df_hat - 30.0) <= 2.0 * id.standard_error;

    const auto spec = ScenarioSpec::make(ScenarioId::hier, 2.0, 602);
    const Eigen::MatrixXd x2 = oracle::uniform_matrix(100, 12, 603);
    DofConfig c2;
    c2.mu = signal_values(spec, x2);
    c2.sigma = std::sqrt(signal_variance(spec) / 2.0);
    c2.replicates = 100;
    c2.seed = 604;
    const auto rgam = estimate_df(make_named_fitter("rgam", RgamConfig{}), x2, c2);
    const auto sel = estimate_df(make_named_fitter("rgam_sel", RgamConfig{}), x2, c2);
    const double joint = std::sqrt(rgam.standard_error * rgam.standard_error + sel.standard_error * sel.standard_error);
    const bool ok_order = sel.df_hat <= rgam.df_hat + 3.0 * joint;
    const double secs = t.seconds();
    return {ok_ols && ok_mean && ok_id && ok_order && secs < 600.0,
            "ols " + fmt(ols.df_hat) + " +/- " + fmt(ols.standard_error) + " (6), mean " + fmt(mean.df_hat) + " +/- " +
                fmt(mean.standard_error) + " (1), identity " + fmt(id.df_hat) + " +/- " + fmt(id.standard_error) +
                " (30); unpenalized rgam_sel " + fmt(sel.df_hat) + " <= rgam " + fmt(rgam.df_hat) + " + 3*" + fmt(joint) +
                "; " + fmt(secs) + " s"};
}

double corr(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
    const Eigen::ArrayXd ca = a - a.mean(), cb = b - b.mean();
    return (ca * cb).sum() / std::sqrt(ca.square().sum() * cb.square().sum());
}

Outcome generator_fidelity() {
    double worst_snr = 0.0;
    for (auto id : {ScenarioId::linear, ScenarioId::hier, ScenarioId::nonlinear, ScenarioId::nonhier, ScenarioId::mixed,
                    ScenarioId::mixed_large}) {
        auto spec = ScenarioSpec::make(id, 2.0, 700 + static_cast<std::uint64_t>(id));
        spec.n = 100000;
        spec.p = 30;
        spec.n_test = 1;
        const auto data = generate_scenario(spec);
        const Eigen::ArrayXd mu = data.train_mu.array();
        const Eigen::ArrayXd noise = data.train.y().array() - mu;
        const double v_mu = (mu - mu.mean()).square().mean();
        const double v_noise = (noise - noise.mean()).square().mean();
        worst_snr = std::max(worst_snr, std::abs(v_mu / v_noise / 2.0 - 1.0));
    }
    auto spec = ScenarioSpec::make(ScenarioId::linear, 2.0, 710);
    spec.n = 100000;
    spec.p = 10;
    spec.n_test = 1;
    const auto data = generate_scenario(spec);
    const Eigen::ArrayXd u = Eigen::Map<const Eigen::ArrayXd>(data.train.x().data(), data.train.x().size());
    const double c3 = std::abs(corr(u, 5.0 * u.cube() - 3.0 * u));
    const double c2 = std::abs(corr(u, 3.0 * u.square() - 1.0));
    return {worst_snr < 0.02 && c3 < 0.01 && c2 < 0.01,
            "max relative SNR error " + fmt(worst_snr) + " (< 0.02) at n=1e5; |corr(X, 5X^3-3X)| " + fmt(c3) +
                ", |corr(X, 3X^2-1)| " + fmt(c2) + " (< 0.01) over " + std::to_string(u.size()) + " draws"};
}

Outcome determinism(const test::TempDir& dir) {
    const Dataset d = random_additive(800, 80, 12);
    RgamConfig c;
    c.seed = 801;
    const auto a = fit_rgam(d, c);
    const auto b = fit_rgam(d, c);
    const bool same_model = dump_json(to_json(a)) == dump_json(to_json(b));

    BenchmarkConfig bc;
    bc.scenarios = {ScenarioId::mixed};
    bc.snrs = {1.0};
    bc.replicates = 2;
    bc.n_test = 500;
    bc.seed = 802;
    const std::string csv1 = sim_results_csv(run_benchmark(bc));
    const std::string csv2 = sim_results_csv(run_benchmark(bc));
    bc.execution = Execution::parallel;
    const std::string csv3 = sim_results_csv(run_benchmark(bc));
    const bool same_bench = csv1 == csv2 && csv1 == csv3;

    save_model(dir.file("model.json"), a);
    const auto back = load_model(dir.file("model.json"));
    const Eigen::MatrixXd xt = oracle::uniform_matrix(200, 12, 803, -2.5, 2.5);
    const bool same_pred = predict_rgam_path(a, xt) == predict_rgam_path(back, xt) &&
                           predict_rgam_path(a, xt, Scale::response) == predict_rgam_path(back, xt, Scale::response);
    return {same_model && same_bench && same_pred,
            std::string("model JSON ") + (same_model ? "identical" : "DIFFERS") + "; benchmark CSV serial/serial/parallel " +
                (same_bench ? "identical" : "DIFFERS") + "; save-load-predict " + (same_pred ? "identical" : "DIFFERS")};
}

} // namespace

int main() {
    test::TempDir dir;
    int failed = 0;
    auto report = [&](int n, const char* name, auto&& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << o.detail << std::endl;
        if (!o.pass) ++failed;
    };
    report(1, "solver correctness", solver_correctness);
    report(2, "spline correctness", spline_correctness);
    report(3, "rescaling identity", rescaling_identity);
    report(4, "nonlinear scenario", [&] { return nonlinear_scenario(dir); });
    report(5, "hier scenario", [&] { return hier_scenario(dir); });
    report(6, "degrees of freedom", degrees_of_freedom);
    report(7, "generator fidelity", generator_fidelity);
    report(8, "determinism and serialization", [&] { return determinism(dir); });
    std::cout << (8 - failed) << "/8 criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
