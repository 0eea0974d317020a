#pragma once

#include "rgam/dataset.hpp"
#include "rgam/lasso.hpp"
#include "rgam/parallel.hpp"
#include "rgam/rgam.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace rgam {

enum class ScenarioId { linear, hier, nonlinear, nonhier, mixed, mixed_large };

std::string to_string(ScenarioId id);
ScenarioId parse_scenario(std::string_view name);
std::vector<ScenarioId> all_scenarios();

/// Orthogonal polynomial pieces on Unif[-1, 1]: X, 3X^2 - 1, 5X^3 - 3X.
enum class Basis { linear, quadratic, cubic };

double basis_value(Basis basis, double x);
/// E[b(X)^2] for X ~ Unif[-1, 1]: 1/3, 4/5, 4/7.
double basis_second_moment(Basis basis);

struct SignalTerm {
    Eigen::Index feature = 0; // 0-based
    Basis basis = Basis::linear;
    double coef = 1.0;
};

struct ScenarioSpec {
    ScenarioId id = ScenarioId::linear;
    Eigen::Index n = 100;
    Eigen::Index p = 200;
    double snr = 2.0;
    Eigen::Index n_test = 5000;
    std::uint64_t seed = 1;

    /// Defaults: (n, p) = (100, 200), or (1000, 500) for mixed_large.
    static ScenarioSpec make(ScenarioId id, double snr, std::uint64_t seed);
    std::vector<SignalTerm> signal() const;
    void validate() const;
};

/// Var(mu) under independent Unif[-1, 1] features, in closed form. The three
/// basis functions are mutually orthogonal with mean 0, so it is a sum of
/// coef^2 * E[b^2].
double signal_variance(const ScenarioSpec& spec);

/// Share of Var(mu) carried by linear terms and by non-linear terms.
struct SnrShares {
    double linear = 0.0;
    double nonlinear = 0.0;
};
SnrShares snr_shares(const ScenarioSpec& spec);

Eigen::VectorXd signal_values(const ScenarioSpec& spec, const Eigen::MatrixXd& x);

struct ScenarioData {
    Dataset train;
    Eigen::VectorXd train_mu;
    Eigen::MatrixXd test_x;
    Eigen::VectorXd test_mu;
    double sigma = 0.0;
    std::vector<Eigen::Index> true_support;
};

/// X ~ Unif[-1, 1] i.i.d., y = mu + N(0, sigma^2), sigma^2 = Var(mu) / snr.
ScenarioData generate_scenario(const ScenarioSpec& spec);

struct SimResult {
    std::string scenario;
    double snr = 0.0;
    std::string method;
    std::size_t replicate = 0;
    double relative_test_error = 0.0;
    Eigen::Index n_selected_features = 0;
    Eigen::Index n_selected_linear = 0;
    Eigen::Index n_selected_nonlinear = 0;
    Eigen::Index n_true_recovered = 0;
    std::string status = "ok";
};

/// mean((yhat - mu)^2) / mean((ybar_train - mu)^2) plus selection counts. A
/// feature is selected when its linear or non-linear component is nonzero.
SimResult evaluate_predictions(const Eigen::VectorXd& yhat, const Eigen::VectorXd& test_mu, double ybar_train,
                               const std::vector<bool>& linear_selected, const std::vector<bool>& nonlinear_selected,
                               const std::vector<Eigen::Index>& true_support);

SimResult evaluate_fit(const RgamModel& model, const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_mu,
                       double ybar_train, std::size_t lambda_index, const std::vector<Eigen::Index>& true_support);
SimResult evaluate_fit(const FittedLinearModel& model, const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_mu,
                       double ybar_train, std::size_t lambda_index, const std::vector<Eigen::Index>& true_support);

enum class Method { null, lasso, rgam, rgam_sel };
std::string to_string(Method m);
Method parse_method(std::string_view name);

/// Fits one method with defaults, selects lambda by k-fold CV (lambda.min),
/// and scores it on the test set.
SimResult run_method(Method method, const ScenarioData& data, std::size_t nfolds, std::uint64_t seed,
                     Execution exec = Execution::serial);

struct BenchmarkConfig {
    std::vector<ScenarioId> scenarios;
    std::vector<double> snrs = {1.0, 2.0, 5.0};
    std::vector<Method> methods = {Method::null, Method::lasso, Method::rgam, Method::rgam_sel};
    std::size_t replicates = 10;
    std::uint64_t seed = 1;
    std::size_t nfolds = 5;
    Eigen::Index n_test = 5000;
    Execution execution = Execution::serial;
};

/// Rows ordered by (scenario, snr, method, replicate). Each (scenario, snr,
/// replicate) cell draws fresh data from derive_seed(seed, {scenario, snr, replicate});
/// cells run concurrently under Execution::parallel. A failed fit becomes a
/// row with NaN metrics and an error status.
std::vector<SimResult> run_benchmark(const BenchmarkConfig& config);

std::string sim_results_csv_header();
std::string sim_result_csv_row(const SimResult& r);
std::string sim_results_csv(const std::vector<SimResult>& rows);
std::vector<SimResult> parse_sim_results_csv(const std::string& text);

/// Median and quartiles per (scenario, snr, method), as CSV.
std::string summarize_results_csv(const std::vector<SimResult>& rows);

/// Type-7 (linear interpolation) sample quantile.
double quantile(std::vector<double> values, double prob);

} // namespace rgam
