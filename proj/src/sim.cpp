#include "rgam/sim.hpp"

#include "rgam/cv.hpp"
#include "rgam/error.hpp"
#include "rgam/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <tuple>

namespace rgam {

namespace {

constexpr ScenarioId kScenarios[] = {ScenarioId::linear, ScenarioId::hier,  ScenarioId::nonlinear,
                                     ScenarioId::nonhier, ScenarioId::mixed, ScenarioId::mixed_large};
constexpr Method kMethods[] = {Method::null, Method::lasso, Method::rgam, Method::rgam_sel};

std::vector<SignalTerm> range_terms(Eigen::Index first, Eigen::Index last, Basis basis, double coef) {
    std::vector<SignalTerm> out;
    for (Eigen::Index j = first; j <= last; ++j) out.push_back({j - 1, basis, coef});
    return out;
}

void append(std::vector<SignalTerm>& a, const std::vector<SignalTerm>& b) {
    a.insert(a.end(), b.begin(), b.end());
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

std::string to_string(ScenarioId id) {
    switch (id) {
    case ScenarioId::linear: return "linear";
    case ScenarioId::hier: return "hier";
    case ScenarioId::nonlinear: return "nonlinear";
    case ScenarioId::nonhier: return "nonhier";
    case ScenarioId::mixed: return "mixed";
    case ScenarioId::mixed_large: return "mixed_large";
    }
    return "?";
}

ScenarioId parse_scenario(std::string_view name) {
    for (auto id : kScenarios)
        if (to_string(id) == name) return id;
    throw UsageError("unknown scenario '" + std::string(name) +
                     "' (expected linear, hier, nonlinear, nonhier, mixed or mixed_large)");
}

std::vector<ScenarioId> all_scenarios() {
    return {std::begin(kScenarios), std::end(kScenarios)};
}

double basis_value(Basis basis, double x) {
    switch (basis) {
    case Basis::linear: return x;
    case Basis::quadratic: return 3.0 * x * x - 1.0;
    case Basis::cubic: return 5.0 * x * x * x - 3.0 * x;
    }
    return 0.0;
}

double basis_second_moment(Basis basis) {
    // E X^2 = 1/3, E X^4 = 1/5, E X^6 = 1/7
    switch (basis) {
    case Basis::linear: return 1.0 / 3.0;
    case Basis::quadratic: return 9.0 / 5.0 - 2.0 + 1.0;          // 4/5
    case Basis::cubic: return 25.0 / 7.0 - 30.0 / 5.0 + 9.0 / 3.0; // 4/7
    }
    return 0.0;
}

ScenarioSpec ScenarioSpec::make(ScenarioId id, double snr, std::uint64_t seed) {
    ScenarioSpec s;
    s.id = id;
    s.snr = snr;
    s.seed = seed;
    if (id == ScenarioId::mixed_large) {
        s.n = 1000;
        s.p = 500;
    }
    return s;
}

std::vector<SignalTerm> ScenarioSpec::signal() const {
    std::vector<SignalTerm> t;
    switch (id) {
    case ScenarioId::linear:
        t = range_terms(1, 10, Basis::linear, 1.0);
        break;
    case ScenarioId::hier:
        t = range_terms(1, 5, Basis::linear, 1.0);
        append(t, range_terms(1, 5, Basis::quadratic, 2.0 / 3.0));
        break;
    case ScenarioId::nonlinear:
        t = range_terms(1, 5, Basis::cubic, 2.0);
        break;
    case ScenarioId::nonhier:
        t = range_terms(1, 5, Basis::linear, 1.0);
        append(t, range_terms(6, 10, Basis::quadratic, 2.0 / 3.0));
        break;
    case ScenarioId::mixed:
        t = range_terms(1, 5, Basis::linear, 1.0);
        append(t, range_terms(1, 5, Basis::cubic, 0.75));
        append(t, range_terms(6, 8, Basis::quadratic, 0.85));
        break;
    case ScenarioId::mixed_large:
        t = range_terms(1, 20, Basis::linear, 1.0);
        append(t, range_terms(1, 20, Basis::cubic, 0.75));
        append(t, range_terms(21, 28, Basis::quadratic, 1.0));
        break;
    }
    return t;
}

void ScenarioSpec::validate() const {
    if (n < 2) throw UsageError("scenario n must be >= 2");
    if (n_test < 1) throw UsageError("scenario n_test must be >= 1");
    if (!(snr > 0.0) || !std::isfinite(snr)) throw UsageError("scenario snr must be a positive finite number");
    Eigen::Index need = 0;
    for (const auto& term : signal()) need = std::max(need, term.feature + 1);
    if (p < need)
        throw UsageError("scenario " + to_string(id) + " needs p >= " + std::to_string(need) + " (got " +
                         std::to_string(p) + ")");
}

double signal_variance(const ScenarioSpec& spec) {
    double v = 0.0;
    for (const auto& t : spec.signal()) v += t.coef * t.coef * basis_second_moment(t.basis);
    return v;
}

SnrShares snr_shares(const ScenarioSpec& spec) {
    SnrShares s;
    for (const auto& t : spec.signal()) {
        const double v = t.coef * t.coef * basis_second_moment(t.basis);
        (t.basis == Basis::linear ? s.linear : s.nonlinear) += v;
    }
    const double total = s.linear + s.nonlinear;
    s.linear /= total;
    s.nonlinear /= total;
    return s;
}

Eigen::VectorXd signal_values(const ScenarioSpec& spec, const Eigen::MatrixXd& x) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(x.rows());
    for (const auto& t : spec.signal()) {
        if (t.feature >= x.cols()) throw UsageError("feature matrix has too few columns for the scenario");
        for (Eigen::Index i = 0; i < x.rows(); ++i) mu[i] += t.coef * basis_value(t.basis, x(i, t.feature));
    }
    return mu;
}

ScenarioData generate_scenario(const ScenarioSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Row-major draw order, then noise, then the test set.
    Eigen::MatrixXd x(spec.n, spec.p);
    for (Eigen::Index i = 0; i < spec.n; ++i)
        for (Eigen::Index j = 0; j < spec.p; ++j) x(i, j) = unif(rng);
    Eigen::VectorXd mu = signal_values(spec, x);
    const double sigma = std::sqrt(signal_variance(spec) / spec.snr);
    Eigen::VectorXd y(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) y[i] = mu[i] + sigma * normal(rng);

    Eigen::MatrixXd xt(spec.n_test, spec.p);
    for (Eigen::Index i = 0; i < spec.n_test; ++i)
        for (Eigen::Index j = 0; j < spec.p; ++j) xt(i, j) = unif(rng);
    Eigen::VectorXd mut = signal_values(spec, xt);

    std::vector<Eigen::Index> support;
    for (const auto& t : spec.signal()) support.push_back(t.feature);
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());

    return ScenarioData{Dataset(std::move(x), std::move(y), Family::gaussian), std::move(mu), std::move(xt),
                        std::move(mut), sigma, std::move(support)};
}

SimResult evaluate_predictions(const Eigen::VectorXd& yhat, const Eigen::VectorXd& test_mu, double ybar_train,
                               const std::vector<bool>& linear_selected, const std::vector<bool>& nonlinear_selected,
                               const std::vector<Eigen::Index>& true_support) {
    if (yhat.size() != test_mu.size()) throw UsageError("prediction and test signal lengths differ");
    if (linear_selected.size() != nonlinear_selected.size())
        throw UsageError("linear and non-linear selection vectors differ in length");
    SimResult r;
    const double num = (yhat - test_mu).squaredNorm();
    const double den = (test_mu.array() - ybar_train).matrix().squaredNorm();
    r.relative_test_error = num / den;
    std::vector<bool> selected(linear_selected.size(), false);
    for (std::size_t j = 0; j < selected.size(); ++j) {
        if (linear_selected[j]) ++r.n_selected_linear;
        if (nonlinear_selected[j]) ++r.n_selected_nonlinear;
        selected[j] = linear_selected[j] || nonlinear_selected[j];
        if (selected[j]) ++r.n_selected_features;
    }
    for (auto j : true_support) {
        if (j < 0 || static_cast<std::size_t>(j) >= selected.size()) throw UsageError("true support index out of range");
        if (selected[static_cast<std::size_t>(j)]) ++r.n_true_recovered;
    }
    return r;
}

SimResult evaluate_fit(const RgamModel& model, const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_mu,
                       double ybar_train, std::size_t lambda_index, const std::vector<Eigen::Index>& true_support) {
    if (test_x.cols() != model.p) throw UsageError("test features do not match the model's p");
    const Eigen::VectorXd yhat = predict_rgam(model, test_x, lambda_index, Scale::response);
    return evaluate_predictions(yhat, test_mu, ybar_train, model.linear_selected(lambda_index),
                                model.nonlinear_selected(lambda_index), true_support);
}

SimResult evaluate_fit(const FittedLinearModel& model, const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_mu,
                       double ybar_train, std::size_t lambda_index, const std::vector<Eigen::Index>& true_support) {
    if (test_x.cols() != model.n_coef()) throw UsageError("test features do not match the model's column count");
    const Eigen::VectorXd yhat = predict_linear(model, test_x, lambda_index, Scale::response);
    std::vector<bool> lin(static_cast<std::size_t>(model.n_coef()));
    for (Eigen::Index j = 0; j < model.n_coef(); ++j)
        lin[static_cast<std::size_t>(j)] = model.beta(static_cast<Eigen::Index>(lambda_index), j) != 0.0;
    return evaluate_predictions(yhat, test_mu, ybar_train, lin, std::vector<bool>(lin.size(), false), true_support);
}

std::string to_string(Method m) {
    switch (m) {
    case Method::null: return "null";
    case Method::lasso: return "lasso";
    case Method::rgam: return "rgam";
    case Method::rgam_sel: return "rgam_sel";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (auto m : kMethods)
        if (to_string(m) == name) return m;
    throw UsageError("unknown method '" + std::string(name) + "' (expected null, lasso, rgam or rgam_sel)");
}

SimResult run_method(Method method, const ScenarioData& data, std::size_t nfolds, std::uint64_t seed,
                     Execution exec) {
    const Dataset& d = data.train;
    const double ybar = d.y().mean();
    SimResult r;
    switch (method) {
    case Method::null: {
        const Eigen::VectorXd yhat = Eigen::VectorXd::Constant(data.test_mu.size(), ybar);
        const std::vector<bool> none(static_cast<std::size_t>(d.p()), false);
        r = evaluate_predictions(yhat, data.test_mu, ybar, none, none, data.true_support);
        break;
    }
    case Method::lasso: {
        const auto model = fit_lasso_path(d);
        PathFit full;
        full.path = model.lambda;
        full.nonzero.resize(model.n_lambda());
        for (std::size_t l = 0; l < model.n_lambda(); ++l) full.nonzero[l].linear = model.nonzero(l);
        const auto cv = cross_validate_path(d, make_lasso_fitter(), full, nfolds, CvMetric::deviance, seed, exec);
        r = evaluate_fit(model, data.test_x, data.test_mu, ybar, cv.lambda_min_index, data.true_support);
        break;
    }
    case Method::rgam:
    case Method::rgam_sel: {
        RgamConfig config;
        config.init_nz = method == Method::rgam ? InitNz::all() : InitNz::none();
        config.seed = seed;
        config.execution = exec;
        const auto model = fit_rgam(d, config);
        PathFit full;
        full.path = model.step3_model.lambda;
        full.nonzero.resize(full.path.size());
        for (std::size_t l = 0; l < full.path.size(); ++l) full.nonzero[l] = model.nonzero(l);
        const auto cv = cross_validate_path(d, make_rgam_fitter(config), full, nfolds, CvMetric::deviance, seed, exec);
        r = evaluate_fit(model, data.test_x, data.test_mu, ybar, cv.lambda_min_index, data.true_support);
        break;
    }
    }
    r.method = to_string(method);
    return r;
}

std::vector<SimResult> run_benchmark(const BenchmarkConfig& config) {
    if (config.scenarios.empty()) throw UsageError("no scenarios requested");
    if (config.methods.empty()) throw UsageError("no methods requested");
    if (config.snrs.empty()) throw UsageError("no snr values requested");
    if (config.replicates < 1) throw UsageError("replicates must be >= 1");
    if (config.nfolds < 2) throw UsageError("nfolds must be >= 2");
    for (double s : config.snrs)
        if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("snr values must be positive");

    struct Cell {
        std::size_t scenario, snr, replicate;
    };
    std::vector<Cell> cells;
    for (std::size_t s = 0; s < config.scenarios.size(); ++s)
        for (std::size_t k = 0; k < config.snrs.size(); ++k)
            for (std::size_t b = 0; b < config.replicates; ++b) cells.push_back({s, k, b});

    const std::size_t n_methods = config.methods.size();
    std::vector<SimResult> flat(cells.size() * n_methods);

    for_each_index(config.execution, cells.size(), [&](std::size_t c) {
        const Cell& cell = cells[c];
        const ScenarioId id = config.scenarios[cell.scenario];
        const double snr = config.snrs[cell.snr];
        // snr enters the key in thousandths so 2 and 2.0 map to the same stream
        const auto snr_key = static_cast<std::uint64_t>(std::llround(snr * 1000.0));
        const std::uint64_t cell_seed =
            derive_seed(config.seed, {static_cast<std::uint64_t>(id), snr_key, cell.replicate});
        ScenarioSpec spec = ScenarioSpec::make(id, snr, cell_seed);
        spec.n_test = config.n_test;
        std::optional<ScenarioData> data;
        std::string data_error;
        try {
            data = generate_scenario(spec);
        } catch (const std::exception& e) {
            data_error = e.what();
        }
        for (std::size_t m = 0; m < n_methods; ++m) {
            SimResult r;
            if (data) {
                try {
                    r = run_method(config.methods[m], *data, config.nfolds, derive_seed(cell_seed, {1}),
                                   Execution::serial);
                } catch (const std::exception& e) {
                    r = SimResult{};
                    r.status = std::string("error: ") + e.what();
                }
            } else {
                r.status = "error: " + data_error;
            }
            if (r.status != "ok") {
                r.relative_test_error = kNaN;
                r.n_selected_features = r.n_selected_linear = r.n_selected_nonlinear = r.n_true_recovered = -1;
            }
            r.scenario = to_string(id);
            r.snr = snr;
            r.method = to_string(config.methods[m]);
            r.replicate = cell.replicate + 1;
            flat[c * n_methods + m] = std::move(r);
        }
    });

    std::vector<SimResult> rows;
    rows.reserve(flat.size());
    for (std::size_t s = 0; s < config.scenarios.size(); ++s)
        for (std::size_t k = 0; k < config.snrs.size(); ++k)
            for (std::size_t m = 0; m < n_methods; ++m)
                for (std::size_t b = 0; b < config.replicates; ++b) {
                    const std::size_t c = (s * config.snrs.size() + k) * config.replicates + b;
                    rows.push_back(flat[c * n_methods + m]);
                }
    return rows;
}

std::string sim_results_csv_header() {
    return "scenario,snr,method,replicate,relative_test_error,n_selected_features,n_selected_linear,"
           "n_selected_nonlinear,n_true_recovered,status";
}

std::string sim_result_csv_row(const SimResult& r) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    std::replace(status.begin(), status.end(), '"', '\'');
    std::ostringstream os;
    os << r.scenario << ',' << format_double(r.snr) << ',' << r.method << ',' << r.replicate << ','
       << (std::isnan(r.relative_test_error) ? std::string("NaN") : format_double(r.relative_test_error)) << ','
       << r.n_selected_features << ',' << r.n_selected_linear << ',' << r.n_selected_nonlinear << ','
       << r.n_true_recovered << ',' << status;
    return os.str();
}

std::string sim_results_csv(const std::vector<SimResult>& rows) {
    std::string out = sim_results_csv_header() + "\n";
    for (const auto& r : rows) out += sim_result_csv_row(r) + "\n";
    return out;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
    if (s == "NaN" || s == "nan") return kNaN;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError("results CSV line " + std::to_string(line_no) + ": non-numeric value '" + s + "'");
    return v;
}

} // namespace

std::vector<SimResult> parse_sim_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("results CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != sim_results_csv_header()) throw DataError("results CSV header does not match the benchmark format");
    std::vector<SimResult> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_commas(line);
        if (f.size() != 10) throw DataError("results CSV line " + std::to_string(line_no) + ": expected 10 fields");
        SimResult r;
        r.scenario = f[0];
        r.snr = parse_number(f[1], line_no);
        r.method = f[2];
        r.replicate = static_cast<std::size_t>(parse_number(f[3], line_no));
        r.relative_test_error = parse_number(f[4], line_no);
        r.n_selected_features = static_cast<Eigen::Index>(parse_number(f[5], line_no));
        r.n_selected_linear = static_cast<Eigen::Index>(parse_number(f[6], line_no));
        r.n_selected_nonlinear = static_cast<Eigen::Index>(parse_number(f[7], line_no));
        r.n_true_recovered = static_cast<Eigen::Index>(parse_number(f[8], line_no));
        r.status = f[9];
        rows.push_back(std::move(r));
    }
    return rows;
}

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::string summarize_results_csv(const std::vector<SimResult>& rows) {
    // Group in first-appearance order.
    using Key = std::tuple<std::string, double, std::string>;
    std::vector<Key> order;
    std::map<Key, std::vector<const SimResult*>> groups;
    for (const auto& r : rows) {
        Key k{r.scenario, r.snr, r.method};
        auto [it, inserted] = groups.try_emplace(k);
        if (inserted) order.push_back(k);
        it->second.push_back(&r);
    }
    std::ostringstream os;
    os << "scenario,snr,method,runs,failed,rte_q1,rte_median,rte_q3,features_median,linear_median,"
          "nonlinear_median,recovered_q1,recovered_median,recovered_q3\n";
    for (const auto& k : order) {
        std::vector<double> rte, feat, lin, nonlin, rec;
        std::size_t failed = 0;
        for (const SimResult* r : groups[k]) {
            if (r->status != "ok") {
                ++failed;
                continue;
            }
            rte.push_back(r->relative_test_error);
            feat.push_back(static_cast<double>(r->n_selected_features));
            lin.push_back(static_cast<double>(r->n_selected_linear));
            nonlin.push_back(static_cast<double>(r->n_selected_nonlinear));
            rec.push_back(static_cast<double>(r->n_true_recovered));
        }
        auto q = [](const std::vector<double>& v, double p) {
            const double x = quantile(v, p);
            return std::isnan(x) ? std::string("NaN") : format_double(x);
        };
        os << std::get<0>(k) << ',' << format_double(std::get<1>(k)) << ',' << std::get<2>(k) << ','
           << groups[k].size() << ',' << failed << ',' << q(rte, 0.25) << ',' << q(rte, 0.5) << ',' << q(rte, 0.75)
           << ',' << q(feat, 0.5) << ',' << q(lin, 0.5) << ',' << q(nonlin, 0.5) << ',' << q(rec, 0.25) << ','
           << q(rec, 0.5) << ',' << q(rec, 0.75) << '\n';
    }
    return os.str();
}

} // namespace rgam
