#include "cli.hpp"

#include "rgam/cv.hpp"
#include "rgam/dataset.hpp"
#include "rgam/dof.hpp"
#include "rgam/error.hpp"
#include "rgam/io.hpp"
#include "rgam/model_io.hpp"
#include "rgam/rgam.hpp"
#include "rgam/rng.hpp"
#include "rgam/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace rgam::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- helpers

std::string join(const std::vector<std::string>& items, char sep = ',') {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out.push_back(sep);
        out += items[i];
    }
    return out;
}

std::string num(double v) {
    return format_double(v);
}

std::string absolute(const std::string& p) {
    return fs::absolute(fs::path(p)).lexically_normal().string();
}

fs::path sibling(const std::string& primary, const std::string& suffix) {
    fs::path p(primary);
    return p.parent_path() / (p.stem().string() + suffix);
}

// Features from every column except `response` and `exclude`.
struct Table {
    Eigen::MatrixXd x;
    std::vector<std::string> names;
    std::optional<Eigen::VectorXd> response;
};

Table load_table(const std::string& path, const std::string& response, const std::vector<std::string>& exclude) {
    const auto csv = read_csv(path);
    for (const auto& e : exclude)
        if (std::find(csv.header.begin(), csv.header.end(), e) == csv.header.end())
            throw DataError("excluded column '" + e + "' not found in '" + path + "'");
    Table t;
    std::vector<Eigen::Index> keep;
    for (std::size_t j = 0; j < csv.header.size(); ++j) {
        const auto& name = csv.header[j];
        if (!response.empty() && name == response) {
            t.response = csv.values.col(static_cast<Eigen::Index>(j));
            continue;
        }
        if (std::find(exclude.begin(), exclude.end(), name) != exclude.end()) continue;
        keep.push_back(static_cast<Eigen::Index>(j));
        t.names.push_back(name);
    }
    if (!response.empty() && !t.response) throw DataError("column '" + response + "' not found in '" + path + "'");
    if (keep.empty()) throw DataError("no feature columns left in '" + path + "'");
    t.x.resize(csv.values.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) t.x.col(static_cast<Eigen::Index>(k)) = csv.values.col(keep[k]);
    return t;
}

Dataset load_dataset(const std::string& path, const std::string& response, const std::vector<std::string>& exclude,
                     Family family) {
    auto t = load_table(path, response, exclude);
    return Dataset(std::move(t.x), std::move(*t.response), family, std::move(t.names));
}

// ---------------------------------------------------------------- shared flags

struct Common {
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    bool parallel = false;
    std::string manifest;

    Execution exec() const { return parallel ? Execution::parallel : Execution::serial; }
};

void add_common(CLI::App* app, Common& c, bool seeded) {
    if (seeded)
        c.seed_opt = app->add_option("--seed", c.seed, "Master seed; when absent a seed is generated and printed");
    app->add_flag("--parallel", c.parallel, "Run independent work items on OpenMP threads (results are identical)");
    app->add_option("--manifest", c.manifest, "Manifest path (default: next to the primary output)");
}

void resolve_seed(Common& c, std::ostream& out) {
    if (c.seed_opt && c.seed_opt->count() == 0) {
        std::random_device rd;
        c.seed = (static_cast<std::uint64_t>(rd()) << 32 | rd()) & ((std::uint64_t{1} << 53) - 1);
        out << "seed: " << c.seed << " (generated; pass --seed " << c.seed << " to reproduce)\n";
    }
}

struct RgamFlags {
    double gamma = 0.0;
    CLI::Option* gamma_opt = nullptr;
    double df = 4.0;
    std::string init_nz = "all";
    std::size_t nlambda = 100;
    double lambda_min_ratio = 0.0;
    CLI::Option* lmr_opt = nullptr;
    std::size_t nfolds_step1 = 5;
    std::string step1_rule = "min";
    std::string step3_scaling = "reluctant";
};

void add_rgam_flags(CLI::App* app, RgamFlags& f) {
    f.gamma_opt = app->add_option("--gamma", f.gamma, "Non-linear feature scale in [0,1] (default 0.6; 0.8 with --init-nz none)");
    app->add_option("--df", f.df, "Smoothing-spline degrees of freedom, >= 2")->capture_default_str();
    app->add_option("--init-nz", f.init_nz, "Features with a non-linear term besides the Step-1 active set: all, none, or 1-based list")
        ->capture_default_str();
    app->add_option("--nlambda", f.nlambda, "Lambda path length")->capture_default_str();
    f.lmr_opt = app->add_option("--lambda-min-ratio", f.lambda_min_ratio,
                                "Smallest lambda / lambda_max (default 1e-2 if n < p, else 1e-4)");
    app->add_option("--nfolds-step1", f.nfolds_step1, "Folds for the Step-1 lambda choice")->capture_default_str();
    app->add_option("--step1-rule", f.step1_rule, "Step-1 lambda rule")
        ->check(CLI::IsMember({"min", "1se"}))
        ->capture_default_str();
    app->add_option("--step3-scaling", f.step3_scaling, "Step-3 column scaling")
        ->check(CLI::IsMember({"reluctant", "standardize"}))
        ->capture_default_str();
}

RgamConfig to_config(const RgamFlags& f, std::uint64_t seed, Execution exec) {
    RgamConfig c;
    c.df = f.df;
    c.init_nz = InitNz::parse(f.init_nz);
    if (f.gamma_opt->count()) c.gamma = f.gamma;
    c.nlambda = f.nlambda;
    if (f.lmr_opt->count()) c.lambda_min_ratio = f.lambda_min_ratio;
    c.nfolds_step1 = f.nfolds_step1;
    c.step1_rule = f.step1_rule == "min" ? LambdaRule::min : LambdaRule::one_se;
    c.step3_scaling = f.step3_scaling == "reluctant" ? Step3Scaling::reluctant : Step3Scaling::standardize;
    c.seed = seed;
    c.execution = exec;
    return c;
}

// Fully resolved flags, so a replay does not depend on defaults.
void append_rgam_args(std::vector<std::string>& a, const RgamFlags& f, const RgamConfig& resolved) {
    a.insert(a.end(), {"--gamma", num(resolved.resolved_gamma()), "--df", num(f.df), "--init-nz", f.init_nz,
                       "--nlambda", std::to_string(f.nlambda), "--nfolds-step1", std::to_string(f.nfolds_step1),
                       "--step1-rule", f.step1_rule, "--step3-scaling", f.step3_scaling});
    if (f.lmr_opt->count()) a.insert(a.end(), {"--lambda-min-ratio", num(f.lambda_min_ratio)});
}

// ---------------------------------------------------------------- manifest

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::optional<std::uint64_t> seed;
    json config = json::object();
    std::vector<std::string> output_flags;
    std::vector<std::pair<std::string, std::string>> outputs;
};

void write_manifest(const fs::path& path, const Manifest& m) {
    json outputs = json::object();
    for (const auto& [flag, file] : m.outputs) outputs[flag] = file;
    json j = {{"format", "rgam-manifest"},
              {"schema_version", kModelSchemaVersion},
              {"tool_version", kToolVersion},
              {"command", m.command},
              {"argv", m.argv},
              {"seed", m.seed ? json(*m.seed) : json(nullptr)},
              {"config", m.config},
              {"output_flags", m.output_flags},
              {"outputs", outputs}};
    write_file_atomic(path, dump_json(j) + "\n");
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    Common common;
    RgamFlags rgam;
    std::string data, response = "y", family = "gaussian", out, report;
    std::vector<std::string> exclude;
};

void add_data_flags(CLI::App* app, std::string& data, std::string& response, std::vector<std::string>& exclude) {
    app->add_option("--data", data, "Input CSV with a header row")->required();
    app->add_option("--response", response, "Response column name")->capture_default_str();
    app->add_option("--exclude", exclude, "Columns to ignore (comma list)")->delimiter(',');
}

std::vector<std::string> data_args(const std::string& data, const std::string& response,
                                   const std::vector<std::string>& exclude) {
    std::vector<std::string> a = {"--data", absolute(data), "--response", response};
    if (!exclude.empty()) a.insert(a.end(), {"--exclude", join(exclude)});
    return a;
}

std::string fit_report_csv(const RgamModel& model) {
    std::ostringstream os;
    os << "lambda,deviance,nonzero_linear,nonzero_nonlinear\n";
    const auto& m3 = model.step3_model;
    for (std::size_t k = 0; k < m3.n_lambda(); ++k) {
        const auto nz = model.nonzero(k);
        os << num(m3.lambda[k]) << ',' << num(m3.deviances[static_cast<Eigen::Index>(k)]) << ',' << nz.linear << ','
           << nz.nonlinear << '\n';
    }
    return os.str();
}

int run_fit(FitArgs& a, std::ostream& out) {
    resolve_seed(a.common, out);
    const Dataset d = load_dataset(a.data, a.response, a.exclude, parse_family(a.family));
    const RgamConfig config = to_config(a.rgam, a.common.seed, a.common.exec());
    const RgamModel model = fit_rgam(d, config);

    const std::string report = a.report.empty() ? sibling(a.out, ".report.csv").string() : a.report;
    const std::string manifest = a.common.manifest.empty() ? sibling(a.out, ".manifest.json").string() : a.common.manifest;
    save_model(a.out, model);
    write_file_atomic(report, fit_report_csv(model));

    Manifest m;
    m.command = "fit";
    m.argv = {"fit"};
    auto da = data_args(a.data, a.response, a.exclude);
    m.argv.insert(m.argv.end(), da.begin(), da.end());
    m.argv.insert(m.argv.end(), {"--family", a.family});
    append_rgam_args(m.argv, a.rgam, config);
    m.argv.insert(m.argv.end(), {"--seed", std::to_string(a.common.seed), "--out", absolute(a.out), "--report",
                                 absolute(report), "--manifest", absolute(manifest)});
    m.seed = a.common.seed;
    m.config = to_json(model.config);
    m.output_flags = {"--out", "--report", "--manifest"};
    m.outputs = {{"--out", absolute(a.out)}, {"--report", absolute(report)}};
    write_manifest(manifest, m);

    out << "fitted RGAM: n=" << d.n() << " p=" << d.p() << " family=" << a.family
        << " gamma=" << num(model.config.resolved_gamma()) << " step1 active=" << model.step1_active.size()
        << " spline features=" << model.active_splines().size() << " path length=" << model.step3_model.n_lambda()
        << "\nmodel: " << a.out << "\nreport: " << report << "\nmanifest: " << manifest << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
    Common common;
    std::string model, data, out, scale = "response", cv, cv_rule = "min";
    std::vector<std::string> exclude;
    std::size_t lambda_index = 0;
    CLI::Option* index_opt = nullptr;
    double lambda = 0.0;
    CLI::Option* lambda_opt = nullptr;
};

int run_predict(PredictArgs& a, std::ostream& out, std::ostream& err) {
    const int chosen = static_cast<int>(a.index_opt->count() > 0) + static_cast<int>(a.lambda_opt->count() > 0) +
                       static_cast<int>(!a.cv.empty());
    if (chosen == 0) throw UsageError("choose a model on the path with --lambda-index, --lambda or --cv");
    if (chosen > 1) throw UsageError("--lambda-index, --lambda and --cv are mutually exclusive");

    const RgamModel model = load_model(a.model);
    const Table t = load_table(a.data, "", a.exclude);
    if (t.x.cols() != model.p)
        throw DataError("feature CSV has " + std::to_string(t.x.cols()) + " columns, model expects " +
                        std::to_string(model.p));
    const auto& path = model.step3_model.lambda;

    std::size_t k = 0;
    if (a.index_opt->count()) {
        if (a.lambda_index >= path.size())
            throw UsageError("--lambda-index " + std::to_string(a.lambda_index) + " is outside the path [0, " +
                             std::to_string(path.size() - 1) + "]");
        k = a.lambda_index;
    } else if (a.lambda_opt->count()) {
        if (!(a.lambda >= 0.0)) throw UsageError("--lambda must be >= 0");
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < path.size(); ++i) {
            const double dist = std::abs(path[i] - a.lambda);
            if (dist < best) {
                best = dist;
                k = i;
            }
        }
        if (path[k] != a.lambda)
            err << "warning: lambda " << num(a.lambda) << " is not on the path; using nearest value " << num(path[k])
                << " (index " << k << ")\n";
    } else {
        json j;
        try {
            j = json::parse(read_file(a.cv));
        } catch (const json::parse_error& e) {
            throw DataError("CV file '" + a.cv + "' is not valid JSON: " + e.what());
        }
        CvResult cv;
        try {
            cv = cv_result_from_json(j);
        } catch (const json::exception& e) {
            throw DataError("CV file '" + a.cv + "' is malformed: " + e.what());
        }
        if (cv.lambda.values != path.values)
            throw DataError("CV result was computed on a different lambda path than the model");
        k = a.cv_rule == "min" ? cv.lambda_min_index : cv.lambda_1se_index;
    }

    const Eigen::VectorXd pred = predict_rgam(model, t.x, k, a.scale == "link" ? Scale::link : Scale::response);
    write_csv(a.out, {"prediction"}, pred);

    const std::string manifest =
        a.common.manifest.empty() ? sibling(a.out, ".manifest.json").string() : a.common.manifest;
    Manifest m;
    m.command = "predict";
    m.argv = {"predict", "--model", absolute(a.model), "--data", absolute(a.data), "--scale", a.scale,
              "--lambda-index", std::to_string(k)};
    if (!a.exclude.empty()) m.argv.insert(m.argv.end(), {"--exclude", join(a.exclude)});
    m.argv.insert(m.argv.end(), {"--out", absolute(a.out), "--manifest", absolute(manifest)});
    m.config = {{"lambda_index", k}, {"lambda", path[k]}, {"scale", a.scale}};
    m.output_flags = {"--out", "--manifest"};
    m.outputs = {{"--out", absolute(a.out)}};
    write_manifest(manifest, m);

    out << "predictions: " << a.out << " (" << pred.size() << " rows, lambda index " << k << ", lambda "
        << num(path[k]) << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------- cv

struct CvArgs {
    Common common;
    RgamFlags rgam;
    std::string data, response = "y", family = "gaussian", method = "rgam", metric = "deviance", out, csv, model_out;
    std::vector<std::string> exclude;
    std::size_t k = 5;
};

int run_cv(CvArgs& a, std::ostream& out) {
    resolve_seed(a.common, out);
    const Dataset d = load_dataset(a.data, a.response, a.exclude, parse_family(a.family));
    const RgamConfig config = to_config(a.rgam, a.common.seed, a.common.exec());
    config.validate(d.p());
    const CvMetric metric = parse_metric(a.metric);
    const std::uint64_t fold_seed = derive_seed(a.common.seed, {3});

    CvResult result;
    std::optional<RgamModel> model;
    if (a.method == "rgam") {
        model = fit_rgam(d, config);
        PathFit full;
        full.path = model->step3_model.lambda;
        full.nonzero.resize(full.path.size());
        for (std::size_t l = 0; l < full.path.size(); ++l) full.nonzero[l] = model->nonzero(l);
        result = cross_validate_path(d, make_rgam_fitter(config), full, a.k, metric, fold_seed, a.common.exec());
    } else {
        LassoOptions opts;
        opts.nlambda = config.nlambda;
        opts.lambda_min_ratio = config.lambda_min_ratio;
        result = cross_validate(d, make_lasso_fitter(opts), a.k, metric, fold_seed, a.common.exec());
    }
    result.seed = a.common.seed;

    const std::string csv = a.csv.empty() ? sibling(a.out, ".csv").string() : a.csv;
    const std::string manifest = a.common.manifest.empty() ? sibling(a.out, ".manifest.json").string() : a.common.manifest;
    json j = to_json(result);
    j["method"] = a.method;
    write_file_atomic(a.out, dump_json(j) + "\n");
    write_file_atomic(csv, cv_result_csv(result));
    if (!a.model_out.empty()) {
        if (!model) throw UsageError("--model-out needs --method rgam");
        save_model(a.model_out, *model);
    }

    Manifest m;
    m.command = "cv";
    m.argv = {"cv"};
    auto da = data_args(a.data, a.response, a.exclude);
    m.argv.insert(m.argv.end(), da.begin(), da.end());
    m.argv.insert(m.argv.end(), {"--family", a.family, "--method", a.method, "--metric", a.metric, "--k",
                                 std::to_string(a.k)});
    append_rgam_args(m.argv, a.rgam, config);
    m.argv.insert(m.argv.end(), {"--seed", std::to_string(a.common.seed), "--out", absolute(a.out), "--csv",
                                 absolute(csv), "--manifest", absolute(manifest)});
    m.output_flags = {"--out", "--csv", "--manifest"};
    m.outputs = {{"--out", absolute(a.out)}, {"--csv", absolute(csv)}};
    if (!a.model_out.empty()) {
        m.argv.insert(m.argv.end(), {"--model-out", absolute(a.model_out)});
        m.output_flags.push_back("--model-out");
        m.outputs.push_back({"--model-out", absolute(a.model_out)});
    }
    m.seed = a.common.seed;
    m.config = to_json(config);
    write_manifest(manifest, m);

    out << "cv (" << a.method << ", " << a.k << " folds, " << a.metric << "): lambda.min=" << num(result.lambda[result.lambda_min_index])
        << " (index " << result.lambda_min_index << "), lambda.1se=" << num(result.lambda[result.lambda_1se_index])
        << " (index " << result.lambda_1se_index << ")\nresult: " << a.out << "\ntable: " << csv << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- dof

struct DofArgs {
    Common common;
    RgamFlags rgam;
    std::string data, mu = "mu", fitter = "ols", out, results_csv;
    std::vector<std::string> exclude;
    double sigma = 1.0;
    std::size_t replicates = 100;
};

int run_dof(DofArgs& a, std::ostream& out) {
    resolve_seed(a.common, out);
    const Table t = load_table(a.data, a.mu, a.exclude);
    const RgamConfig base = to_config(a.rgam, a.common.seed, Execution::serial);
    DofConfig cfg;
    cfg.mu = *t.response;
    cfg.sigma = a.sigma;
    cfg.replicates = a.replicates;
    cfg.seed = a.common.seed;
    const auto fitter = make_named_fitter(a.fitter, base);
    const DofEstimate est = estimate_df(fitter, t.x, cfg, a.common.exec());

    json j = {{"format", "rgam-dof"},
              {"schema_version", kModelSchemaVersion},
              {"fitter", a.fitter},
              {"n", t.x.rows()},
              {"p", t.x.cols()},
              {"sigma", a.sigma},
              {"replicates", est.replicates},
              {"seed", est.seed},
              {"df", est.df_hat},
              {"standard_error", est.standard_error}};
    write_file_atomic(a.out, dump_json(j) + "\n");
    if (!a.results_csv.empty())
        append_line(a.results_csv, "fitter,n,p,sigma,replicates,seed,df,standard_error",
                    a.fitter + ',' + std::to_string(t.x.rows()) + ',' + std::to_string(t.x.cols()) + ',' + num(a.sigma) +
                        ',' + std::to_string(est.replicates) + ',' + std::to_string(est.seed) + ',' +
                        format_double(est.df_hat) + ',' + format_double(est.standard_error));

    const std::string manifest = a.common.manifest.empty() ? sibling(a.out, ".manifest.json").string() : a.common.manifest;
    Manifest m;
    m.command = "dof";
    m.argv = {"dof", "--data", absolute(a.data), "--mu", a.mu};
    if (!a.exclude.empty()) m.argv.insert(m.argv.end(), {"--exclude", join(a.exclude)});
    m.argv.insert(m.argv.end(), {"--fitter", a.fitter, "--sigma", num(a.sigma), "--replicates",
                                 std::to_string(a.replicates)});
    // the named fitters override init_nz, which changes the default gamma
    RgamConfig resolved = base;
    if (a.fitter == "rgam") resolved.init_nz = InitNz::all();
    if (a.fitter == "rgam_sel") resolved.init_nz = InitNz::none();
    append_rgam_args(m.argv, a.rgam, resolved);
    m.argv.insert(m.argv.end(), {"--seed", std::to_string(a.common.seed), "--out", absolute(a.out), "--manifest",
                                 absolute(manifest)});
    if (!a.results_csv.empty()) m.argv.insert(m.argv.end(), {"--results-csv", absolute(a.results_csv)});
    m.seed = a.common.seed;
    m.config = {{"fitter", a.fitter}, {"sigma", a.sigma}, {"replicates", a.replicates}, {"rgam", to_json(resolved)}};
    m.output_flags = {"--out", "--manifest", "--results-csv"};
    m.outputs = {{"--out", absolute(a.out)}};
    if (!a.results_csv.empty()) m.outputs.emplace_back("--results-csv", absolute(a.results_csv));
    write_manifest(manifest, m);

    out << "df(" << a.fitter << ") = " << num(est.df_hat) << " (se " << num(est.standard_error) << ", B=" << est.replicates
        << ")\nresult: " << a.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    Common common;
    std::vector<std::string> scenarios = {"linear", "hier", "nonlinear", "nonhier", "mixed"};
    std::vector<double> snrs = {1.0, 2.0, 5.0};
    std::vector<std::string> methods = {"null", "lasso", "rgam", "rgam_sel"};
    std::size_t replicates = 10;
    bool full = false;
    std::size_t nfolds = 5;
    Eigen::Index n_test = 5000;
    std::string out, summary;
};

int run_bench(BenchArgs& a, std::ostream& out) {
    resolve_seed(a.common, out);
    BenchmarkConfig cfg;
    for (const auto& s : a.scenarios) cfg.scenarios.push_back(parse_scenario(s));
    cfg.methods.clear();
    for (const auto& m : a.methods) cfg.methods.push_back(parse_method(m));
    cfg.snrs = a.snrs;
    cfg.replicates = a.full ? 30 : a.replicates;
    cfg.seed = a.common.seed;
    cfg.nfolds = a.nfolds;
    cfg.n_test = a.n_test;
    cfg.execution = a.common.exec();
    const auto rows = run_benchmark(cfg);

    write_file_atomic(a.out, sim_results_csv(rows));
    const std::string summary = a.summary.empty() ? sibling(a.out, ".summary.csv").string() : a.summary;
    const std::string table = summarize_results_csv(rows);
    write_file_atomic(summary, table);

    const std::string manifest = a.common.manifest.empty() ? sibling(a.out, ".manifest.json").string() : a.common.manifest;
    std::vector<std::string> snr_text;
    for (double s : a.snrs) snr_text.push_back(num(s));
    Manifest m;
    m.command = "bench";
    m.argv = {"bench",           "--scenarios", join(a.scenarios), "--snr", join(snr_text), "--methods",
              join(a.methods),   "--replicates", std::to_string(cfg.replicates), "--nfolds",
              std::to_string(a.nfolds), "--n-test", std::to_string(a.n_test), "--seed", std::to_string(a.common.seed),
              "--out",           absolute(a.out), "--summary", absolute(summary), "--manifest", absolute(manifest)};
    m.seed = a.common.seed;
    m.config = {{"scenarios", a.scenarios}, {"snr", a.snrs},       {"methods", a.methods},
                {"replicates", cfg.replicates}, {"nfolds", a.nfolds}, {"n_test", a.n_test}};
    m.output_flags = {"--out", "--summary", "--manifest"};
    m.outputs = {{"--out", absolute(a.out)}, {"--summary", absolute(summary)}};
    write_manifest(manifest, m);

    std::size_t failed = 0;
    for (const auto& r : rows)
        if (r.status != "ok") ++failed;
    out << table << rows.size() << " rows (" << failed << " failed)\nresults: " << a.out << "\nsummary: " << summary
        << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- summarize

struct SummarizeArgs {
    Common common;
    std::string in, out;
};

int run_summarize(SummarizeArgs& a, std::ostream& out) {
    const auto rows = parse_sim_results_csv(read_file(a.in));
    const std::string table = summarize_results_csv(rows);
    write_file_atomic(a.out, table);
    const std::string manifest = a.common.manifest.empty() ? sibling(a.out, ".manifest.json").string() : a.common.manifest;
    Manifest m;
    m.command = "summarize";
    m.argv = {"summarize", "--in", absolute(a.in), "--out", absolute(a.out), "--manifest", absolute(manifest)};
    m.output_flags = {"--out", "--manifest"};
    m.outputs = {{"--out", absolute(a.out)}};
    write_manifest(manifest, m);
    out << table;
    return kExitOk;
}

// ---------------------------------------------------------------- replay

struct ReplayArgs {
    std::string manifest, out_dir;
};

std::vector<std::string> replay_argv(const ReplayArgs& a) {
    json j;
    try {
        j = json::parse(read_file(a.manifest));
    } catch (const json::parse_error& e) {
        throw DataError("manifest '" + a.manifest + "' is not valid JSON: " + e.what());
    }
    if (j.value("format", std::string{}) != "rgam-manifest") throw DataError("not an rgam manifest: " + a.manifest);
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) throw DataError("unsupported manifest schema version");
    auto argv = j.at("argv").get<std::vector<std::string>>();
    if (!a.out_dir.empty()) {
        const auto flags = j.at("output_flags").get<std::vector<std::string>>();
        const std::set<std::string> outputs(flags.begin(), flags.end());
        fs::create_directories(a.out_dir);
        for (std::size_t i = 0; i + 1 < argv.size(); ++i)
            if (outputs.count(argv[i])) argv[i + 1] = (fs::path(a.out_dir) / fs::path(argv[i + 1]).filename()).string();
    }
    return argv;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth);

int run_replay(const ReplayArgs& a, std::ostream& out, std::ostream& err, int depth) {
    if (depth > 0) throw UsageError("a manifest cannot replay another replay");
    const auto argv = replay_argv(a);
    out << "replaying: rgam " << join(argv, ' ') << "\n";
    return dispatch(argv, out, err, depth + 1);
}

// ---------------------------------------------------------------- dispatch

const char* kCsvDocs = R"(Outputs:
  fit      model JSON (format rgam-model), report CSV: lambda,deviance,nonzero_linear,nonzero_nonlinear
  predict  CSV: prediction
  cv       JSON (format rgam-cv), CSV: lambda,mean,se,nonzero_linear,nonzero_nonlinear
  dof      JSON (format rgam-dof): df, standard_error, replicates, seed
           --results-csv appends: fitter,n,p,sigma,replicates,seed,df,standard_error
  bench    CSV: scenario,snr,method,replicate,relative_test_error,n_selected_features,
                n_selected_linear,n_selected_nonlinear,n_true_recovered,status
  summarize CSV: median and quartiles per scenario, snr, method
Every command also writes a manifest JSON that `rgam replay` can re-run.
Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.)";

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
    CLI::App app{"rgam: reluctant generalized additive models"};
    app.footer(kCsvDocs);
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit RGAM and save the model");
    add_data_flags(fit_cmd, fit.data, fit.response, fit.exclude);
    fit_cmd->add_option("--family", fit.family)->check(CLI::IsMember({"gaussian", "binomial", "poisson"}))->capture_default_str();
    add_rgam_flags(fit_cmd, fit.rgam);
    fit_cmd->add_option("--out", fit.out, "Model JSON path")->required();
    fit_cmd->add_option("--report", fit.report, "Per-lambda report CSV (default: <out>.report.csv)");
    add_common(fit_cmd, fit.common, true);

    PredictArgs pred;
    auto* pred_cmd = app.add_subcommand("predict", "Predict from a saved model");
    pred_cmd->add_option("--model", pred.model, "Model JSON")->required();
    pred_cmd->add_option("--data", pred.data, "Feature CSV with the model's p columns")->required();
    pred_cmd->add_option("--exclude", pred.exclude, "Columns to ignore (comma list)")->delimiter(',');
    pred_cmd->add_option("--scale", pred.scale)->check(CLI::IsMember({"link", "response"}))->capture_default_str();
    pred.index_opt = pred_cmd->add_option("--lambda-index", pred.lambda_index, "0-based index on the model's path");
    pred.lambda_opt = pred_cmd->add_option("--lambda", pred.lambda, "Lambda value (nearest path point)");
    pred_cmd->add_option("--cv", pred.cv, "CV result JSON; selects lambda by --cv-rule");
    pred_cmd->add_option("--cv-rule", pred.cv_rule)->check(CLI::IsMember({"min", "1se"}))->capture_default_str();
    pred_cmd->add_option("--out", pred.out, "Predictions CSV")->required();
    add_common(pred_cmd, pred.common, false);

    CvArgs cv;
    auto* cv_cmd = app.add_subcommand("cv", "Cross-validate the lambda path");
    add_data_flags(cv_cmd, cv.data, cv.response, cv.exclude);
    cv_cmd->add_option("--family", cv.family)->check(CLI::IsMember({"gaussian", "binomial", "poisson"}))->capture_default_str();
    cv_cmd->add_option("--method", cv.method)->check(CLI::IsMember({"rgam", "lasso"}))->capture_default_str();
    cv_cmd->add_option("--metric", cv.metric)->check(CLI::IsMember({"deviance", "mse", "auc"}))->capture_default_str();
    cv_cmd->add_option("--k", cv.k, "Number of folds")->capture_default_str();
    add_rgam_flags(cv_cmd, cv.rgam);
    cv_cmd->add_option("--out", cv.out, "CV result JSON")->required();
    cv_cmd->add_option("--csv", cv.csv, "CV table CSV (default: <out>.csv)");
    cv_cmd->add_option("--model-out", cv.model_out, "Also save the full-data model (rgam only)");
    add_common(cv_cmd, cv.common, true);

    DofArgs dof;
    auto* dof_cmd = app.add_subcommand("dof", "Monte Carlo degrees of freedom of a fitting procedure");
    dof_cmd->add_option("--data", dof.data, "CSV with features and the true signal column")->required();
    dof_cmd->add_option("--mu", dof.mu, "True signal column")->capture_default_str();
    dof_cmd->add_option("--exclude", dof.exclude, "Columns to ignore (comma list)")->delimiter(',');
    dof_cmd->add_option("--fitter", dof.fitter)
        ->check(CLI::IsMember({"identity", "mean", "ols", "rgam", "rgam_sel"}))
        ->capture_default_str();
    dof_cmd->add_option("--sigma", dof.sigma, "Noise sd")->capture_default_str();
    dof_cmd->add_option("--replicates", dof.replicates, "Monte Carlo replicates B")->capture_default_str();
    add_rgam_flags(dof_cmd, dof.rgam);
    dof_cmd->add_option("--out", dof.out, "Result JSON")->required();
    dof_cmd->add_option("--results-csv", dof.results_csv, "Append one row per run to this CSV");
    add_common(dof_cmd, dof.common, true);

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Simulation benchmark");
    bench_cmd->add_option("--scenarios", bench.scenarios, "Comma list (mixed_large is off by default)")
        ->delimiter(',')
        ->capture_default_str();
    bench_cmd->add_option("--snr", bench.snrs, "Comma list")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--methods", bench.methods, "Comma list")->delimiter(',')->capture_default_str();
    auto* rep_opt = bench_cmd->add_option("--replicates", bench.replicates, "Replicates per cell")->capture_default_str();
    bench_cmd->add_flag("--full", bench.full, "30 replicates per cell")->excludes(rep_opt);
    bench_cmd->add_option("--nfolds", bench.nfolds, "CV folds")->capture_default_str();
    bench_cmd->add_option("--n-test", bench.n_test, "Test points per replicate")->capture_default_str();
    bench_cmd->add_option("--out", bench.out, "Results CSV")->required();
    bench_cmd->add_option("--summary", bench.summary, "Summary CSV (default: <out>.summary.csv)");
    add_common(bench_cmd, bench.common, true);

    SummarizeArgs summ;
    auto* summ_cmd = app.add_subcommand("summarize", "Median/quartile table of a bench results CSV");
    summ_cmd->add_option("--in", summ.in, "Results CSV")->required();
    summ_cmd->add_option("--out", summ.out, "Summary CSV")->required();
    add_common(summ_cmd, summ.common, false);

    ReplayArgs replay;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run the invocation recorded in a manifest");
    replay_cmd->add_option("--manifest", replay.manifest, "Manifest JSON")->required();
    replay_cmd->add_option("--out-dir", replay.out_dir, "Write outputs here instead of the recorded paths");

    std::vector<std::string> full = {"rgam"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : full) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*fit_cmd) return run_fit(fit, out);
    if (*pred_cmd) return run_predict(pred, out, err);
    if (*cv_cmd) return run_cv(cv, out);
    if (*dof_cmd) return run_dof(dof, out);
    if (*bench_cmd) return run_bench(bench, out);
    if (*summ_cmd) return run_summarize(summ, out);
    if (*replay_cmd) return run_replay(replay, out, err, depth);
    throw UsageError("no subcommand");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err, 0);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    }
}

} // namespace rgam::cli
