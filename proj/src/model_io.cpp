#include "rgam/model_io.hpp"

#include "rgam/error.hpp"
#include "rgam/io.hpp"

#include <cmath>
#include <limits>

namespace rgam {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd to_vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_rows(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
    return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto& r = rows[static_cast<size_t>(i)];
        if (static_cast<Eigen::Index>(r.size()) != cols) throw DataError("model file: ragged coefficient matrix");
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r[static_cast<size_t>(j)].get<double>();
    }
    return m;
}

// JSON has no infinity; +inf is stored as null.
json finite_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double null_as_inf(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

} // namespace

json to_json(const LambdaPath& path) {
    return {{"values", path.values}, {"lambda_max", path.lambda_max}, {"min_ratio", path.min_ratio}};
}

LambdaPath lambda_path_from_json(const json& j) {
    LambdaPath path;
    path.values = j.at("values").get<std::vector<double>>();
    path.lambda_max = j.at("lambda_max").get<double>();
    path.min_ratio = j.at("min_ratio").get<double>();
    return path;
}

json to_json(const FittedLinearModel& model) {
    return {{"family", to_string(model.family)},
            {"lambda", to_json(model.lambda)},
            {"n_coef", model.n_coef()},
            {"intercepts", vec(model.intercepts)},
            {"beta", matrix_rows(model.beta)},
            {"null_deviance", model.null_deviance},
            {"deviances", vec(model.deviances)},
            {"masked", model.masked},
            {"center", vec(model.center)},
            {"scale", vec(model.scale)}};
}

FittedLinearModel linear_model_from_json(const json& j) {
    FittedLinearModel m;
    m.family = parse_family(j.at("family").get<std::string>());
    m.lambda = lambda_path_from_json(j.at("lambda"));
    const auto q = j.at("n_coef").get<Eigen::Index>();
    m.intercepts = to_vec(j.at("intercepts"));
    m.beta = matrix_from_rows(j.at("beta"), q);
    m.null_deviance = j.at("null_deviance").get<double>();
    m.deviances = to_vec(j.at("deviances"));
    m.masked = j.at("masked").get<std::vector<bool>>();
    m.center = to_vec(j.at("center"));
    m.scale = to_vec(j.at("scale"));
    if (m.beta.rows() != static_cast<Eigen::Index>(m.lambda.size()) ||
        m.intercepts.size() != static_cast<Eigen::Index>(m.lambda.size()))
        throw DataError("model file: coefficient rows do not match the lambda path");
    return m;
}

json to_json(const SmoothingSplineFit& fit) {
    return {{"knots", fit.knots},
            {"values", fit.values},
            {"second_derivs", fit.second_derivs},
            {"smoothing_parameter", finite_or_null(fit.smoothing_parameter)},
            {"effective_df", fit.effective_df}};
}

SmoothingSplineFit spline_from_json(const json& j) {
    SmoothingSplineFit fit;
    fit.knots = j.at("knots").get<std::vector<double>>();
    fit.values = j.at("values").get<std::vector<double>>();
    fit.second_derivs = j.at("second_derivs").get<std::vector<double>>();
    fit.smoothing_parameter = null_as_inf(j.at("smoothing_parameter"));
    fit.effective_df = j.at("effective_df").get<double>();
    if (fit.values.size() != fit.knots.size() || fit.second_derivs.size() != fit.knots.size())
        throw DataError("model file: spline arrays differ in length");
    return fit;
}

json to_json(const RgamConfig& c) {
    json j = {{"gamma", c.resolved_gamma()},
              {"df", c.df},
              {"init_nz", c.init_nz.to_string()},
              {"nfolds_step1", c.nfolds_step1},
              {"nlambda", c.nlambda},
              {"seed", c.seed},
              {"step1_rule", c.step1_rule == LambdaRule::min ? "min" : "1se"},
              {"step3_scaling", c.step3_scaling == Step3Scaling::reluctant ? "reluctant" : "standardize"}};
    j["lambda_min_ratio"] = c.lambda_min_ratio ? json(*c.lambda_min_ratio) : json(nullptr);
    j["step1_lambda"] = c.step1_lambda ? json(*c.step1_lambda) : json(nullptr);
    return j;
}

RgamConfig config_from_json(const json& j) {
    RgamConfig c;
    c.gamma = j.at("gamma").get<double>();
    c.df = j.at("df").get<double>();
    c.init_nz = InitNz::parse(j.at("init_nz").get<std::string>());
    c.nfolds_step1 = j.at("nfolds_step1").get<std::size_t>();
    c.nlambda = j.at("nlambda").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.step1_rule = j.at("step1_rule").get<std::string>() == "min" ? LambdaRule::min : LambdaRule::one_se;
    c.step3_scaling = j.at("step3_scaling").get<std::string>() == "reluctant" ? Step3Scaling::reluctant
                                                                              : Step3Scaling::standardize;
    if (!j.at("lambda_min_ratio").is_null()) c.lambda_min_ratio = j.at("lambda_min_ratio").get<double>();
    if (!j.at("step1_lambda").is_null()) c.step1_lambda = j.at("step1_lambda").get<double>();
    return c;
}

json to_json(const RgamModel& model) {
    json bank = json::array();
    for (const auto& sf : model.spline_bank)
        bank.push_back({{"feature", sf.feature_index},
                        {"active", sf.active},
                        {"scale_factor", sf.scale_factor},
                        {"spline", to_json(sf.spline)}});
    return {{"format", kModelFormat},
            {"schema_version", kModelSchemaVersion},
            {"tool_version", kToolVersion},
            {"family", to_string(model.family)},
            {"p", model.p},
            {"config", to_json(model.config)},
            {"mean_feature_sd", model.mean_feature_sd},
            {"pure_lasso", model.pure_lasso},
            {"step1",
             {{"lambda_index", model.step1_lambda_index},
              {"lambda", model.step1_lambda},
              {"active", model.step1_active},
              {"model", to_json(model.step1_model)}}},
            {"residual", vec(model.residual)},
            {"spline_bank", bank},
            {"step3", to_json(model.step3_model)}};
}

RgamModel model_from_json(const json& j) {
    if (!j.is_object() || j.value("format", std::string{}) != kModelFormat)
        throw DataError("not an rgam model file");
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
        throw DataError("model schema version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kModelSchemaVersion) + ")");
    RgamModel m;
    m.family = parse_family(j.at("family").get<std::string>());
    m.p = j.at("p").get<Eigen::Index>();
    m.config = config_from_json(j.at("config"));
    m.mean_feature_sd = j.at("mean_feature_sd").get<double>();
    m.pure_lasso = j.at("pure_lasso").get<bool>();
    const auto& s1 = j.at("step1");
    m.step1_lambda_index = s1.at("lambda_index").get<std::size_t>();
    m.step1_lambda = s1.at("lambda").get<double>();
    m.step1_active = s1.at("active").get<std::vector<Eigen::Index>>();
    m.step1_model = linear_model_from_json(s1.at("model"));
    m.residual = to_vec(j.at("residual"));
    for (const auto& b : j.at("spline_bank")) {
        SplineFeature sf;
        sf.feature_index = b.at("feature").get<Eigen::Index>();
        sf.active = b.at("active").get<bool>();
        sf.scale_factor = b.at("scale_factor").get<double>();
        sf.spline = spline_from_json(b.at("spline"));
        if (sf.feature_index < 0 || sf.feature_index >= m.p) throw DataError("model file: spline feature out of range");
        m.spline_bank.push_back(std::move(sf));
    }
    m.step3_model = linear_model_from_json(j.at("step3"));
    if (m.step3_model.n_coef() != m.p + static_cast<Eigen::Index>(m.active_splines().size()))
        throw DataError("model file: step-3 column count does not match p + active splines");
    return m;
}

json to_json(const CvResult& r) {
    json nz = json::array();
    for (const auto& c : r.nonzero_counts) nz.push_back({c.linear, c.nonlinear});
    return {{"format", "rgam-cv"},
            {"schema_version", kModelSchemaVersion},
            {"metric", to_string(r.metric)},
            {"seed", r.seed},
            {"lambda", to_json(r.lambda)},
            {"mean", vec(r.mean_metric)},
            {"se", vec(r.se_metric)},
            {"lambda_min_index", r.lambda_min_index},
            {"lambda_1se_index", r.lambda_1se_index},
            {"lambda_min", r.lambda[r.lambda_min_index]},
            {"lambda_1se", r.lambda[r.lambda_1se_index]},
            {"fold_assignments", r.fold_assignments},
            {"nonzero", nz}};
}

CvResult cv_result_from_json(const json& j) {
    if (j.value("format", std::string{}) != "rgam-cv") throw DataError("not an rgam CV result file");
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) throw DataError("unsupported CV schema version");
    CvResult r;
    r.metric = parse_metric(j.at("metric").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.lambda = lambda_path_from_json(j.at("lambda"));
    r.mean_metric = to_vec(j.at("mean"));
    r.se_metric = to_vec(j.at("se"));
    r.lambda_min_index = j.at("lambda_min_index").get<std::size_t>();
    r.lambda_1se_index = j.at("lambda_1se_index").get<std::size_t>();
    r.fold_assignments = j.at("fold_assignments").get<std::vector<int>>();
    for (const auto& c : j.at("nonzero")) r.nonzero_counts.push_back({c.at(0).get<Eigen::Index>(), c.at(1).get<Eigen::Index>()});
    return r;
}

std::string dump_json(const json& j) {
    return j.dump(1);
}

void save_model(const std::filesystem::path& path, const RgamModel& model) {
    write_file_atomic(path, dump_json(to_json(model)) + "\n");
}

RgamModel load_model(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError("model file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const json::exception& e) {
        throw DataError("model file '" + path.string() + "' is malformed: " + e.what());
    }
}

} // namespace rgam
