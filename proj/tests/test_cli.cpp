#include "doctest.h"

#include "cli.hpp"
#include "rgam/dataset.hpp"
#include "rgam/dof.hpp"
#include "rgam/io.hpp"
#include "rgam/model_io.hpp"

#include "test_util.hpp"

#include <json.hpp>
#include <sstream>

using namespace rgam;

namespace {

const std::string kToy = std::string(RGAM_SOURCE_DIR) + "/data/toy.csv";

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(read_file(p)); }

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1, data errors exit 2") {
    test::TempDir dir;
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"fit", "--data", kToy, "--exclude", "mu", "--out", dir.file("m.json").string(), "--df", "1", "--seed", "1"}).code ==
          cli::kExitUsage);
    CHECK(run({"fit", "--data", dir.file("missing.csv").string(), "--out", dir.file("m.json").string(), "--seed", "1"}).code ==
          cli::kExitData);
    CHECK(run({"--version"}).code == cli::kExitOk);
    CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("fit, predict, and the training deviance") {
    test::TempDir dir;
    const auto model = dir.file("m.json"), report = dir.file("r.csv"), pred = dir.file("p.csv");
    const auto r = run({"fit", "--data", kToy, "--exclude", "mu", "--out", model.string(), "--report", report.string(),
                        "--seed", "4"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("gamma=0.6") != std::string::npos);
    CHECK(read_json(model)["config"]["gamma"] == 0.6);
    CHECK(std::filesystem::exists(dir.file("m.manifest.json")));

    const auto p = run({"predict", "--model", model.string(), "--data", kToy, "--exclude", "mu,y", "--lambda-index", "30",
                        "--out", pred.string()});
    REQUIRE(p.code == 0);
    const auto preds = read_csv(pred);
    const auto toy = read_csv(kToy);
    const auto rep = read_csv(report);
    REQUIRE(preds.header == std::vector<std::string>{"prediction"});
    const Eigen::VectorXd y = toy.values.col(6);
    const double dev = (y - preds.values.col(0)).squaredNorm() / static_cast<double>(y.size());
    CHECK(std::abs(dev - rep.values(30, 1)) < 1e-8);

    // column-count mismatch
    CHECK(run({"predict", "--model", model.string(), "--data", kToy, "--exclude", "y", "--lambda-index", "3", "--out",
               pred.string()})
              .code == cli::kExitData);
    // both selectors
    CHECK(run({"predict", "--model", model.string(), "--data", kToy, "--exclude", "mu,y", "--lambda-index", "3", "--lambda",
               "0.1", "--out", pred.string()})
              .code == cli::kExitUsage);
}

TEST_CASE("init_nz none resolves gamma to 0.8") {
    test::TempDir dir;
    const auto model = dir.file("m.json");
    REQUIRE(run({"fit", "--data", kToy, "--exclude", "mu", "--init-nz", "none", "--out", model.string(), "--seed", "2"})
                .code == 0);
    CHECK(read_json(model)["config"]["gamma"] == 0.8);
    const auto manifest = read_json(dir.file("m.manifest.json"));
    CHECK(manifest["config"]["gamma"] == 0.8);
}

TEST_CASE("binomial predictions lie in (0, 1)") {
    test::TempDir dir;
    const auto x = oracle::uniform_matrix(80, 4, 3);
    Eigen::MatrixXd table(80, 5);
    table.leftCols(4) = x;
    const Eigen::VectorXd z = oracle::normal_vector(80, 4);
    for (Eigen::Index i = 0; i < 80; ++i) table(i, 4) = x(i, 0) + x(i, 1) * x(i, 1) - 0.3 + 0.5 * z[i] > 0 ? 1.0 : 0.0;
    write_csv(dir.file("b.csv"), {"a", "b", "c", "d", "y"}, table);
    write_csv(dir.file("bx.csv"), {"a", "b", "c", "d"}, x);
    REQUIRE(run({"fit", "--data", dir.file("b.csv").string(), "--family", "binomial", "--out", dir.file("m.json").string(),
                 "--seed", "5"})
                .code == 0);
    REQUIRE(run({"predict", "--model", dir.file("m.json").string(), "--data", dir.file("bx.csv").string(), "--lambda-index",
                 "60", "--out", dir.file("p.csv").string()})
                .code == 0);
    const auto p = read_csv(dir.file("p.csv")).values;
    CHECK(p.minCoeff() > 0.0);
    CHECK(p.maxCoeff() < 1.0);
}

TEST_CASE("cv writes JSON and tidy CSV, predict can use it") {
    test::TempDir dir;
    const auto cv = dir.file("cv.json"), model = dir.file("m.json");
    REQUIRE(run({"cv", "--data", kToy, "--exclude", "mu", "--k", "5", "--out", cv.string(), "--model-out", model.string(),
                 "--seed", "6"})
                .code == 0);
    CHECK(read_json(cv)["method"] == "rgam");
    CHECK(std::filesystem::exists(dir.file("cv.csv")));
    CHECK(run({"predict", "--model", model.string(), "--data", kToy, "--exclude", "mu,y", "--cv", cv.string(), "--out",
               dir.file("p.csv").string()})
              .code == 0);
}

TEST_CASE("a missing seed is generated and printed") {
    test::TempDir dir;
    const auto r = run({"fit", "--data", kToy, "--exclude", "mu", "--out", dir.file("m.json").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("seed: ") != std::string::npos);
    CHECK(r.out.find("pass --seed") != std::string::npos);
    const auto manifest = read_json(dir.file("m.manifest.json"));
    CHECK(manifest["seed"].is_number_unsigned());
}

TEST_CASE("replay reproduces outputs byte for byte") {
    test::TempDir dir;
    const auto model = dir.file("m.json");
    REQUIRE(run({"fit", "--data", kToy, "--exclude", "mu", "--out", model.string(), "--seed", "9"}).code == 0);
    const auto again = dir.path() / "again";
    REQUIRE(run({"replay", "--manifest", dir.file("m.manifest.json").string(), "--out-dir", again.string()}).code == 0);
    CHECK(read_file(again / "m.json") == read_file(model));
    CHECK(read_file(again / "m.report.csv") == read_file(dir.file("m.report.csv")));
}

TEST_CASE("dof for least squares on the toy data") {
    test::TempDir dir;
    const auto out = dir.file("dof.json");
    REQUIRE(run({"dof", "--data", kToy, "--exclude", "y", "--fitter", "ols", "--sigma", "0.5", "--replicates", "200",
                 "--out", out.string(), "--seed", "12"})
                .code == 0);
    const auto j = read_json(out);
    CHECK(j["format"] == "rgam-dof");
    // same numbers as the library estimator on the same inputs
    const auto toy = read_csv(kToy);
    DofConfig c;
    c.mu = toy.values.col(5);
    c.sigma = 0.5;
    c.replicates = 200;
    c.seed = 12;
    const auto est = estimate_df(ols_fitter(), toy.values.leftCols(5), c);
    CHECK(j["df"].get<double>() == est.df_hat);
    CHECK(j["standard_error"].get<double>() == est.standard_error);
    const auto rows = dir.file("dof.csv");
    for (int i = 0; i < 2; ++i)
        REQUIRE(run({"dof", "--data", kToy, "--exclude", "y", "--fitter", "mean", "--replicates", "20", "--out",
                     out.string(), "--results-csv", rows.string(), "--seed", "1"})
                    .code == 0);
    const std::string table = read_file(rows);
    CHECK(table.rfind("fitter,n,p,sigma,replicates,seed,df,standard_error\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
    CHECK(run({"dof", "--data", kToy, "--exclude", "y", "--fitter", "ridge", "--out", out.string(), "--seed", "1"}).code ==
          cli::kExitUsage);
}

TEST_CASE("bench and summarize") {
    test::TempDir dir;
    const auto csv = dir.file("b.csv");
    REQUIRE(run({"bench", "--scenarios", "linear", "--snr", "2", "--methods", "null,lasso", "--replicates", "1", "--n-test",
                 "100", "--out", csv.string(), "--seed", "3"})
                .code == 0);
    const std::string text = read_file(csv);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(std::filesystem::exists(dir.file("b.summary.csv")));
    REQUIRE(run({"summarize", "--in", csv.string(), "--out", dir.file("s.csv").string()}).code == 0);
    CHECK(read_file(dir.file("s.csv")) == read_file(dir.file("b.summary.csv")));
}

} // TEST_SUITE
