#include "doctest.h"

#include "rgam/dataset.hpp"
#include "rgam/error.hpp"
#include "rgam/family.hpp"
#include "rgam/io.hpp"
#include "rgam/rng.hpp"

#include "test_util.hpp"

#include <cmath>
#include <filesystem>
#include <set>

using namespace rgam;

TEST_SUITE("core-data") {

TEST_CASE("link and inverse link are mutual inverses") {
    for (Family f : {Family::gaussian, Family::binomial, Family::poisson}) {
        for (double eta : {-5.0, -1.3, 0.0, 0.7, 4.0}) CHECK(link(f, inverse_link(f, eta)) == doctest::Approx(eta).epsilon(1e-12));
    }
    CHECK(inverse_link(Family::binomial, 0.0) == 0.5);
    CHECK(parse_family("poisson") == Family::poisson);
    CHECK_THROWS_AS(parse_family("cox"), UsageError);
}

TEST_CASE("unit deviances") {
    CHECK(unit_deviance(Family::gaussian, 3.0, 1.0) == doctest::Approx(4.0));
    CHECK(unit_deviance(Family::poisson, 0.0, 2.0) == doctest::Approx(4.0));
    CHECK(unit_deviance(Family::poisson, 2.0, 2.0) == doctest::Approx(0.0));
    CHECK(unit_deviance(Family::binomial, 1.0, 0.5) == doctest::Approx(2.0 * std::log(2.0)));
    // clamped, so finite at the boundary
    CHECK(std::isfinite(unit_deviance(Family::binomial, 1.0, 0.0)));
}

TEST_CASE("dataset validation") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    CHECK_THROWS_AS(Dataset(x, Eigen::Vector3d(0, 1, 2), Family::binomial), DataError);
    CHECK_THROWS_AS(Dataset(x, Eigen::Vector3d(0, 0.5, 1), Family::binomial), DataError);
    CHECK_THROWS_AS(Dataset(x, Eigen::Vector3d(0, 1.5, 1), Family::poisson), DataError);
    CHECK_THROWS_AS(Dataset(x, Eigen::Vector3d(0, -1, 1), Family::poisson), DataError);
    CHECK_THROWS_AS(Dataset(x.topRows(1), Eigen::VectorXd::Ones(1), Family::gaussian), DataError);
    Eigen::MatrixXd bad = x;
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(Dataset(bad, Eigen::Vector3d(0, 1, 2), Family::gaussian), DataError);
    const Dataset d(x, Eigen::Vector3d(0, 1, 1), Family::binomial);
    CHECK(d.column_names() == std::vector<std::string>{"x1", "x2"});
    const std::vector<Eigen::Index> rows = {2, 0};
    const Dataset s = d.subset(rows);
    CHECK(s.n() == 2);
    CHECK(s.x()(0, 0) == 5.0);
    CHECK(s.y()[1] == 0.0);
}

TEST_CASE("sample_sd uses the population convention") {
    CHECK(sample_sd(Eigen::Vector3d(1, 2, 3)) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
    CHECK(sample_sd(Eigen::Vector3d(4, 4, 4)) == 0.0);
    CHECK(sample_sd(Eigen::Vector2d(-1, 1)) == doctest::Approx(1.0));
    const Eigen::VectorXd v = Eigen::Vector4d(0.3, -2.0, 7.5, 1.25);
    CHECK(std::abs(sample_sd(Eigen::VectorXd(-3.5 * v)) - 3.5 * sample_sd(v)) < 1e-12);
}

TEST_CASE("standardize") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 5, 2, 5, 3, 5;
    const Dataset d(x, Eigen::Vector3d(1, 2, 4), Family::gaussian);
    const auto s = standardize(d);
    CHECK(s.x(0, 0) == doctest::Approx(-1.2247449).epsilon(1e-7));
    CHECK(s.x(1, 0) == doctest::Approx(0.0));
    CHECK(s.x(2, 0) == doctest::Approx(1.2247449).epsilon(1e-7));
    CHECK(s.scaling.column_means[0] == doctest::Approx(2.0));
    CHECK(s.scaling.column_sds[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(s.scaling.zero_variance[1]);
    CHECK(!s.scaling.zero_variance[0]);
    CHECK(s.x.col(1).isZero());
    CHECK(s.scaling.y_mean == doctest::Approx(7.0 / 3.0));

    // restore recovers the input; idempotent on standardized data
    const Eigen::MatrixXd big = oracle::uniform_matrix(40, 6, 3, -4.0, 9.0);
    const Dataset db(big, Eigen::VectorXd::Zero(40), Family::gaussian);
    const auto sb = standardize(db);
    for (Eigen::Index j = 0; j < 6; ++j) {
        CHECK(std::abs(sb.x.col(j).mean()) < 1e-12);
        CHECK(std::abs(sample_sd(Eigen::VectorXd(sb.x.col(j))) - 1.0) < 1e-10);
    }
    CHECK((sb.scaling.restore(sb.x) - big).cwiseAbs().maxCoeff() < 1e-10);
    const auto again = standardize(Dataset(sb.x, Eigen::VectorXd::Zero(40), Family::gaussian));
    CHECK((again.x - sb.x).cwiseAbs().maxCoeff() < 1e-10);

    Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(3, 2, 5.0);
    CHECK_THROWS_AS(standardize(Dataset(constant, Eigen::Vector3d(1, 2, 3), Family::gaussian)), DataError);
}

TEST_CASE("csv ingestion") {
    test::TempDir dir;
    const auto path = dir.file("three.csv");
    write_file_atomic(path, "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
    const Dataset d = load_csv(path, "y", Family::gaussian);
    CHECK(d.n() == 3);
    CHECK(d.p() == 2);
    CHECK(d.column_names() == std::vector<std::string>{"a", "b"});
    CHECK(d.y()[2] == 9.0);
    CHECK(load_csv(path, "1", Family::gaussian).column_names() == std::vector<std::string>{"b", "y"});

    write_file_atomic(path, "a,b,y\n1,2,3\n4,NA,6\n");
    try {
        (void)load_csv(path, "y", Family::gaussian);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("'NA'") != std::string::npos);
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("'b'") != std::string::npos);
    }

    write_file_atomic(path, "a,y\n1,0\n2,0.5\n3,1\n");
    CHECK_THROWS_AS(load_csv(path, "y", Family::binomial), DataError);
    CHECK_THROWS_AS(load_csv(path, "z", Family::gaussian), DataError);
    CHECK_THROWS_AS(load_csv(dir.file("missing.csv"), "y", Family::gaussian), DataError);

    write_file_atomic(path, "\"a, quoted\",y\n1,2\n3,4\n");
    CHECK(load_csv(path, "y", Family::gaussian).column_names()[0] == "a, quoted");
}

TEST_CASE("csv round trip is bit-identical") {
    test::TempDir dir;
    Eigen::MatrixXd x = oracle::uniform_matrix(25, 4, 11, -1e3, 1e3);
    x(0, 0) = 1.0 / 3.0;
    x(1, 1) = 5e-324;
    x(2, 2) = -0.1;
    const Dataset d(x, oracle::normal_vector(25, 12), Family::gaussian);
    write_dataset_csv(dir.file("a.csv"), d);
    const Dataset back = load_csv(dir.file("a.csv"), "y", Family::gaussian);
    CHECK((back.x().array() == d.x().array()).all());
    CHECK((back.y().array() == d.y().array()).all());
    write_dataset_csv(dir.file("b.csv"), back);
    CHECK(read_file(dir.file("a.csv")) == read_file(dir.file("b.csv")));
}

TEST_CASE("derive_seed gives distinct, stable streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t b = 0; b < 1000; ++b) seen.insert(derive_seed(42, {b}));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(42, {3}) == derive_seed(42, {3}));
    CHECK(derive_seed(42, {3}) != derive_seed(43, {3}));
    CHECK(derive_seed(42, {1, 2}) != derive_seed(42, {2, 1}));
}

TEST_CASE("atomic write leaves no temp file") {
    test::TempDir dir;
    const auto p = dir.file("sub/out.txt");
    write_file_atomic(p, "hello\n");
    CHECK(read_file(p) == "hello\n");
    CHECK(!std::filesystem::exists(p.string() + ".tmp"));
}

} // TEST_SUITE
