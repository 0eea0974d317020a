#include "doctest.h"

#include "rgam/cv.hpp"
#include "rgam/error.hpp"

#include "test_util.hpp"

#include <cmath>
#include <numeric>

using namespace rgam;

TEST_SUITE("cross-validation") {

TEST_CASE("fold assignment") {
    const Eigen::VectorXd y = oracle::normal_vector(23, 1);
    const auto folds = assign_folds(y, Family::gaussian, 5, 99);
    REQUIRE(folds.size() == 23);
    std::vector<int> sizes(5, 0);
    for (int f : folds) {
        REQUIRE(f >= 0);
        REQUIRE(f < 5);
        ++sizes[static_cast<std::size_t>(f)];
    }
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
    CHECK(assign_folds(y, Family::gaussian, 5, 99) == folds);
    CHECK(assign_folds(y, Family::gaussian, 5, 100) != folds);
    CHECK_THROWS_AS(assign_folds(y, Family::gaussian, 1, 1), UsageError);
    CHECK_THROWS_AS(assign_folds(y, Family::gaussian, 24, 1), UsageError);
}

TEST_CASE("binomial folds are stratified") {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(30);
    y.head(10).setOnes();
    const auto folds = assign_folds(y, Family::binomial, 5, 3);
    for (int f = 0; f < 5; ++f) {
        int pos = 0;
        for (Eigen::Index i = 0; i < 30; ++i)
            if (folds[static_cast<std::size_t>(i)] == f && y[i] == 1.0) ++pos;
        CHECK(pos == 2);
    }
}

TEST_CASE("auc") {
    CHECK(auc(Eigen::Vector2d(0.1, 0.9), Eigen::Vector2d(0, 1)) == 1.0);
    CHECK(auc(Eigen::Vector4d(1, 1, 1, 1), Eigen::Vector4d(0, 1, 0, 1)) == 0.5);
    CHECK(auc(Eigen::Vector4d(3, 1, 2, 0), Eigen::Vector4d(1, 0, 1, 0)) == 1.0);
    CHECK(auc(Eigen::Vector4d(3, 1, 2, 0), Eigen::Vector4d(0, 1, 0, 1)) == 0.0);
    const Eigen::VectorXd s = oracle::normal_vector(40, 5);
    Eigen::VectorXd lab(40);
    for (Eigen::Index i = 0; i < 40; ++i) lab[i] = (i % 3 == 0) ? 1.0 : 0.0;
    CHECK(auc(s, lab) == auc(Eigen::VectorXd(s.array().exp() * 3.0 + 1.0), lab));
    CHECK_THROWS_AS(auc(s, Eigen::VectorXd::Zero(40)), DataError);
}

TEST_CASE("binomial deviance") {
    const Eigen::Vector4d y(0, 1, 1, 0);
    CHECK(binomial_deviance(y, y) < 1e-8);
    CHECK(binomial_deviance(Eigen::Vector4d::Constant(0.5), y) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    const Eigen::MatrixXd x = oracle::uniform_matrix(50, 3, 7);
    Eigen::VectorXd yy(50);
    for (Eigen::Index i = 0; i < 50; ++i) yy[i] = x(i, 0) + 0.3 * x(i, 1) > 0.1 ? 1.0 : 0.0;
    const Dataset d(x, yy, Family::binomial);
    const auto m = fit_lasso_path(d);
    CHECK(std::abs(binomial_deviance(Eigen::VectorXd::Constant(50, yy.mean()), yy) - m.null_deviance) < 1e-8);
}

TEST_CASE("null fitter: mse equals the variance of y, flat in lambda") {
    const Dataset d = oracle::gaussian_instance(60, 10, 11);
    const auto r = cross_validate(d, make_null_fitter(), 5, CvMetric::mse, 17);
    const double var = (d.y().array() - d.y().mean()).square().mean();
    CHECK((r.mean_metric.array() == r.mean_metric[0]).all());
    CHECK(r.mean_metric[0] == doctest::Approx(var).epsilon(0.1));
}

TEST_CASE("leave-one-out matches a brute-force loop") {
    const Dataset d = oracle::gaussian_instance(20, 8, 21);
    const auto r = cross_validate(d, make_lasso_fitter(), 20, CvMetric::mse, 5);
    const auto full = fit_lasso_path(d);
    Eigen::VectorXd brute = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(full.n_lambda()));
    for (Eigen::Index i = 0; i < 20; ++i) {
        std::vector<Eigen::Index> keep;
        for (Eigen::Index j = 0; j < 20; ++j)
            if (j != i) keep.push_back(j);
        LassoOptions o;
        o.path = full.lambda;
        const auto m = fit_lasso_path(d.subset(keep), o);
        const Eigen::MatrixXd pred = predict_linear_path(m, d.x().row(i));
        brute += (pred.row(0).transpose().array() - d.y()[i]).square().matrix();
    }
    brute /= 20.0;
    CHECK((r.mean_metric - brute).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lambda indices") {
    const Dataset d = oracle::gaussian_instance(80, 30, 31);
    const auto r = cross_validate(d, make_lasso_fitter(), 5, CvMetric::deviance, 7);
    Eigen::Index best = 0;
    r.mean_metric.minCoeff(&best);
    CHECK(static_cast<Eigen::Index>(r.lambda_min_index) == best);
    CHECK(r.lambda_1se_index <= r.lambda_min_index);
    const double bound = r.mean_metric[best] + r.se_metric[best];
    CHECK(r.mean_metric[static_cast<Eigen::Index>(r.lambda_1se_index)] <= bound);
    for (std::size_t l = 0; l < r.lambda_1se_index; ++l) CHECK(r.mean_metric[static_cast<Eigen::Index>(l)] > bound);
    CHECK(r.nonzero_counts.size() == r.lambda.size());
    CHECK(r.nonzero_counts[0].linear == 0);
    // lambda_max sits near the null-model metric
    const double var = (d.y().array() - d.y().mean()).square().mean();
    CHECK(std::abs(r.mean_metric[0] - var) < 0.05 * var + 0.1);
}

TEST_CASE("separable binomial data reaches auc 1") {
    const Eigen::MatrixXd x = oracle::uniform_matrix(40, 3, 41);
    Eigen::VectorXd y(40);
    for (Eigen::Index i = 0; i < 40; ++i) y[i] = x(i, 0) > 0.0 ? 1.0 : 0.0;
    const Dataset d(x, y, Family::binomial);
    LassoOptions o;
    o.lambda_min_ratio = 0.05;
    o.nlambda = 20;
    const auto r = cross_validate(d, make_lasso_fitter(o), 4, CvMetric::auc, 3);
    CHECK(r.mean_metric[static_cast<Eigen::Index>(r.lambda_min_index)] == 1.0);
}

TEST_CASE("metric/family checks") {
    const Dataset d = oracle::gaussian_instance(30, 4, 51);
    CHECK_THROWS_AS(cross_validate(d, make_lasso_fitter(), 5, CvMetric::auc, 1), UsageError);
    CHECK(parse_metric("auc") == CvMetric::auc);
    CHECK_THROWS_AS(parse_metric("mae"), UsageError);
}

TEST_CASE("tidy csv") {
    const Dataset d = oracle::gaussian_instance(30, 4, 61);
    const auto r = cross_validate(d, make_lasso_fitter({.nlambda = 5}), 3, CvMetric::mse, 2);
    const std::string csv = cv_result_csv(r);
    CHECK(csv.rfind("lambda,mean,se,nonzero_linear,nonzero_nonlinear\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

} // TEST_SUITE
