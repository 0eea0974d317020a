#include "doctest.h"

#include "rgam/cv.hpp"
#include "rgam/model_io.hpp"
#include "rgam/parallel.hpp"
#include "rgam/rgam.hpp"

#include "test_util.hpp"

#include <omp.h>

using namespace rgam;

// Parallel kernels must match their serial reference exactly.
TEST_SUITE("parallel") {

TEST_CASE("for_each_index rethrows the lowest failing index") {
    omp_set_num_threads(4);
    for (auto exec : {Execution::serial, Execution::parallel}) {
        try {
            for_each_index(exec, 50, [](std::size_t i) {
                if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
            });
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "7");
        }
    }
}

TEST_CASE("RGAM fit: serial == parallel") {
    omp_set_num_threads(4);
    const Eigen::MatrixXd x = oracle::uniform_matrix(80, 12, 3);
    Eigen::VectorXd y = oracle::normal_vector(80, 4, 0.5);
    y += x.col(0) + (3.0 * x.col(1).array().square() - 1.0).matrix();
    const Dataset d(x, y, Family::gaussian);
    RgamConfig c;
    c.seed = 8;
    const auto serial = dump_json(to_json(fit_rgam(d, c)));
    c.execution = Execution::parallel;
    const auto parallel = fit_rgam(d, c);
    auto j = to_json(parallel);
    CHECK(dump_json(j) == serial);
}

TEST_CASE("cross-validation: serial == parallel") {
    omp_set_num_threads(4);
    const Dataset d = oracle::gaussian_instance(60, 20, 5);
    const auto s = cross_validate(d, make_lasso_fitter(), 5, CvMetric::deviance, 2, Execution::serial);
    const auto p = cross_validate(d, make_lasso_fitter(), 5, CvMetric::deviance, 2, Execution::parallel);
    CHECK(s.mean_metric == p.mean_metric);
    CHECK(s.se_metric == p.se_metric);
    CHECK(s.lambda_min_index == p.lambda_min_index);
}

} // TEST_SUITE
