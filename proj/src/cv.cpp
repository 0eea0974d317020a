#include "rgam/cv.hpp"

#include "rgam/error.hpp"
#include "rgam/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rgam {

std::string to_string(CvMetric metric) {
    switch (metric) {
    case CvMetric::deviance: return "deviance";
    case CvMetric::mse: return "mse";
    case CvMetric::auc: return "auc";
    }
    return "unknown";
}

CvMetric parse_metric(std::string_view name) {
    if (name == "deviance") return CvMetric::deviance;
    if (name == "mse") return CvMetric::mse;
    if (name == "auc") return CvMetric::auc;
    throw UsageError("unknown metric '" + std::string(name) + "' (expected deviance, mse or auc)");
}

std::vector<int> assign_folds(const Eigen::VectorXd& y, Family family, std::size_t k, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(y.size());
    if (k < 2 || k > n) throw UsageError("fold count must lie in [2, n]");
    Rng rng(seed);

    std::vector<std::size_t> order;
    order.reserve(n);
    if (family == Family::binomial) {
        std::vector<std::size_t> zeros, ones;
        for (std::size_t i = 0; i < n; ++i) (y[static_cast<Eigen::Index>(i)] == 1.0 ? ones : zeros).push_back(i);
        std::shuffle(zeros.begin(), zeros.end(), rng);
        std::shuffle(ones.begin(), ones.end(), rng);
        order.insert(order.end(), zeros.begin(), zeros.end());
        order.insert(order.end(), ones.begin(), ones.end());
    } else {
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<int> folds(n);
    for (std::size_t pos = 0; pos < n; ++pos) folds[order[pos]] = static_cast<int>(pos % k);
    return folds;
}

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    if (scores.size() != labels.size()) throw UsageError("auc: scores and labels differ in length");
    const auto n = static_cast<std::size_t>(scores.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)];
    });

    // Mann-Whitney: sum of mid-ranks of the positives
    double rank_sum = 0.0;
    double n_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        const double s = scores[static_cast<Eigen::Index>(order[i])];
        while (j < n && scores[static_cast<Eigen::Index>(order[j])] == s) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            const double lab = labels[static_cast<Eigen::Index>(order[t])];
            if (lab != 0.0 && lab != 1.0) throw UsageError("auc labels must be 0 or 1");
            if (lab == 1.0) {
                rank_sum += mid_rank;
                n_pos += 1.0;
            }
        }
        i = j;
    }
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) throw DataError("auc needs both classes present");
    return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double binomial_deviance(const Eigen::VectorXd& prob, const Eigen::VectorXd& labels) {
    return mean_deviance(Family::binomial, labels, prob);
}

double score_predictions(CvMetric metric, Family family, const Eigen::VectorXd& y, const Eigen::VectorXd& pred) {
    switch (metric) {
    case CvMetric::deviance: return mean_deviance(family, y, pred);
    case CvMetric::mse: return (y - pred).squaredNorm() / static_cast<double>(y.size());
    case CvMetric::auc: return auc(pred, y);
    }
    return 0.0;
}

CvResult cross_validate(const Dataset& d, const PathFitter& fitter, std::size_t k, CvMetric metric, std::uint64_t seed,
                        Execution exec) {
    return cross_validate_path(d, fitter, fitter.fit_full(d), k, metric, seed, exec);
}

CvResult cross_validate_path(const Dataset& d, const PathFitter& fitter, const PathFit& full, std::size_t k,
                             CvMetric metric, std::uint64_t seed, Execution exec) {
    if (metric == CvMetric::auc && d.family() != Family::binomial)
        throw UsageError("auc metric requires the binomial family");
    const auto n = static_cast<std::size_t>(d.n());
    const std::size_t m = full.path.size();

    CvResult result;
    result.lambda = full.path;
    result.metric = metric;
    result.nonzero_counts = full.nonzero;
    result.seed = seed;
    result.fold_assignments = assign_folds(d.y(), d.family(), k, seed);

    std::vector<std::vector<Eigen::Index>> train(k), test(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto f = static_cast<std::size_t>(result.fold_assignments[i]);
        for (std::size_t g = 0; g < k; ++g) (g == f ? test[g] : train[g]).push_back(static_cast<Eigen::Index>(i));
    }
    if (d.family() == Family::binomial) {
        for (std::size_t f = 0; f < k; ++f) {
            double pos = 0.0;
            for (auto i : train[f]) pos += d.y()[i];
            if (pos == 0.0 || pos == static_cast<double>(train[f].size()))
                throw DataError("fold " + std::to_string(f + 1) + " training data has a single class; stratification "
                                "cannot fix this (too few observations of one class for " + std::to_string(k) +
                                " folds)");
        }
    }

    // per-fold, per-lambda scores; filled independently, reduced in fold order
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
    for_each_index(exec, k, [&](std::size_t f) {
        const Dataset tr = d.subset(train[f]);
        // held-out rows stay raw: a leave-one-out fold is too small for a Dataset
        const Eigen::MatrixXd x_te = d.x()(test[f], Eigen::all);
        const Eigen::VectorXd y_te = d.y()(test[f]);
        const Eigen::MatrixXd pred = fitter.fit_predict(tr, x_te, full.path, f);
        if (pred.cols() != static_cast<Eigen::Index>(m) || pred.rows() != x_te.rows())
            throw NumericError("fold predictions have the wrong shape");
        for (std::size_t l = 0; l < m; ++l)
            scores(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(l)) =
                score_predictions(metric, d.family(), y_te, pred.col(static_cast<Eigen::Index>(l)));
    });

    result.mean_metric.resize(static_cast<Eigen::Index>(m));
    result.se_metric.resize(static_cast<Eigen::Index>(m));
    const double total = static_cast<double>(n);
    for (std::size_t l = 0; l < m; ++l) {
        const auto L = static_cast<Eigen::Index>(l);
        double mean = 0.0;
        for (std::size_t f = 0; f < k; ++f)
            mean += static_cast<double>(test[f].size()) * scores(static_cast<Eigen::Index>(f), L);
        mean /= total;
        double var = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            const double dev = scores(static_cast<Eigen::Index>(f), L) - mean;
            var += static_cast<double>(test[f].size()) * dev * dev;
        }
        var /= total;
        result.mean_metric[L] = mean;
        result.se_metric[L] = std::sqrt(var / static_cast<double>(k - 1));
    }

    const bool maximize = metric == CvMetric::auc;
    std::size_t best = 0;
    for (std::size_t l = 1; l < m; ++l) {
        const double v = result.mean_metric[static_cast<Eigen::Index>(l)];
        const double b = result.mean_metric[static_cast<Eigen::Index>(best)];
        if (maximize ? v > b : v < b) best = l;
    }
    result.lambda_min_index = best;
    const double bound = maximize ? result.mean_metric[static_cast<Eigen::Index>(best)] -
                                        result.se_metric[static_cast<Eigen::Index>(best)]
                                  : result.mean_metric[static_cast<Eigen::Index>(best)] +
                                        result.se_metric[static_cast<Eigen::Index>(best)];
    result.lambda_1se_index = best;
    for (std::size_t l = 0; l <= best; ++l) {
        const double v = result.mean_metric[static_cast<Eigen::Index>(l)];
        if (maximize ? v >= bound : v <= bound) {
            result.lambda_1se_index = l;
            break;
        }
    }
    return result;
}

PathFitter make_lasso_fitter(const LassoOptions& options) {
    PathFitter fitter;
    fitter.fit_full = [options](const Dataset& d) {
        const auto model = fit_lasso_path(d, options);
        PathFit out;
        out.path = model.lambda;
        out.nonzero.resize(model.n_lambda());
        for (std::size_t l = 0; l < model.n_lambda(); ++l) out.nonzero[l].linear = model.nonzero(l);
        return out;
    };
    fitter.fit_predict = [options](const Dataset& train, const Eigen::MatrixXd& x_test, const LambdaPath& path,
                                   std::size_t) {
        LassoOptions opts = options;
        opts.path = path;
        return predict_linear_path(fit_lasso_path(train, opts), x_test, Scale::response);
    };
    return fitter;
}

PathFitter make_null_fitter(const LassoOptions& options) {
    PathFitter fitter;
    fitter.fit_full = [options](const Dataset& d) {
        PathFit out;
        out.path = fit_lasso_path(d, options).lambda;
        out.nonzero.assign(out.path.size(), NonzeroCount{});
        return out;
    };
    fitter.fit_predict = [](const Dataset& train, const Eigen::MatrixXd& x_test, const LambdaPath& path, std::size_t) {
        return Eigen::MatrixXd::Constant(x_test.rows(), static_cast<Eigen::Index>(path.size()), train.y().mean())
            .eval();
    };
    return fitter;
}

std::string cv_result_csv(const CvResult& result) {
    std::ostringstream out;
    out << "lambda,mean,se,nonzero_linear,nonzero_nonlinear\n";
    for (std::size_t l = 0; l < result.lambda.size(); ++l) {
        const auto L = static_cast<Eigen::Index>(l);
        const NonzeroCount nz = l < result.nonzero_counts.size() ? result.nonzero_counts[l] : NonzeroCount{};
        out << format_double(result.lambda[l]) << ',' << format_double(result.mean_metric[L]) << ','
            << format_double(result.se_metric[L]) << ',' << nz.linear << ',' << nz.nonlinear << '\n';
    }
    return out.str();
}

} // namespace rgam
