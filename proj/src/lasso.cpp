#include "rgam/lasso.hpp"

#include "rgam/error.hpp"

#include <Eigen/Cholesky>
#include <numeric>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rgam {

LambdaPath LambdaPath::log_spaced(double lambda_max, std::size_t m, double min_ratio) {
    if (m < 2) throw UsageError("lambda path needs at least 2 values");
    if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw UsageError("lambda min ratio must lie in (0, 1)");
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) throw DataError("lambda_max must be positive and finite");
    LambdaPath path;
    path.lambda_max = lambda_max;
    path.min_ratio = min_ratio;
    path.values.resize(m);
    const double log_ratio = std::log(min_ratio);
    path.values[0] = lambda_max;
    for (std::size_t k = 1; k < m; ++k)
        path.values[k] = lambda_max * std::exp(log_ratio * static_cast<double>(k) / static_cast<double>(m - 1));
    return path;
}

LambdaPath LambdaPath::from_values(std::vector<double> values) {
    if (values.empty()) throw UsageError("lambda path is empty");
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] >= 0.0) || !std::isfinite(values[k])) throw UsageError("lambda values must be finite and >= 0");
        if (k > 0 && !(values[k] < values[k - 1])) throw UsageError("lambda values must be strictly decreasing");
    }
    LambdaPath path;
    path.lambda_max = values.front();
    path.min_ratio = values.front() > 0.0 ? values.back() / values.front() : 0.0;
    path.values = std::move(values);
    return path;
}

double default_min_ratio(Eigen::Index n, Eigen::Index p) {
    return n < p ? 1e-2 : 1e-4;
}

namespace {

double dot(const double* a, const double* b, Eigen::Index n) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

} // namespace

LambdaPath make_lambda_path(const Eigen::MatrixXd& x_std, const Eigen::VectorXd& working_response, std::size_t m,
                            double min_ratio) {
    const Eigen::Index n = x_std.rows();
    if (working_response.size() != n) throw UsageError("working response length does not match design rows");
    double lmax = 0.0;
    for (Eigen::Index j = 0; j < x_std.cols(); ++j)
        lmax = std::max(lmax, std::abs(dot(x_std.col(j).data(), working_response.data(), n)) / static_cast<double>(n));
    if (!(lmax > 0.0)) throw DataError("lambda_max is 0: the working response is orthogonal to every column");
    return LambdaPath::log_spaced(lmax, m, min_ratio);
}

Eigen::Index FittedLinearModel::nonzero(std::size_t lambda_index) const {
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < beta.cols(); ++j)
        if (beta(static_cast<Eigen::Index>(lambda_index), j) != 0.0) ++count;
    return count;
}

namespace {

// Coordinate descent on the centred/scaled design for
//   (1/2n) sum_i w_i (z_i - b0 - x_i b)^2 + lambda * sum_j pen_j |b_j|
// with r = z - b0 - X b kept up to date.
class CoordinateDescent {
public:
    CoordinateDescent(const Eigen::MatrixXd& x, const std::vector<bool>& penalized, const std::vector<bool>& masked,
                      bool weighted, const LassoOptions& options)
        : x_(x), penalized_(penalized), masked_(masked), weighted_(weighted), options_(options), n_(x.rows()),
          q_(x.cols()), b_(Eigen::VectorXd::Zero(x.cols())), xv_(Eigen::VectorXd::Zero(x.cols())),
          w_(Eigen::VectorXd::Ones(x.rows())), r_(Eigen::VectorXd::Zero(x.rows())),
          ever_active_(static_cast<size_t>(x.cols()), false) {}

    Eigen::VectorXd& coefficients() { return b_; }
    double& intercept() { return b0_; }
    Eigen::VectorXd& residual() { return r_; }
    Eigen::VectorXd& weights() { return w_; }

    // (1/n) sum_i w_i x_ij r_i
    double gradient(Eigen::Index j) const {
        const double* xj = x_.col(j).data();
        if (!weighted_) return dot(xj, r_.data(), n_) / static_cast<double>(n_);
        double s = 0.0;
        for (Eigen::Index i = 0; i < n_; ++i) s += xj[i] * (w_[i] * r_[i]);
        return s / static_cast<double>(n_);
    }

    void refresh_curvature() {
        for (Eigen::Index j = 0; j < q_; ++j) {
            if (masked_[static_cast<size_t>(j)]) continue;
            const double* xj = x_.col(j).data();
            double s = 0.0;
            if (weighted_)
                for (Eigen::Index i = 0; i < n_; ++i) s += w_[i] * xj[i] * xj[i];
            else
                s = dot(xj, xj, n_);
            xv_[j] = s / static_cast<double>(n_);
        }
    }

    void solve(double lambda) {
        long sweeps = 0;
        std::vector<Eigen::Index> all;
        all.reserve(static_cast<size_t>(q_));
        for (Eigen::Index j = 0; j < q_; ++j)
            if (!masked_[static_cast<size_t>(j)] && xv_[j] > 0.0) all.push_back(j);

        while (true) {
            const double full_change = sweep(all, lambda);
            if (++sweeps > options_.max_sweeps) fail(lambda);
            if (full_change < options_.tolerance) break;
            long inner = 0;
            long next_polish = 10;
            while (true) {
                const double change = sweep(active_, lambda);
                if (++sweeps > options_.max_sweeps) fail(lambda);
                if (change < options_.tolerance) break;
                if (++inner == next_polish) {
                    polish(lambda);
                    next_polish *= 2;
                }
            }
        }
    }

private:
    // Active-set Newton step on the current support with signs held fixed.
    // When the full step would flip a sign, move to the first zero crossing,
    // drop that coordinate and re-solve on the rest. The combined move is kept
    // only if it lowers the objective; the following sweeps verify optimality.
    void polish(double lambda) {
        std::vector<Eigen::Index> support;
        for (Eigen::Index j : active_)
            if (b_[j] != 0.0 || !penalized_[static_cast<size_t>(j)]) support.push_back(j);
        std::sort(support.begin(), support.end());
        const auto s = static_cast<Eigen::Index>(support.size());
        const Eigen::Index dim = s + (weighted_ ? 1 : 0);
        if (s == 0 || dim >= n_) return;

        Eigen::MatrixXd xa(n_, dim);
        for (Eigen::Index a = 0; a < s; ++a) xa.col(a) = x_.col(support[static_cast<size_t>(a)]);
        if (weighted_) xa.col(s).setOnes();
        Eigen::MatrixXd wx = xa;
        if (weighted_) wx = w_.asDiagonal() * xa;
        const Eigen::MatrixXd gram = (wx.transpose() * xa) / static_cast<double>(n_);
        const Eigen::VectorXd grad0 = (wx.transpose() * r_) / static_cast<double>(n_);

        // value[a] = coefficient before the move; sign-penalty only on penalized entries
        Eigen::VectorXd value = Eigen::VectorXd::Zero(dim), sign = Eigen::VectorXd::Zero(dim);
        for (Eigen::Index a = 0; a < s; ++a) {
            const Eigen::Index j = support[static_cast<size_t>(a)];
            value[a] = b_[j];
            if (penalized_[static_cast<size_t>(j)] && std::isfinite(lambda)) sign[a] = b_[j] > 0.0 ? 1.0 : -1.0;
        }
        auto penalized_at = [&](Eigen::Index a) { return a < s && penalized_[static_cast<size_t>(support[static_cast<size_t>(a)])]; };

        Eigen::VectorXd move = Eigen::VectorXd::Zero(dim);
        std::vector<Eigen::Index> free(static_cast<size_t>(dim));
        std::iota(free.begin(), free.end(), Eigen::Index{0});
        while (!free.empty()) {
            const auto f = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd g(f, f);
            Eigen::VectorXd rhs(f);
            const Eigen::VectorXd grad = grad0 - gram * move;
            for (Eigen::Index a = 0; a < f; ++a) {
                const Eigen::Index ia = free[static_cast<size_t>(a)];
                rhs[a] = sign[ia] != 0.0 ? grad[ia] - lambda * sign[ia] : grad[ia];
                for (Eigen::Index c = 0; c < f; ++c) g(a, c) = gram(ia, free[static_cast<size_t>(c)]);
            }
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
            if (ldlt.info() != Eigen::Success) return;
            const Eigen::VectorXd step = ldlt.solve(rhs);
            if (!step.allFinite()) return;

            // largest fraction of the step that keeps every sign
            double t = 1.0;
            Eigen::Index blocking = -1;
            for (Eigen::Index a = 0; a < f; ++a) {
                const Eigen::Index ia = free[static_cast<size_t>(a)];
                if (!penalized_at(ia)) continue;
                const double now = value[ia] + move[ia];
                const double after = now + step[a];
                if (after == 0.0 || (after > 0.0) != (now > 0.0)) {
                    const double ta = -now / step[a];
                    if (ta < t) {
                        t = ta;
                        blocking = a;
                    }
                }
            }
            for (Eigen::Index a = 0; a < f; ++a) move[free[static_cast<size_t>(a)]] += t * step[a];
            if (blocking < 0) break;
            const Eigen::Index ib = free[static_cast<size_t>(blocking)];
            move[ib] = -value[ib]; // lands exactly on zero
            free.erase(free.begin() + blocking);
        }

        // exact change in the penalized objective
        double l1 = 0.0;
        for (Eigen::Index a = 0; a < s; ++a)
            if (penalized_at(a) && std::isfinite(lambda)) l1 += std::abs(value[a] + move[a]) - std::abs(value[a]);
        const double delta = -move.dot(grad0) + 0.5 * move.dot(gram * move) + (std::isfinite(lambda) ? lambda * l1 : 0.0);
        if (!(delta < 0.0)) return;
        for (Eigen::Index a = 0; a < s; ++a) b_[support[static_cast<size_t>(a)]] = value[a] + move[a];
        if (weighted_) b0_ += move[s];
        r_.noalias() -= xa * move;
    }

    double sweep(const std::vector<Eigen::Index>& columns, double lambda) {
        double max_change = 0.0;
        for (Eigen::Index j : columns) {
            const double old = b_[j];
            const double g = gradient(j) + xv_[j] * old;
            const double pen = penalized_[static_cast<size_t>(j)] ? lambda : 0.0;
            const double updated = soft_threshold(g, pen) / xv_[j];
            const double delta = updated - old;
            if (delta == 0.0) continue;
            b_[j] = updated;
            const double* xj = x_.col(j).data();
            for (Eigen::Index i = 0; i < n_; ++i) r_[i] -= delta * xj[i];
            max_change = std::max(max_change, std::abs(delta));
            if (updated != 0.0 && !ever_active_[static_cast<size_t>(j)]) {
                ever_active_[static_cast<size_t>(j)] = true;
                active_.push_back(j);
            }
        }
        if (weighted_) {
            // intercept: centred columns are not orthogonal to the weights
            double num = 0.0;
            double den = 0.0;
            for (Eigen::Index i = 0; i < n_; ++i) {
                num += w_[i] * r_[i];
                den += w_[i];
            }
            const double delta = num / den;
            if (delta != 0.0) {
                b0_ += delta;
                for (Eigen::Index i = 0; i < n_; ++i) r_[i] -= delta;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (!std::isfinite(max_change)) throw NumericError("non-finite coefficient update in coordinate descent");
        return max_change;
    }

    [[noreturn]] void fail(double lambda) const {
        throw NumericError("coordinate descent did not converge at lambda=" + std::to_string(lambda));
    }

    const Eigen::MatrixXd& x_;
    const std::vector<bool>& penalized_;
    const std::vector<bool>& masked_;
    bool weighted_;
    const LassoOptions& options_;
    Eigen::Index n_;
    Eigen::Index q_;
    Eigen::VectorXd b_;
    double b0_ = 0.0;
    Eigen::VectorXd xv_;
    Eigen::VectorXd w_;
    Eigen::VectorXd r_;
    std::vector<bool> ever_active_;
    std::vector<Eigen::Index> active_;
};

// One IRLS stage at a fixed lambda: working weights/response from the current
// linear predictor, then coordinate descent. Repeats until the coefficients settle.
void solve_glm(CoordinateDescent& cd, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Family family,
               double lambda, const LassoOptions& options) {
    const Eigen::Index n = x.rows();
    auto& b = cd.coefficients();
    Eigen::VectorXd eta(n);
    for (int it = 0; it < options.max_irls_iterations; ++it) {
        eta.setConstant(cd.intercept());
        for (Eigen::Index j = 0; j < b.size(); ++j)
            if (b[j] != 0.0) eta.noalias() += b[j] * x.col(j);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(eta[i]) || std::abs(eta[i]) > 700.0)
                throw NumericError("IRLS diverged: unbounded linear predictor at lambda=" + std::to_string(lambda));
            const double mu = inverse_link(family, eta[i]);
            const double w = std::max(variance(family, mu), options.weight_floor);
            cd.weights()[i] = w;
            cd.residual()[i] = (y[i] - mu) / w;
        }
        cd.refresh_curvature();
        const Eigen::VectorXd b_old = b;
        const double b0_old = cd.intercept();
        cd.solve(lambda);
        double change = std::abs(cd.intercept() - b0_old);
        for (Eigen::Index j = 0; j < b.size(); ++j) change = std::max(change, std::abs(b[j] - b_old[j]));
        if (change < options.tolerance) break;
    }
}

} // namespace

FittedLinearModel fit_lasso_path(const Dataset& d, const LassoOptions& options) {
    const Eigen::Index n = d.n();
    const Eigen::Index q = d.p();
    const Family family = d.family();
    const Eigen::VectorXd& y = d.y();

    if (!options.penalty_mask.empty() && static_cast<Eigen::Index>(options.penalty_mask.size()) != q)
        throw UsageError("penalty mask length does not match column count");
    if (options.column_scales && options.column_scales->size() != q)
        throw UsageError("column scale length does not match column count");

    FittedLinearModel model;
    model.family = family;
    model.center.resize(q);
    model.scale.resize(q);
    model.masked.assign(static_cast<size_t>(q), false);

    // centred, scaled working design
    Eigen::MatrixXd xs(n, q);
    bool any_free = false;
    for (Eigen::Index j = 0; j < q; ++j) {
        const auto col = d.x().col(j);
        const double mean = col.mean();
        const double sd = sample_sd(std::span<const double>(col.data(), static_cast<size_t>(n)));
        model.center[j] = mean;
        double divisor = options.column_scales ? (*options.column_scales)[j] : sd;
        if (is_zero_variance(sd, col.cwiseAbs().maxCoeff()) || !(divisor > 0.0)) {
            model.masked[static_cast<size_t>(j)] = true;
            model.scale[j] = 1.0;
            xs.col(j).setZero();
            continue;
        }
        model.scale[j] = divisor;
        xs.col(j) = (col.array() - mean) / divisor;
        any_free = true;
    }
    std::vector<bool> penalized = options.penalty_mask.empty() ? std::vector<bool>(static_cast<size_t>(q), true)
                                                               : options.penalty_mask;

    const double ybar = y.mean();
    if (family == Family::binomial && (ybar <= 0.0 || ybar >= 1.0))
        throw DataError("binomial response has a single class");
    if (family == Family::poisson && ybar <= 0.0) throw DataError("poisson response is identically zero");

    const bool weighted = family != Family::gaussian;
    CoordinateDescent cd(xs, penalized, model.masked, weighted, options);
    cd.intercept() = link(family, ybar);
    cd.residual() = y.array() - ybar;
    if (weighted) {
        const double w = std::max(variance(family, ybar), options.weight_floor);
        cd.weights().setConstant(w);
        cd.residual() = (y.array() - ybar) / w;
    }
    cd.refresh_curvature();

    Eigen::VectorXd null_mu = Eigen::VectorXd::Constant(n, ybar);
    model.null_deviance = mean_deviance(family, y, null_mu);

    const double inf = std::numeric_limits<double>::infinity();
    const bool has_unpenalized = std::find(penalized.begin(), penalized.end(), false) != penalized.end();
    if (has_unpenalized && any_free) {
        if (weighted) solve_glm(cd, xs, y, family, inf, options);
        else cd.solve(inf);
    }

    if (options.path) {
        model.lambda = *options.path;
    } else {
        double lmax = 0.0;
        for (Eigen::Index j = 0; j < q; ++j)
            if (penalized[static_cast<size_t>(j)] && !model.masked[static_cast<size_t>(j)])
                lmax = std::max(lmax, std::abs(cd.gradient(j)));
        if (!(lmax > 0.0)) throw DataError("lambda_max is 0: the working response is orthogonal to every column");
        const double ratio = options.lambda_min_ratio.value_or(default_min_ratio(n, q));
        model.lambda = LambdaPath::log_spaced(lmax, options.nlambda, ratio);
    }

    const std::size_t m = model.lambda.size();
    model.beta.setZero(static_cast<Eigen::Index>(m), q);
    model.intercepts.resize(static_cast<Eigen::Index>(m));
    model.deviances.resize(static_cast<Eigen::Index>(m));

    Eigen::VectorXd eta(n);
    for (std::size_t k = 0; k < m; ++k) {
        const double lambda = model.lambda[k];
        if (any_free) {
            if (weighted) solve_glm(cd, xs, y, family, lambda, options);
            else cd.solve(lambda);
        }

        const auto& b = cd.coefficients();
        double intercept = cd.intercept();
        for (Eigen::Index j = 0; j < q; ++j) {
            if (model.masked[static_cast<size_t>(j)] || b[j] == 0.0) continue;
            const double beta = b[j] / model.scale[j];
            model.beta(static_cast<Eigen::Index>(k), j) = beta;
            intercept -= beta * model.center[j];
        }
        model.intercepts[static_cast<Eigen::Index>(k)] = intercept;

        eta.setConstant(cd.intercept());
        for (Eigen::Index j = 0; j < q; ++j)
            if (b[j] != 0.0) eta.noalias() += b[j] * xs.col(j);
        const double dev = mean_deviance(family, y, inverse_link(family, eta));
        if (!std::isfinite(dev)) throw NumericError("non-finite deviance at lambda=" + std::to_string(lambda));
        model.deviances[static_cast<Eigen::Index>(k)] = dev;
    }
    return model;
}

Eigen::VectorXd predict_linear(const FittedLinearModel& model, const Eigen::MatrixXd& x_new, std::size_t lambda_index,
                               Scale scale) {
    if (x_new.cols() != model.n_coef())
        throw DataError("prediction matrix has " + std::to_string(x_new.cols()) + " columns, model expects " +
                        std::to_string(model.n_coef()));
    if (lambda_index >= model.n_lambda()) throw UsageError("lambda index out of range");
    const auto k = static_cast<Eigen::Index>(lambda_index);
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(x_new.rows(), model.intercepts[k]);
    for (Eigen::Index j = 0; j < model.n_coef(); ++j) {
        const double beta = model.beta(k, j);
        if (beta != 0.0) eta.noalias() += beta * x_new.col(j);
    }
    if (scale == Scale::response) return inverse_link(model.family, eta);
    return eta;
}

Eigen::MatrixXd predict_linear_path(const FittedLinearModel& model, const Eigen::MatrixXd& x_new, Scale scale) {
    Eigen::MatrixXd out(x_new.rows(), static_cast<Eigen::Index>(model.n_lambda()));
    for (std::size_t k = 0; k < model.n_lambda(); ++k)
        out.col(static_cast<Eigen::Index>(k)) = predict_linear(model, x_new, k, scale);
    return out;
}

} // namespace rgam
