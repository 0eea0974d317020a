#include "rgam/spline.hpp"

#include "rgam/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace rgam {

namespace {

constexpr double kLogRhoLow = -10.0 * 2.302585092994046;  // ln(1e-10)
constexpr double kLogRhoHigh = 10.0 * 2.302585092994046;  // ln(1e10)
constexpr double kTraceTolerance = 1e-3;
constexpr int kMaxBisection = 100;

// Unique sorted abscissae with multiplicities; x mapped to t in [0, 1].
struct UniqueDesign {
    std::vector<double> u;       // original scale
    std::vector<double> t;       // (u - u0) / range
    std::vector<double> weight;  // multiplicity
    std::vector<std::size_t> row_to_knot;
    double range = 1.0;

    std::size_t size() const { return u.size(); }
};

UniqueDesign make_design(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    UniqueDesign d;
    d.row_to_knot.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        if (!std::isfinite(x[i])) throw DataError("smoothing spline input contains a non-finite x value");
        if (d.u.empty() || x[i] != d.u.back()) {
            d.u.push_back(x[i]);
            d.weight.push_back(0.0);
        }
        d.weight.back() += 1.0;
        d.row_to_knot[i] = d.u.size() - 1;
    }
    if (d.u.size() < 4)
        throw UsageError("smoothing spline needs at least 4 unique x values, got " + std::to_string(d.u.size()));
    d.range = d.u.back() - d.u.front();
    d.t.resize(d.u.size());
    for (std::size_t k = 0; k < d.u.size(); ++k) d.t[k] = (d.u[k] - d.u.front()) / d.range;
    d.t.back() = 1.0;
    return d;
}

std::vector<double> tie_means(const UniqueDesign& d, std::span<const double> r) {
    std::vector<double> ybar(d.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) ybar[d.row_to_knot[i]] += r[i];
    for (std::size_t k = 0; k < d.size(); ++k) ybar[k] /= d.weight[k];
    return ybar;
}

// Banded pieces of the Reinsch system on the t scale:
//   Q (K x m, m = K - 2) second-difference matrix, R (m x m) tridiagonal,
//   P = Q' W^{-1} Q pentadiagonal.
struct ReinschBands {
    std::size_t m = 0;
    std::vector<double> qa, qb, qc; // Q(j, j), Q(j+1, j), Q(j+2, j)
    std::vector<double> r0, r1;     // R diagonal, first off-diagonal
    std::vector<double> p0, p1, p2; // P diagonal, first, second off-diagonal
    double penalty_unit = 1.0;      // tr(R) / tr(P): lambda = rho * penalty_unit
};

ReinschBands make_bands(const UniqueDesign& d) {
    const std::size_t K = d.size();
    ReinschBands b;
    b.m = K - 2;
    std::vector<double> h(K - 1);
    for (std::size_t k = 0; k + 1 < K; ++k) h[k] = d.t[k + 1] - d.t[k];

    b.qa.resize(b.m);
    b.qb.resize(b.m);
    b.qc.resize(b.m);
    b.r0.resize(b.m);
    b.r1.assign(b.m, 0.0);
    for (std::size_t j = 0; j < b.m; ++j) {
        b.qa[j] = 1.0 / h[j];
        b.qc[j] = 1.0 / h[j + 1];
        b.qb[j] = -b.qa[j] - b.qc[j];
        b.r0[j] = (h[j] + h[j + 1]) / 3.0;
        if (j + 1 < b.m) b.r1[j] = h[j + 1] / 6.0;
    }

    const auto& w = d.weight;
    b.p0.resize(b.m);
    b.p1.assign(b.m, 0.0);
    b.p2.assign(b.m, 0.0);
    for (std::size_t j = 0; j < b.m; ++j) {
        b.p0[j] = b.qa[j] * b.qa[j] / w[j] + b.qb[j] * b.qb[j] / w[j + 1] + b.qc[j] * b.qc[j] / w[j + 2];
        if (j + 1 < b.m) b.p1[j] = b.qb[j] * b.qa[j + 1] / w[j + 1] + b.qc[j] * b.qb[j + 1] / w[j + 2];
        if (j + 2 < b.m) b.p2[j] = b.qc[j] * b.qa[j + 2] / w[j + 2];
    }
    const double tr_r = std::accumulate(b.r0.begin(), b.r0.end(), 0.0);
    const double tr_p = std::accumulate(b.p0.begin(), b.p0.end(), 0.0);
    b.penalty_unit = tr_r / tr_p;
    return b;
}

// L D L' factorisation of the pentadiagonal M = R + lambda P.
struct BandedLdl {
    std::vector<double> d, l1, l2; // D, L(j+1, j), L(j+2, j)

    BandedLdl(const ReinschBands& b, double lambda) : d(b.m), l1(b.m, 0.0), l2(b.m, 0.0) {
        for (std::size_t i = 0; i < b.m; ++i) {
            const double m0 = b.r0[i] + lambda * b.p0[i];
            const double m1 = b.r1[i] + lambda * b.p1[i];
            const double m2 = lambda * b.p2[i];
            double di = m0;
            if (i >= 1) di -= l1[i - 1] * l1[i - 1] * d[i - 1];
            if (i >= 2) di -= l2[i - 2] * l2[i - 2] * d[i - 2];
            if (!(di > 0.0)) throw NumericError("smoothing spline system is not positive definite");
            d[i] = di;
            double off = m1;
            if (i >= 1) off -= l2[i - 1] * l1[i - 1] * d[i - 1];
            l1[i] = off / di;
            l2[i] = m2 / di;
        }
    }

    std::vector<double> solve(std::vector<double> rhs) const {
        const std::size_t m = d.size();
        for (std::size_t i = 0; i < m; ++i) {
            if (i >= 1) rhs[i] -= l1[i - 1] * rhs[i - 1];
            if (i >= 2) rhs[i] -= l2[i - 2] * rhs[i - 2];
        }
        for (std::size_t i = 0; i < m; ++i) rhs[i] /= d[i];
        for (std::size_t ii = m; ii-- > 0;) {
            if (ii + 1 < m) rhs[ii] -= l1[ii] * rhs[ii + 1];
            if (ii + 2 < m) rhs[ii] -= l2[ii] * rhs[ii + 2];
        }
        return rhs;
    }

    // tr(M^{-1} P) from the band of M^{-1} (Hutchinson & de Hoog recursion).
    double trace_inverse_times(const ReinschBands& b) const {
        const std::size_t m = d.size();
        std::vector<double> s0(m, 0.0), s1(m, 0.0), s2(m, 0.0); // Sigma(i,i), (i,i+1), (i,i+2)
        auto get = [&](std::size_t i, std::size_t j) -> double {
            // symmetric band access, |i - j| <= 2, both < m
            if (i > j) std::swap(i, j);
            switch (j - i) {
            case 0: return s0[i];
            case 1: return s1[i];
            default: return s2[i];
            }
        };
        for (std::size_t ii = m; ii-- > 0;) {
            const double a = ii + 1 < m ? l1[ii] : 0.0;
            const double c = ii + 2 < m ? l2[ii] : 0.0;
            if (ii + 2 < m) s2[ii] = -a * get(ii + 1, ii + 2) - c * get(ii + 2, ii + 2);
            if (ii + 1 < m) s1[ii] = -a * get(ii + 1, ii + 1) - c * (ii + 2 < m ? get(ii + 2, ii + 1) : 0.0);
            double diag = 1.0 / d[ii];
            if (ii + 1 < m) diag -= a * s1[ii];
            if (ii + 2 < m) diag -= c * s2[ii];
            s0[ii] = diag;
        }
        double tr = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            tr += s0[i] * b.p0[i];
            if (i + 1 < m) tr += 2.0 * s1[i] * b.p1[i];
            if (i + 2 < m) tr += 2.0 * s2[i] * b.p2[i];
        }
        return tr;
    }
};

double trace_at(const UniqueDesign& d, const ReinschBands& b, double lambda) {
    if (lambda == 0.0) return static_cast<double>(d.size());
    if (std::isinf(lambda)) return 2.0;
    const BandedLdl ldl(b, lambda);
    return static_cast<double>(d.size()) - lambda * ldl.trace_inverse_times(b);
}

double solve_rho(const UniqueDesign& d, const ReinschBands& b, double target_df) {
    auto trace_rho = [&](double log_rho) { return trace_at(d, b, std::exp(log_rho) * b.penalty_unit); };
    double lo = kLogRhoLow;
    double hi = kLogRhoHigh;
    const double tr_lo = trace_rho(lo);
    const double tr_hi = trace_rho(hi);
    if (target_df > tr_lo + kTraceTolerance || target_df < tr_hi - kTraceTolerance)
        throw NumericError("target df " + std::to_string(target_df) + " is not bracketed: trace ranges over [" +
                           std::to_string(tr_hi) + ", " + std::to_string(tr_lo) + "] for smoothing parameters in [" +
                           std::to_string(std::exp(lo) * b.penalty_unit) + ", " +
                           std::to_string(std::exp(hi) * b.penalty_unit) + "]");
    double mid = 0.5 * (lo + hi);
    double tr = 0.0;
    for (int it = 0; it < kMaxBisection; ++it) {
        mid = 0.5 * (lo + hi);
        tr = trace_rho(mid);
        if (std::abs(tr - target_df) < 1e-8 * std::max(1.0, target_df)) break;
        if (tr > target_df) lo = mid;
        else hi = mid;
    }
    if (std::abs(tr - target_df) > kTraceTolerance)
        throw NumericError("df search did not converge: trace " + std::to_string(tr) + " vs target " +
                           std::to_string(target_df) + " with log-smoothing bracket [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    return std::exp(mid) * b.penalty_unit;
}

SmoothingSplineFit fit_line(const UniqueDesign& d, const std::vector<double>& ybar, std::span<const double> r) {
    double sw = 0.0, su = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        sw += d.weight[k];
        su += d.weight[k] * d.u[k];
        sy += d.weight[k] * ybar[k];
    }
    const double umean = su / sw;
    const double ymean = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double du = d.u[k] - umean;
        sxx += d.weight[k] * du * du;
        sxy += d.weight[k] * du * (ybar[k] - ymean);
    }
    const double slope = sxy / sxx;
    SmoothingSplineFit fit;
    fit.knots = d.u;
    fit.values.resize(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) fit.values[k] = ymean + slope * (d.u[k] - umean);
    fit.second_derivs.assign(d.size(), 0.0);
    fit.smoothing_parameter = std::numeric_limits<double>::infinity();
    fit.effective_df = 2.0;
    fit.fitted.resize(static_cast<Eigen::Index>(r.size()));
    for (std::size_t i = 0; i < r.size(); ++i) fit.fitted[static_cast<Eigen::Index>(i)] = fit.values[d.row_to_knot[i]];
    return fit;
}

SmoothingSplineFit fit_at(const UniqueDesign& d, const ReinschBands& b, std::span<const double> r, double lambda) {
    const auto ybar = tie_means(d, r);
    if (std::isinf(lambda)) return fit_line(d, ybar, r);

    const std::size_t K = d.size();
    std::vector<double> rhs(b.m);
    for (std::size_t j = 0; j < b.m; ++j) rhs[j] = b.qa[j] * ybar[j] + b.qb[j] * ybar[j + 1] + b.qc[j] * ybar[j + 2];
    const BandedLdl ldl(b, lambda);
    const auto gamma = ldl.solve(std::move(rhs));

    SmoothingSplineFit fit;
    fit.knots = d.u;
    fit.values = ybar;
    if (lambda > 0.0) {
        for (std::size_t k = 0; k < K; ++k) {
            double qg = 0.0;
            if (k < b.m) qg += b.qa[k] * gamma[k];
            if (k >= 1 && k - 1 < b.m) qg += b.qb[k - 1] * gamma[k - 1];
            if (k >= 2 && k - 2 < b.m) qg += b.qc[k - 2] * gamma[k - 2];
            fit.values[k] -= lambda * qg / d.weight[k];
        }
    }
    const double to_x = 1.0 / (d.range * d.range);
    fit.second_derivs.assign(K, 0.0);
    for (std::size_t j = 0; j < b.m; ++j) fit.second_derivs[j + 1] = gamma[j] * to_x;
    fit.smoothing_parameter = lambda;
    fit.effective_df = lambda == 0.0 ? static_cast<double>(K)
                                     : static_cast<double>(K) - lambda * ldl.trace_inverse_times(b);
    fit.fitted.resize(static_cast<Eigen::Index>(r.size()));
    for (std::size_t i = 0; i < r.size(); ++i) fit.fitted[static_cast<Eigen::Index>(i)] = fit.values[d.row_to_knot[i]];
    return fit;
}

void check_lengths(std::span<const double> x, std::span<const double> r) {
    if (x.size() != r.size()) throw UsageError("smoothing spline x and r lengths differ");
    if (x.size() < 4) throw UsageError("smoothing spline needs at least 4 observations");
    for (double v : r)
        if (!std::isfinite(v)) throw DataError("smoothing spline response contains a non-finite value");
}

} // namespace

std::size_t count_unique(std::span<const double> x) {
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

SmoothingSplineFit fit_smoothing_spline(std::span<const double> x, std::span<const double> r, double target_df) {
    check_lengths(x, r);
    const auto design = make_design(x);
    const double K = static_cast<double>(design.size());
    if (!(target_df >= 2.0 - 1e-12) || !(target_df <= K + 1e-12))
        throw UsageError("target df " + std::to_string(target_df) + " is outside the attainable range [2, " +
                         std::to_string(design.size()) + "]");
    const auto bands = make_bands(design);
    if (target_df <= 2.0 + 1e-12) return fit_at(design, bands, r, std::numeric_limits<double>::infinity());
    if (target_df >= K - 1e-12) return fit_at(design, bands, r, 0.0);
    return fit_at(design, bands, r, solve_rho(design, bands, target_df));
}

SmoothingSplineFit fit_smoothing_spline_lambda(std::span<const double> x, std::span<const double> r, double lambda) {
    check_lengths(x, r);
    if (!(lambda >= 0.0)) throw UsageError("smoothing parameter must be >= 0");
    const auto design = make_design(x);
    return fit_at(design, make_bands(design), r, lambda);
}

double smoother_trace(std::span<const double> x, double lambda) {
    if (!(lambda >= 0.0)) throw UsageError("smoothing parameter must be >= 0");
    const auto design = make_design(x);
    return trace_at(design, make_bands(design), lambda);
}

double solve_df_to_lambda(std::span<const double> x, double target_df) {
    const auto design = make_design(x);
    const double K = static_cast<double>(design.size());
    if (!(target_df > 2.0) || !(target_df < K))
        throw UsageError("target df " + std::to_string(target_df) + " must lie strictly inside (2, " +
                         std::to_string(design.size()) + ")");
    return solve_rho(design, make_bands(design), target_df);
}

Eigen::VectorXd evaluate_spline(const SmoothingSplineFit& fit, std::span<const double> x_new) {
    const auto& u = fit.knots;
    const auto& f = fit.values;
    const auto& s = fit.second_derivs;
    const std::size_t K = u.size();
    Eigen::VectorXd out(static_cast<Eigen::Index>(x_new.size()));
    if (K == 0) {
        out.setZero();
        return out;
    }

    const double h_left = u[1] - u[0];
    const double slope_left = (f[1] - f[0]) / h_left - h_left * (2.0 * s[0] + s[1]) / 6.0;
    const double h_right = u[K - 1] - u[K - 2];
    const double slope_right = (f[K - 1] - f[K - 2]) / h_right + h_right * (s[K - 2] + 2.0 * s[K - 1]) / 6.0;

    for (std::size_t i = 0; i < x_new.size(); ++i) {
        const double x = x_new[i];
        double v;
        if (x < u.front()) {
            v = f[0] + slope_left * (x - u[0]);
        } else if (x > u.back()) {
            v = f[K - 1] + slope_right * (x - u[K - 1]);
        } else {
            auto it = std::upper_bound(u.begin(), u.end(), x);
            std::size_t k = static_cast<std::size_t>(it - u.begin());
            k = k == 0 ? 0 : k - 1;
            if (k > K - 2) k = K - 2;
            const double h = u[k + 1] - u[k];
            const double a = (u[k + 1] - x) / h;
            const double bb = 1.0 - a;
            v = a * f[k] + bb * f[k + 1] + ((a * a * a - a) * s[k] + (bb * bb * bb - bb) * s[k + 1]) * h * h / 6.0;
        }
        out[static_cast<Eigen::Index>(i)] = v;
    }
    return out;
}

} // namespace rgam
