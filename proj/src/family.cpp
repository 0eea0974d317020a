#include "rgam/family.hpp"

#include "rgam/error.hpp"

#include <algorithm>
#include <cmath>

namespace rgam {

namespace {
constexpr double kProbClamp = 1e-10;

double clamp_prob(double mu) {
    return std::clamp(mu, kProbClamp, 1.0 - kProbClamp);
}
} // namespace

std::string to_string(Family family) {
    switch (family) {
    case Family::gaussian: return "gaussian";
    case Family::binomial: return "binomial";
    case Family::poisson: return "poisson";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "binomial") return Family::binomial;
    if (name == "poisson") return Family::poisson;
    throw UsageError("unknown family '" + std::string(name) + "' (expected gaussian, binomial or poisson)");
}

double link(Family family, double mu) {
    switch (family) {
    case Family::gaussian: return mu;
    case Family::binomial: return std::log(mu / (1.0 - mu));
    case Family::poisson: return std::log(mu);
    }
    return mu;
}

double inverse_link(Family family, double eta) {
    switch (family) {
    case Family::gaussian: return eta;
    case Family::binomial:
        // split on sign so exp never overflows
        if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
        else {
            const double e = std::exp(eta);
            return e / (1.0 + e);
        }
    case Family::poisson: return std::exp(eta);
    }
    return eta;
}

double variance(Family family, double mu) {
    switch (family) {
    case Family::gaussian: return 1.0;
    case Family::binomial: return mu * (1.0 - mu);
    case Family::poisson: return mu;
    }
    return 1.0;
}

double unit_deviance(Family family, double y, double mu) {
    switch (family) {
    case Family::gaussian: {
        const double r = y - mu;
        return r * r;
    }
    case Family::binomial: {
        const double p = clamp_prob(mu);
        return -2.0 * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    case Family::poisson: {
        const double term = y > 0.0 ? y * std::log(y / mu) : 0.0;
        return 2.0 * (term - (y - mu));
    }
    }
    return 0.0;
}

double mean_deviance(Family family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) total += unit_deviance(family, y[i], mu[i]);
    return total / static_cast<double>(y.size());
}

Eigen::VectorXd inverse_link(Family family, const Eigen::VectorXd& eta) {
    Eigen::VectorXd mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = inverse_link(family, eta[i]);
    return mu;
}

void check_response(Family family, const Eigen::VectorXd& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y[i];
        if (!std::isfinite(v)) throw DataError("response row " + std::to_string(i + 1) + " is not finite");
        if (family == Family::binomial && v != 0.0 && v != 1.0)
            throw DataError("binomial response must be 0 or 1; row " + std::to_string(i + 1) + " has " + std::to_string(v));
        if (family == Family::poisson && (v < 0.0 || v != std::floor(v)))
            throw DataError("poisson response must be a non-negative integer; row " + std::to_string(i + 1) + " has " +
                            std::to_string(v));
    }
}

} // namespace rgam
