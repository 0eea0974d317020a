#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>

namespace rgam {

/// Response distribution and its canonical link: identity, logit, log.
enum class Family { gaussian, binomial, poisson };

std::string to_string(Family family);
Family parse_family(std::string_view name);

double link(Family family, double mu);
double inverse_link(Family family, double eta);
double variance(Family family, double mu);

/// Unit deviance d(y, mu); binomial means are clamped to [1e-10, 1 - 1e-10].
double unit_deviance(Family family, double y, double mu);

/// Mean unit deviance over observations (deviance / n).
double mean_deviance(Family family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu);

Eigen::VectorXd inverse_link(Family family, const Eigen::VectorXd& eta);

/// Throws DataError if some response value is outside the family's support.
void check_response(Family family, const Eigen::VectorXd& y);

} // namespace rgam
