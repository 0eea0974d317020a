#pragma once

#include "rgam/family.hpp"

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rgam {

/// Feature matrix, response and family. Validated on construction and
/// immutable afterwards.
class Dataset {
public:
    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, Family family, std::vector<std::string> column_names = {});

    const Eigen::MatrixXd& x() const { return x_; }
    const Eigen::VectorXd& y() const { return y_; }
    Family family() const { return family_; }
    const std::vector<std::string>& column_names() const { return column_names_; }
    Eigen::Index n() const { return x_.rows(); }
    Eigen::Index p() const { return x_.cols(); }

    /// Rows in the given order.
    Dataset subset(std::span<const Eigen::Index> rows) const;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    Family family_;
    std::vector<std::string> column_names_;
};

/// Column centring and scaling (population sd, divisor n).
struct Standardization {
    Eigen::VectorXd column_means;
    Eigen::VectorXd column_sds;
    std::vector<bool> zero_variance;
    double y_mean = 0.0; // used for gaussian responses only

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd restore(const Eigen::MatrixXd& x_std) const;
};

struct StandardizedDesign {
    Eigen::MatrixXd x;
    Standardization scaling;
};

/// Population standard deviation (divisor n). Constant input gives 0.
double sample_sd(std::span<const double> v);
double sample_sd(const Eigen::VectorXd& v);

/// True when the column is numerically constant.
bool is_zero_variance(double sd, double scale_hint);

/// Centres and scales every column; zero-variance columns are flagged and
/// left as zero columns. Throws DataError if every column is constant.
StandardizedDesign standardize(const Dataset& d);

/// Raw numeric table: header plus row-major cells.
struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

/// Reads a numeric CSV with one header row. Errors name the offending row/column.
CsvTable read_csv(const std::filesystem::path& path);

/// Values are written in shortest round-trip form.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values);

/// Response given as a header name, or as a 1-based column number.
Dataset load_csv(const std::filesystem::path& path, const std::string& response_column, Family family);

void write_dataset_csv(const std::filesystem::path& path, const Dataset& d, const std::string& response_name = "y");

/// Shortest text that parses back to the same double.
std::string format_double(double v);

} // namespace rgam
