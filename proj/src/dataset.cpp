#include "rgam/dataset.hpp"

#include "rgam/error.hpp"
#include "rgam/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rgam {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, Family family, std::vector<std::string> column_names)
    : x_(std::move(x)), y_(std::move(y)), family_(family), column_names_(std::move(column_names)) {
    if (x_.rows() < 2) throw DataError("dataset needs at least 2 rows");
    if (x_.cols() < 1) throw DataError("dataset needs at least 1 feature column");
    if (y_.size() != x_.rows())
        throw DataError("response length " + std::to_string(y_.size()) + " does not match " +
                        std::to_string(x_.rows()) + " feature rows");
    if (!column_names_.empty() && static_cast<Eigen::Index>(column_names_.size()) != x_.cols())
        throw DataError("column name count does not match feature count");
    for (Eigen::Index j = 0; j < x_.cols(); ++j)
        for (Eigen::Index i = 0; i < x_.rows(); ++i)
            if (!std::isfinite(x_(i, j)))
                throw DataError("non-finite feature value at row " + std::to_string(i + 1) + ", column " +
                                std::to_string(j + 1));
    check_response(family_, y_);
    if (column_names_.empty()) {
        column_names_.reserve(static_cast<size_t>(x_.cols()));
        for (Eigen::Index j = 0; j < x_.cols(); ++j) column_names_.push_back("x" + std::to_string(j + 1));
    }
}

Dataset Dataset::subset(std::span<const Eigen::Index> rows) const {
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()), x_.cols());
    Eigen::VectorXd ys(static_cast<Eigen::Index>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
        xs.row(static_cast<Eigen::Index>(k)) = x_.row(rows[k]);
        ys[static_cast<Eigen::Index>(k)] = y_[rows[k]];
    }
    return Dataset(std::move(xs), std::move(ys), family_, column_names_);
}

double sample_sd(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double a : v) mean += a;
    mean /= n;
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    return std::sqrt(ss / n);
}

double sample_sd(const Eigen::VectorXd& v) {
    return sample_sd(std::span<const double>(v.data(), static_cast<size_t>(v.size())));
}

bool is_zero_variance(double sd, double scale_hint) {
    return sd <= 1e-10 * std::max(1.0, scale_hint);
}

StandardizedDesign standardize(const Dataset& d) {
    const Eigen::Index n = d.n();
    const Eigen::Index p = d.p();
    StandardizedDesign out;
    auto& s = out.scaling;
    s.column_means.resize(p);
    s.column_sds.resize(p);
    s.zero_variance.assign(static_cast<size_t>(p), false);
    out.x.resize(n, p);

    bool any_retained = false;
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto col = d.x().col(j);
        const double mean = col.mean();
        const double sd = sample_sd(std::span<const double>(col.data(), static_cast<size_t>(n)));
        s.column_means[j] = mean;
        s.column_sds[j] = sd;
        if (is_zero_variance(sd, col.cwiseAbs().maxCoeff())) {
            s.zero_variance[static_cast<size_t>(j)] = true;
            out.x.col(j).setZero();
        } else {
            any_retained = true;
            out.x.col(j) = (col.array() - mean) / sd;
        }
    }
    if (!any_retained) throw DataError("every feature column has zero variance");
    s.y_mean = d.family() == Family::gaussian ? d.y().mean() : 0.0;
    return out;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (zero_variance[static_cast<size_t>(j)]) out.col(j).setZero();
        else out.col(j) = (x.col(j).array() - column_means[j]) / column_sds[j];
    }
    return out;
}

Eigen::MatrixXd Standardization::restore(const Eigen::MatrixXd& x_std) const {
    Eigen::MatrixXd out(x_std.rows(), x_std.cols());
    for (Eigen::Index j = 0; j < x_std.cols(); ++j) {
        if (zero_variance[static_cast<size_t>(j)]) out.col(j).setConstant(column_means[j]);
        else out.col(j) = x_std.col(j).array() * column_sds[j] + column_means[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

// Splits one RFC-4180 record. Quoted fields may contain commas and "" escapes;
// embedded newlines are not supported.
std::vector<std::string> split_record(const std::string& line, size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            if (!cur.empty()) throw DataError("line " + std::to_string(line_no) + ": stray quote inside field");
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw DataError("line " + std::to_string(line_no) + ": unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool parse_number(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

} // namespace

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file '" + path.string() + "'");

    CsvTable table;
    std::string line;
    size_t line_no = 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_record(line, line_no);
        if (table.header.empty()) {
            for (auto& f : fields) table.header.push_back(trim(std::move(f)));
            continue;
        }
        if (fields.size() != table.header.size())
            throw DataError("row " + std::to_string(rows.size() + 1) + " has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(table.header.size()));
        std::vector<double> row(fields.size());
        for (size_t j = 0; j < fields.size(); ++j) {
            const auto cell = trim(fields[j]);
            if (!parse_number(cell, row[j]))
                throw DataError("non-numeric value '" + cell + "' at row " + std::to_string(rows.size() + 1) +
                                ", column '" + table.header[j] + "'");
        }
        rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw DataError("CSV file '" + path.string() + "' is empty");

    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return table;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
    std::ostringstream out;
    for (size_t j = 0; j < header.size(); ++j) {
        if (j) out << ',';
        out << header[j];
    }
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j) out << ',';
            out << format_double(values(i, j));
        }
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response_column, Family family) {
    auto table = read_csv(path);
    const auto& header = table.header;

    Eigen::Index response = -1;
    if (auto it = std::find(header.begin(), header.end(), response_column); it != header.end()) {
        response = std::distance(header.begin(), it);
    } else {
        long idx = 0;
        auto [ptr, ec] = std::from_chars(response_column.data(), response_column.data() + response_column.size(), idx);
        if (ec == std::errc() && ptr == response_column.data() + response_column.size() && idx >= 1 &&
            idx <= static_cast<long>(header.size()))
            response = idx - 1;
    }
    if (response < 0) throw DataError("response column '" + response_column + "' not found in '" + path.string() + "'");
    if (header.size() < 2) throw DataError("CSV needs at least one feature column besides the response");

    const Eigen::Index n = table.values.rows();
    const Eigen::Index p = table.values.cols() - 1;
    Eigen::MatrixXd x(n, p);
    std::vector<std::string> names;
    names.reserve(static_cast<size_t>(p));
    for (Eigen::Index j = 0, k = 0; j < table.values.cols(); ++j) {
        if (j == response) continue;
        x.col(k++) = table.values.col(j);
        names.push_back(header[static_cast<size_t>(j)]);
    }
    Eigen::VectorXd y = table.values.col(response);
    return Dataset(std::move(x), std::move(y), family, std::move(names));
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& d, const std::string& response_name) {
    std::vector<std::string> header = d.column_names();
    header.push_back(response_name);
    Eigen::MatrixXd values(d.n(), d.p() + 1);
    values.leftCols(d.p()) = d.x();
    values.col(d.p()) = d.y();
    write_csv(path, header, values);
}

} // namespace rgam
