#pragma once

// Dataset container, CSV ingestion and response slicing.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "sdr/error.hpp"

namespace sdr {

/// Raw regression data: n observations of p predictors and one response.
class Dataset {
public:
    Dataset(Eigen::MatrixXd X, Eigen::VectorXd y, std::vector<std::string> names,
            std::string response_name = "y")
        : X_(std::move(X)), y_(std::move(y)), names_(std::move(names)),
          response_(std::move(response_name)) {
        validate();
    }

    const Eigen::MatrixXd& X() const noexcept { return X_; }
    const Eigen::VectorXd& y() const noexcept { return y_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::string& response_name() const noexcept { return response_; }
    Eigen::Index n() const noexcept { return X_.rows(); }
    Eigen::Index p() const noexcept { return X_.cols(); }

    /// Position of a predictor by name.
    std::optional<Eigen::Index> index_of(std::string_view name) const {
        for (std::size_t j = 0; j < names_.size(); ++j)
            if (names_[j] == name) return static_cast<Eigen::Index>(j);
        return std::nullopt;
    }

    /// Copy keeping only the listed predictor columns, in the given order.
    Dataset select(const std::vector<Eigen::Index>& keep) const {
        Eigen::MatrixXd Xs(n(), static_cast<Eigen::Index>(keep.size()));
        std::vector<std::string> names;
        for (std::size_t k = 0; k < keep.size(); ++k) {
            Xs.col(static_cast<Eigen::Index>(k)) = X_.col(keep[k]);
            names.push_back(names_[static_cast<std::size_t>(keep[k])]);
        }
        return Dataset(std::move(Xs), y_, std::move(names), response_);
    }

    /// Same response, predictors replaced (names kept).
    Dataset with_predictors(Eigen::MatrixXd X) const {
        return Dataset(std::move(X), y_, names_, response_);
    }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.names_ == b.names_ && a.response_ == b.response_ && a.X_.rows() == b.X_.rows() &&
               a.X_.cols() == b.X_.cols() && a.X_ == b.X_ && a.y_ == b.y_;
    }

private:
    void validate() const {
        if (y_.size() != X_.rows())
            throw DataError("response length " + std::to_string(y_.size()) +
                            " does not match " + std::to_string(X_.rows()) + " rows");
        if (static_cast<Eigen::Index>(names_.size()) != X_.cols())
            throw DataError("expected " + std::to_string(X_.cols()) + " predictor names, got " +
                            std::to_string(names_.size()));
        if (X_.cols() < 1) throw DataError("no predictors");
        if (X_.rows() <= X_.cols())
            throw DataError("need more observations than predictors (n=" +
                            std::to_string(X_.rows()) + ", p=" + std::to_string(X_.cols()) + ")");
        std::unordered_set<std::string> seen;
        for (const auto& name : names_)
            if (!seen.insert(name).second) throw DataError("duplicate column \"" + name + "\"");
        if (!X_.allFinite() || !y_.allFinite()) throw DataError("non-finite value in data");
    }

    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    std::vector<std::string> names_;
    std::string response_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline std::optional<double> parse_double(std::string_view cell) {
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

/// Shortest text that reads back to the identical double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Parses CSV text (header row, comma separated, '.' decimals) into a Dataset.
inline Dataset parse_csv(std::istream& in, std::string_view response) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV input");
    const auto header = detail::split_commas(line);
    std::vector<std::string> columns(header.begin(), header.end());
    {
        std::unordered_set<std::string> seen;
        for (const auto& c : columns)
            if (!seen.insert(c).second) throw DataError("duplicate column \"" + c + "\"");
    }
    const auto it = std::find(columns.begin(), columns.end(), response);
    if (it == columns.end()) throw DataError("missing column \"" + std::string(response) + "\"");
    const auto ycol = static_cast<std::size_t>(it - columns.begin());

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_commas(line);
        if (cells.size() != columns.size())
            throw DataError("row " + std::to_string(line_no) + ": expected " +
                            std::to_string(columns.size()) + " cells, got " +
                            std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = detail::parse_double(cells[c]);
            if (!v)
                throw DataError("row " + std::to_string(line_no) + ", column \"" + columns[c] +
                                "\": non-numeric cell \"" + std::string(cells[c]) + "\"");
            row[c] = *v;
        }
        rows.push_back(std::move(row));
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(columns.size()) - 1;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index j = 0;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c == ycol)
                y(i) = rows[static_cast<std::size_t>(i)][c];
            else
                X(i, j++) = rows[static_cast<std::size_t>(i)][c];
        }
    }
    std::vector<std::string> names;
    for (std::size_t c = 0; c < columns.size(); ++c)
        if (c != ycol) names.push_back(columns[c]);
    return Dataset(std::move(X), std::move(y), std::move(names), std::string(response));
}

inline Dataset load_csv(const std::string& path, std::string_view response) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path + "\"");
    return parse_csv(in, response);
}

/// Writes predictors then the response; optional extra integer column "slice" (1-based).
inline void write_csv(std::ostream& out, const Dataset& data,
                      const std::vector<int>* slice_labels = nullptr) {
    for (const auto& name : data.names()) out << name << ',';
    out << data.response_name();
    if (slice_labels) out << ",slice";
    out << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.p(); ++j) out << detail::format_double(data.X()(i, j)) << ',';
        out << detail::format_double(data.y()(i));
        if (slice_labels) out << ',' << (*slice_labels)[static_cast<std::size_t>(i)] + 1;
        out << '\n';
    }
}

inline void save_csv(const std::string& path, const Dataset& data,
                     const std::vector<int>* slice_labels = nullptr) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write \"" + path + "\"");
    write_csv(out, data, slice_labels);
}

/// Discretized response. Labels are 0-based slice indices in observation order.
struct SlicedResponse {
    std::vector<int> labels;
    int h = 0;
    std::vector<int> counts;
    Eigen::VectorXd props;  // n_y / n
    Eigen::VectorXd roots;  // sqrt(n_y / n)
    bool categorical = false;
    std::vector<std::string> warnings;

    Eigen::Index n() const noexcept { return static_cast<Eigen::Index>(labels.size()); }

    /// Builds counts and proportions from explicit labels; every slice must be used.
    static SlicedResponse from_labels(std::vector<int> labels, int h) {
        if (h < 2) throw ArgumentError("need at least 2 slices");
        SlicedResponse s;
        s.h = h;
        s.counts.assign(static_cast<std::size_t>(h), 0);
        for (int l : labels) {
            if (l < 0 || l >= h) throw ArgumentError("slice label out of range");
            ++s.counts[static_cast<std::size_t>(l)];
        }
        for (int c : s.counts)
            if (c == 0) throw ArgumentError("empty slice");
        const double n = static_cast<double>(labels.size());
        s.props.resize(h);
        for (int k = 0; k < h; ++k) s.props(k) = s.counts[static_cast<std::size_t>(k)] / n;
        s.roots = s.props.cwiseSqrt();
        s.labels = std::move(labels);
        return s;
    }
};

/// Equal-frequency slicing of the sorted response (ties broken by observation
/// index); a response with at most h distinct values is sliced by value.
inline SlicedResponse slice_response(const Eigen::VectorXd& y, int h) {
    const auto n = y.size();
    if (h < 2) throw ArgumentError("need at least 2 slices, got " + std::to_string(h));
    if (h > n)
        throw ArgumentError("more slices (" + std::to_string(h) + ") than observations (" +
                            std::to_string(n) + ")");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return y(a) < y(b); });

    std::vector<double> distinct;
    for (auto i : order)
        if (distinct.empty() || y(i) != distinct.back()) distinct.push_back(y(i));
    if (distinct.size() < 2) throw DataError("response is constant");

    std::vector<int> labels(static_cast<std::size_t>(n));
    if (distinct.size() <= static_cast<std::size_t>(h)) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto pos = std::lower_bound(distinct.begin(), distinct.end(), y(i));
            labels[static_cast<std::size_t>(i)] = static_cast<int>(pos - distinct.begin());
        }
        auto s = SlicedResponse::from_labels(std::move(labels), static_cast<int>(distinct.size()));
        s.categorical = true;
        return s;
    }

    const Eigen::Index base = n / h;
    const Eigen::Index extra = n % h;
    Eigen::Index pos = 0;
    int tied_boundaries = 0;
    for (int k = 0; k < h; ++k) {
        const Eigen::Index size = base + (k < extra ? 1 : 0);
        if (k > 0 && y(order[static_cast<std::size_t>(pos - 1)]) == y(order[static_cast<std::size_t>(pos)]))
            ++tied_boundaries;
        for (Eigen::Index c = 0; c < size; ++c, ++pos)
            labels[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = k;
    }
    auto s = SlicedResponse::from_labels(std::move(labels), h);
    if (tied_boundaries > 0.1 * (h - 1))
        s.warnings.push_back(std::to_string(tied_boundaries) + " of " + std::to_string(h - 1) +
                             " slice boundaries split tied response values");
    return s;
}

}  // namespace sdr
