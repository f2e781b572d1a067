#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "monogp/io_util.hpp"
#include "monogp/rng.hpp"
#include "monogp/types.hpp"

namespace monogp {

enum class Split { train, test };

struct Dataset {
    MatrixXd X;
    VectorXd y;
    std::vector<std::string> x_names;
    std::string y_name;
    std::vector<Split> split;             // one tag per row
    std::map<std::string, VectorXd> aux;  // extra columns (e.g. raw life)
    std::string provenance;

    int rows() const { return static_cast<int>(X.rows()); }
    int dim() const { return static_cast<int>(X.cols()); }

    void validate() const {
        if (y.size() != rows() || static_cast<int>(split.size()) != rows())
            throw data_error("dataset: row count mismatch between X, y, and split tags");
        if (static_cast<int>(x_names.size()) != dim())
            throw data_error("dataset: x_names size mismatch");
        if (!X.allFinite() || !y.allFinite())
            throw data_error("dataset: non-finite values");
        for (const auto& [name, col] : aux)
            if (col.size() != rows() || !col.allFinite())
                throw data_error("dataset: bad aux column " + name);
    }

    Dataset subset(Split tag) const {
        Dataset out;
        out.x_names = x_names;
        out.y_name = y_name;
        out.provenance = provenance;
        std::vector<int> idx;
        for (int i = 0; i < rows(); ++i)
            if (split[i] == tag) idx.push_back(i);
        out.X.resize(idx.size(), dim());
        out.y.resize(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            out.X.row(static_cast<long>(r)) = X.row(idx[r]);
            out.y[static_cast<long>(r)] = y[idx[r]];
        }
        out.split.assign(idx.size(), tag);
        for (const auto& [name, col] : aux) {
            VectorXd sub(idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r) sub[static_cast<long>(r)] = col[idx[r]];
            out.aux[name] = sub;
        }
        return out;
    }
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Example 1: y = logistic(x) + N(0, 0.1^2) on [-3, 3]. Points are equispaced
// by default; random-uniform placement is available by flag. noise_std = 0
// gives the noiseless variant.
inline Dataset gen_logistic(int n = 10, std::uint64_t seed = 0, bool equispaced = true,
                            double noise_std = 0.1) {
    if (n < 2) throw config_error("gen_logistic: n must be >= 2");
    Dataset ds;
    ds.x_names = {"x"};
    ds.y_name = "y";
    ds.provenance = "synthetic logistic";
    ds.X.resize(n, 1);
    ds.y.resize(n);
    Rng rng(seed);
    if (equispaced) {
        for (int i = 0; i < n; ++i) ds.X(i, 0) = -3.0 + 6.0 * i / (n - 1);
    } else {
        std::vector<double> xs(n);
        for (auto& v : xs) v = rng.uniform(-3.0, 3.0);
        std::sort(xs.begin(), xs.end());
        for (int i = 0; i < n; ++i) ds.X(i, 0) = xs[i];
    }
    for (int i = 0; i < n; ++i) ds.y[i] = logistic(ds.X(i, 0)) + noise_std * rng.normal();
    ds.split.assign(n, Split::train);
    return ds;
}

// Yield-strength mean of the heteroscedastic example; d in micrometers,
// converted to meters inside the power law.
inline double hallpetch_mean(double d_um) {
    return 16.47 + 0.0000288 / std::pow(1e-6 * d_um, 1.3);
}

// Heteroscedastic noise std at d (micrometers): sqrt(2.2e10 (1e-6 d)^3), the
// meters reading of the printed variance, which keeps the noise 0.01-0.97 MPa
// across [15, 350] um.
inline double hallpetch_noise_std(double d_um) {
    return std::sqrt(2.2e10 * std::pow(1e-6 * d_um, 3.0));
}

// Example 2: Hall-Petch with O(d^3)-variance noise, d equispaced on [15,350].
inline Dataset gen_hallpetch(int n = 20, std::uint64_t seed = 0, double noise_scale = 1.0) {
    if (n < 2) throw config_error("gen_hallpetch: n must be >= 2");
    Dataset ds;
    ds.x_names = {"d"};
    ds.y_name = "sigma_y";
    ds.provenance = "synthetic hall-petch";
    ds.X.resize(n, 1);
    ds.y.resize(n);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const double d = 15.0 + (350.0 - 15.0) * i / (n - 1);
        ds.X(i, 0) = d;
        ds.y[i] = hallpetch_mean(d) + noise_scale * hallpetch_noise_std(d) * rng.normal();
    }
    ds.split.assign(n, Split::train);
    return ds;
}

// S355N steel fatigue records: 12 training rows at high stress amplitude and
// 13 testing rows below them. Output is log10 of the experimental life (the
// base is configurable); the raw life is kept as an aux column.
inline Dataset fatigue_s355n(double log_base = 10.0) {
    if (!(log_base > 1.0)) throw config_error("fatigue_s355n: log base must be > 1");
    struct Row {
        double stress;
        double life;
        Split tag;
    };
    static const Row rows[] = {
        {674, 2908, Split::train},    {558, 8115, Split::train},
        {556, 10035, Split::train},   {507, 17012, Split::train},
        {483, 19955, Split::train},   {505, 20595, Split::train},
        {498, 23780, Split::train},   {490, 25913, Split::train},
        {484, 28045, Split::train},   {474, 51430, Split::train},
        {469, 52000, Split::train},   {475, 66200, Split::train},
        {427, 77730, Split::test},    {400, 113900, Split::test},
        {411, 117275, Split::test},   {403, 144264, Split::test},
        {390, 192920, Split::test},   {391, 198992, Split::test},
        {379, 243816, Split::test},   {366, 376815, Split::test},
        {369, 396987, Split::test},   {345, 406800, Split::test},
        {342, 1252208, Split::test},  {335, 1444998, Split::test},
        {335, 1528487, Split::test},
    };
    const int n = static_cast<int>(std::size(rows));
    Dataset ds;
    ds.x_names = {"sigma_a"};
    ds.y_name = "log10_n_exp";
    ds.provenance = "S355N steel fatigue records";
    ds.X.resize(n, 1);
    ds.y.resize(n);
    VectorXd raw(n);
    for (int i = 0; i < n; ++i) {
        ds.X(i, 0) = rows[i].stress;
        raw[i] = rows[i].life;
        ds.y[i] = (log_base == 10.0) ? std::log10(rows[i].life)
                                     : std::log(rows[i].life) / std::log(log_base);
        ds.split.push_back(rows[i].tag);
    }
    ds.aux["n_exp"] = raw;
    return ds;
}

// ---- CSV ------------------------------------------------------------------

struct CsvSchema {
    std::vector<std::string> input_cols;
    std::string output_col;
    std::string split_col;  // optional; values "train"/"test"
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& cell, int row, const std::string& col) {
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
        throw data_error("csv: non-numeric cell at row " + std::to_string(row) + ", column " +
                         col + ": '" + cell + "'");
    return v;
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw data_error("csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("csv: empty file " + path);
    const auto header = detail::split_line(line);
    const auto col_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw data_error("csv: missing column " + name + " in " + path);
    };
    std::vector<int> x_idx;
    for (const auto& c : schema.input_cols) x_idx.push_back(col_index(c));
    const int y_idx = col_index(schema.output_col);
    const int s_idx = schema.split_col.empty() ? -1 : col_index(schema.split_col);

    std::vector<std::vector<double>> x_rows;
    std::vector<double> y_rows;
    std::vector<Split> split_rows;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = detail::split_line(line);
        if (cells.size() != header.size())
            throw data_error("csv: row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        std::vector<double> xr;
        for (std::size_t k = 0; k < x_idx.size(); ++k)
            xr.push_back(detail::parse_double(cells[x_idx[k]], row, schema.input_cols[k]));
        x_rows.push_back(std::move(xr));
        y_rows.push_back(detail::parse_double(cells[y_idx], row, schema.output_col));
        if (s_idx >= 0) {
            const std::string& tag = cells[s_idx];
            if (tag == "train")
                split_rows.push_back(Split::train);
            else if (tag == "test")
                split_rows.push_back(Split::test);
            else
                throw data_error("csv: bad split tag '" + tag + "' at row " +
                                 std::to_string(row));
        } else {
            split_rows.push_back(Split::train);
        }
    }
    if (x_rows.empty()) throw data_error("csv: no data rows in " + path);

    Dataset ds;
    ds.x_names = schema.input_cols;
    ds.y_name = schema.output_col;
    ds.provenance = path;
    ds.X.resize(x_rows.size(), x_idx.size());
    ds.y.resize(y_rows.size());
    for (std::size_t i = 0; i < x_rows.size(); ++i) {
        for (std::size_t d = 0; d < x_idx.size(); ++d)
            ds.X(static_cast<long>(i), static_cast<long>(d)) = x_rows[i][d];
        ds.y[static_cast<long>(i)] = y_rows[i];
    }
    ds.split = std::move(split_rows);
    ds.validate();
    return ds;
}

// Columns are written in deterministic order: inputs, output, aux
// (alphabetical), then the split tag.
inline std::string to_csv(const Dataset& ds) {
    std::ostringstream out;
    for (const auto& n : ds.x_names) out << n << ',';
    out << ds.y_name;
    for (const auto& [name, col] : ds.aux) out << ',' << name;
    out << ",split\n";
    for (int i = 0; i < ds.rows(); ++i) {
        for (int d = 0; d < ds.dim(); ++d) out << detail::format_double(ds.X(i, d)) << ',';
        out << detail::format_double(ds.y[i]);
        for (const auto& [name, col] : ds.aux) out << ',' << detail::format_double(col[i]);
        out << ',' << (ds.split[i] == Split::train ? "train" : "test") << '\n';
    }
    return out.str();
}

inline void save_csv(const Dataset& ds, const std::string& path) {
    atomic_write_file(path, to_csv(ds));
}

}  // namespace monogp
