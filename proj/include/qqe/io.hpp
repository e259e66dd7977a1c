#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "qqe/reference.hpp"
#include "qqe/types.hpp"

namespace qqe::io {

/// Parsed CSV: numeric body plus the header row, when the first row holds
/// any non-numeric token.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

/// strtod accepts "inf" and "nan", which the callers then reject as non-finite.
inline std::optional<double> parse_double(const std::string& token) {
    if (token.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) return std::nullopt;
    return v;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>") {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> width;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty() || line.front() == '#') continue;
        auto tokens = detail::split(line);
        std::vector<double> values;
        bool numeric = true;
        for (const auto& t : tokens) {
            const auto v = detail::parse_double(t);
            if (!v) {
                numeric = false;
                break;
            }
            values.push_back(*v);
        }
        if (!numeric) {
            if (table.rows.empty() && table.header.empty()) {
                table.header = std::move(tokens);
                width = table.header.size();
                continue;
            }
            throw Error(ErrorCode::Io, source + ":" + std::to_string(line_no) + ": non-numeric value");
        }
        if (width && values.size() != *width) {
            throw Error(ErrorCode::Io, source + ":" + std::to_string(line_no) + ": expected " + std::to_string(*width) +
                                           " columns, got " + std::to_string(values.size()));
        }
        width = values.size();
        table.rows.push_back(std::move(values));
    }
    return table;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    return parse_csv(in, path);
}

inline Matrix to_matrix(const std::vector<std::vector<double>>& rows, std::size_t first_col, std::size_t ncols) {
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(ncols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < ncols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][first_col + j];
    }
    return m;
}

/// Plain numeric matrix; a header row, if present, is ignored.
inline Matrix read_matrix(const std::string& path) {
    const auto table = read_csv(path);
    if (table.rows.empty()) throw Error(ErrorCode::Io, path + ": no data rows");
    return to_matrix(table.rows, 0, table.rows.front().size());
}

/// One point per row. A final header column named "label" holds integer
/// class ids.
inline Dataset read_dataset(const std::string& path) {
    const auto table = read_csv(path);
    if (table.rows.empty()) throw Error(ErrorCode::TooFewPoints, path + ": no data rows");
    const std::size_t width = table.rows.front().size();
    const bool labelled = !table.header.empty() && table.header.back() == "label";
    if (labelled && width < 2) throw Error(ErrorCode::Io, path + ": label column without coordinates");
    const std::size_t d = labelled ? width - 1 : width;
    Matrix points = to_matrix(table.rows, 0, d);
    if (!labelled) return validate_dataset(std::move(points));
    std::vector<long long> labels;
    for (const auto& row : table.rows) {
        const double v = row.back();
        if (!std::isfinite(v) || v != std::floor(v)) throw Error(ErrorCode::Io, path + ": labels must be integers");
        labels.push_back(static_cast<long long>(v));
    }
    return validate_dataset(std::move(points), std::move(labels));
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Writes one row per point with header x0..x{d-1}, plus a "label" column
/// when labels are given.
inline void write_points(std::ostream& out, const Eigen::Ref<const Matrix>& points,
                         const std::vector<long long>* labels = nullptr) {
    for (Index l = 0; l < points.cols(); ++l) out << (l ? "," : "") << 'x' << l;
    if (labels) out << ",label";
    out << '\n';
    for (Index i = 0; i < points.rows(); ++i) {
        for (Index l = 0; l < points.cols(); ++l) out << (l ? "," : "") << format_double(points(i, l));
        if (labels) out << ',' << (*labels)[static_cast<std::size_t>(i)];
        out << '\n';
    }
}

inline void write_points(const std::string& path, const Eigen::Ref<const Matrix>& points,
                         const std::vector<long long>* labels = nullptr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    write_points(out, points, labels);
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
    if (!ds.labels) return write_points(path, ds.points);
    std::vector<long long> original;
    for (int c : *ds.labels) original.push_back(ds.label_values[static_cast<std::size_t>(c)]);
    write_points(path, ds.points, &original);
}

/// Two columns: value, cumulative probability.
inline CdfTable read_cdf_table(const std::string& path) {
    const auto table = read_csv(path);
    if (table.rows.empty() || table.rows.front().size() != 2) {
        throw Error(ErrorCode::InvalidTable, path + ": expected two columns (value, cumulative_probability)");
    }
    std::vector<double> values, probs;
    for (const auto& r : table.rows) {
        values.push_back(r[0]);
        probs.push_back(r[1]);
    }
    return CdfTable(std::move(values), std::move(probs));
}

// ---------------------------------------------------------------------------
// Config JSON; keys mirror TransformConfig field names.

inline nlohmann::json to_json(const TransformConfig& c) {
    nlohmann::json j;
    j["lambda"] = c.lambda;
    j["eta"] = c.eta;
    j["k"] = c.k;
    j["mode"] = to_string(c.mode);
    j["supervised"] = c.supervised;
    j["max_iters"] = c.max_iters;
    j["rel_cost_tol"] = c.rel_cost_tol;
    j["rematch_every"] = c.rematch_every ? nlohmann::json(*c.rematch_every) : nlohmann::json(nullptr);
    j["snapshot_every"] = c.snapshot_every;
    j["epsilon_dist"] = c.epsilon_dist;
    j["max_match_rounds"] = c.max_match_rounds;
    return j;
}

inline Mode parse_mode(const std::string& s) {
    if (s == "exact") return Mode::Exact;
    if (s == "shape") return Mode::Shape;
    throw Error(ErrorCode::InvalidParameter, "mode must be 'exact' or 'shape', got '" + s + "'");
}

/// Overwrites the fields present in `j`; unknown keys are rejected.
inline void apply_json(const nlohmann::json& j, TransformConfig& c) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidParameter, "config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "lambda") c.lambda = value.get<double>();
            else if (key == "eta") c.eta = value.get<double>();
            else if (key == "k") c.k = value.get<int>();
            else if (key == "mode") c.mode = parse_mode(value.get<std::string>());
            else if (key == "supervised") c.supervised = value.get<bool>();
            else if (key == "max_iters") c.max_iters = value.get<int>();
            else if (key == "rel_cost_tol") c.rel_cost_tol = value.get<double>();
            else if (key == "rematch_every") c.rematch_every = value.is_null() ? std::nullopt : std::optional<int>(value.get<int>());
            else if (key == "snapshot_every") c.snapshot_every = value.get<int>();
            else if (key == "epsilon_dist") c.epsilon_dist = value.get<double>();
            else if (key == "max_match_rounds") c.max_match_rounds = value.get<int>();
            else throw Error(ErrorCode::InvalidParameter, "unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidParameter, std::string("bad config value: ") + e.what());
    }
}

inline TransformConfig read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    TransformConfig c;
    try {
        apply_json(nlohmann::json::parse(in), c);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidParameter, path + ": " + e.what());
    }
    return c;
}

}  // namespace qqe::io
