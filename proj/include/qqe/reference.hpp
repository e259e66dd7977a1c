#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qqe/random.hpp"
#include "qqe/types.hpp"

namespace qqe {

// ---------------------------------------------------------------------------
// Tabulated CDF

/// Piecewise-linear CDF through (value, probability) knots. F(x) = 0 below
/// the first knot, so a first probability above zero is a point mass there.
class CdfTable {
public:
    CdfTable() = default;
    CdfTable(std::vector<double> values, std::vector<double> probabilities)
        : values_(std::move(values)), probs_(std::move(probabilities)) {
        validate();
    }

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& probabilities() const { return probs_; }

    /// Smallest x with F(x) >= u, interpolating linearly between knots.
    double inverse(double u) const {
        const auto it = std::lower_bound(probs_.begin(), probs_.end(), u);
        if (it == probs_.begin()) return values_.front();
        if (it == probs_.end()) return values_.back();
        const auto k = static_cast<std::size_t>(it - probs_.begin());
        const double p0 = probs_[k - 1], p1 = probs_[k];
        const double t = (u - p0) / (p1 - p0);
        return values_[k - 1] + t * (values_[k] - values_[k - 1]);
    }

private:
    void validate() const {
        if (values_.empty() || values_.size() != probs_.size()) {
            throw Error(ErrorCode::InvalidTable, "CDF table needs matching, non-empty value and probability columns");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i]) || !std::isfinite(probs_[i])) {
                throw Error(ErrorCode::InvalidTable, "CDF table has non-finite entries");
            }
            if (probs_[i] < 0.0 || probs_[i] > 1.0 + 1e-12) {
                throw Error(ErrorCode::InvalidTable, "CDF probabilities must lie in [0, 1]");
            }
            if (i > 0 && !(values_[i] > values_[i - 1])) {
                throw Error(ErrorCode::InvalidTable, "CDF values must be strictly increasing");
            }
            if (i > 0 && probs_[i] < probs_[i - 1]) {
                throw Error(ErrorCode::InvalidTable, "CDF probabilities must be non-decreasing");
            }
        }
        if (std::abs(probs_.back() - 1.0) > 1e-9) throw Error(ErrorCode::InvalidTable, "CDF must end at probability 1");
    }

    std::vector<double> values_;
    std::vector<double> probs_;
};

inline std::vector<double> sample_inverse_cdf(const CdfTable& table, Index n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = table.inverse(rng.uniform_open());
    return out;
}

// ---------------------------------------------------------------------------
// Named shapes

inline const std::vector<std::string>& shape_names() {
    static const std::vector<std::string> names = {"uniform-rect", "gaussian", "gmm",      "ring",    "filled-circle",
                                                   "s-shape",      "helix",    "triangle", "diamond", "thick-square"};
    return names;
}

namespace detail {

inline void require_dim(std::string_view name, Index d, Index expected) {
    if (d != expected) {
        throw Error(ErrorCode::DimensionMismatch, std::string(name) + " is " + std::to_string(expected) +
                                                      "-dimensional, requested d=" + std::to_string(d));
    }
}

inline void require_param_count(std::string_view name, const std::vector<double>& p, std::initializer_list<std::size_t> allowed) {
    for (std::size_t a : allowed) {
        if (p.size() == a) return;
    }
    throw Error(ErrorCode::InvalidParameter, std::string(name) + ": unexpected number of parameters (" +
                                                 std::to_string(p.size()) + ")");
}

inline double param(const std::vector<double>& p, std::size_t i, double fallback) { return i < p.size() ? p[i] : fallback; }

// Rejection sampling in a bounding box. `acceptance` is the area ratio of
// the region to its box and must be at least 0.25.
template <typename Inside>
Eigen::RowVector2d rejection_sample(Rng& rng, double x0, double x1, double y0, double y1, double acceptance, Inside inside) {
    if (acceptance < 0.25) throw Error(ErrorCode::InvalidParameter, "rejection region too small for its bounding box");
    while (true) {
        const double x = rng.uniform(x0, x1);
        const double y = rng.uniform(y0, y1);
        if (inside(x, y)) return {x, y};
    }
}

}  // namespace detail

/// Draws n points from a named generator. Parameters (defaults in brackets):
///   uniform-rect  lo,hi for every axis, or lo_1,hi_1,...,lo_d,hi_d   [0,1]
///   gaussian      mean,sd for every axis, or mean_1..mean_d,sd       [0,1]
///   gmm           mean_1(d values),...,mean_K(d values),sd           [(-2,0),(2,0),0.5]
///   ring          r_in,r_out (2-D)                                   [0.8,1]
///   filled-circle r (2-D)                                            [1]
///   s-shape       thickness (2-D)                                    [0.3]
///   helix         turns,radius,noise (3-D)                           [2,1,0.05]
///   triangle      side (2-D, equilateral, base centered at origin)   [2]
///   diamond       r, |x|+|y| <= r (2-D)                              [1]
///   thick-square  inner,outer half-widths (2-D)                      [0.8,1]
inline Matrix shape_sampler(const std::string& name, const std::vector<double>& params, Index n, Index d, std::uint64_t seed) {
    using detail::param;
    if (n < 1) throw Error(ErrorCode::InvalidParameter, "sample size must be positive");
    if (d < 1) throw Error(ErrorCode::InvalidParameter, "dimension must be positive");
    for (double v : params) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParameter, name + ": non-finite parameter");
    }
    Rng rng(seed);
    Matrix out(n, d);
    constexpr double pi = std::numbers::pi;

    if (name == "uniform-rect") {
        std::vector<std::pair<double, double>> box(static_cast<std::size_t>(d));
        if (params.empty() || params.size() == 2) {
            const double lo = param(params, 0, 0.0), hi = param(params, 1, 1.0);
            std::fill(box.begin(), box.end(), std::make_pair(lo, hi));
        } else if (params.size() == static_cast<std::size_t>(2 * d)) {
            for (Index l = 0; l < d; ++l) box[static_cast<std::size_t>(l)] = {params[static_cast<std::size_t>(2 * l)], params[static_cast<std::size_t>(2 * l + 1)]};
        } else {
            throw Error(ErrorCode::InvalidParameter, "uniform-rect expects lo,hi or 2*d bounds");
        }
        for (const auto& [lo, hi] : box) {
            if (!(hi > lo)) throw Error(ErrorCode::InvalidParameter, "uniform-rect needs hi > lo");
        }
        for (Index i = 0; i < n; ++i) {
            for (Index l = 0; l < d; ++l) out(i, l) = rng.uniform(box[static_cast<std::size_t>(l)].first, box[static_cast<std::size_t>(l)].second);
        }
    } else if (name == "gaussian") {
        Vector mean = Vector::Zero(d);
        double sd = 1.0;
        if (params.size() == 2) {
            mean.setConstant(params[0]);
            sd = params[1];
        } else if (params.size() == static_cast<std::size_t>(d + 1)) {
            for (Index l = 0; l < d; ++l) mean(l) = params[static_cast<std::size_t>(l)];
            sd = params.back();
        } else if (!params.empty()) {
            throw Error(ErrorCode::InvalidParameter, "gaussian expects mean,sd or d means followed by sd");
        }
        if (!(sd > 0.0)) throw Error(ErrorCode::InvalidParameter, "gaussian needs sd > 0");
        for (Index i = 0; i < n; ++i) {
            for (Index l = 0; l < d; ++l) out(i, l) = rng.normal(mean(l), sd);
        }
    } else if (name == "gmm") {
        std::vector<double> p = params;
        if (p.empty()) {
            if (d != 2) throw Error(ErrorCode::InvalidParameter, "gmm defaults are 2-D; pass component means");
            p = {-2.0, 0.0, 2.0, 0.0, 0.5};
        }
        if (p.size() < static_cast<std::size_t>(d + 1) || (p.size() - 1) % static_cast<std::size_t>(d) != 0) {
            throw Error(ErrorCode::InvalidParameter, "gmm expects K*d component means followed by sd");
        }
        const double sd = p.back();
        if (!(sd > 0.0)) throw Error(ErrorCode::InvalidParameter, "gmm needs sd > 0");
        const auto components = (p.size() - 1) / static_cast<std::size_t>(d);
        for (Index i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(rng.index(components));
            for (Index l = 0; l < d; ++l) out(i, l) = rng.normal(p[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(l)], sd);
        }
    } else if (name == "ring" || name == "filled-circle") {
        detail::require_dim(name, d, 2);
        double r_in = 0.0, r_out = 1.0;
        if (name == "ring") {
            detail::require_param_count(name, params, {0, 2});
            r_in = param(params, 0, 0.8);
            r_out = param(params, 1, 1.0);
        } else {
            detail::require_param_count(name, params, {0, 1});
            r_out = param(params, 0, 1.0);
        }
        if (!(r_in >= 0.0 && r_out > r_in)) throw Error(ErrorCode::InvalidParameter, name + " needs 0 <= r_in < r_out");
        // Inverse CDF of the radius for uniform area density.
        for (Index i = 0; i < n; ++i) {
            const double r = std::sqrt(rng.uniform(r_in * r_in, r_out * r_out));
            const double t = rng.uniform(0.0, 2.0 * pi);
            out(i, 0) = std::clamp(r, r_in, r_out) * std::cos(t);
            out(i, 1) = std::clamp(r, r_in, r_out) * std::sin(t);
        }
    } else if (name == "s-shape") {
        detail::require_dim(name, d, 2);
        detail::require_param_count(name, params, {0, 1});
        const double thickness = param(params, 0, 0.3);
        if (!(thickness >= 0.0)) throw Error(ErrorCode::InvalidParameter, "s-shape needs thickness >= 0");
        // Two 270-degree arcs of radius 0.75 joined at the origin; x is then
        // stretched by 2 so both axes span about [-1.5, 1.5] with mean zero.
        constexpr double radius = 0.75;
        constexpr double sweep = 1.5 * pi;
        for (Index i = 0; i < n; ++i) {
            const double s = rng.uniform(-1.0, 1.0);
            const double r = radius + rng.uniform(-0.5, 0.5) * thickness;
            // Upper arc runs counter-clockwise from (R, R) over the top to the
            // origin; the lower arc is its reflection through the origin.
            const double a = std::abs(s) * sweep;
            double x = r * std::cos(a);
            double y = radius + r * std::sin(a);
            if (s < 0.0) {
                x = -x;
                y = -y;
            }
            out(i, 0) = 2.0 * x;
            out(i, 1) = y;
        }
    } else if (name == "helix") {
        detail::require_dim(name, d, 3);
        detail::require_param_count(name, params, {0, 3});
        const double turns = param(params, 0, 2.0), radius = param(params, 1, 1.0), noise = param(params, 2, 0.05);
        if (!(turns > 0.0 && radius > 0.0 && noise >= 0.0)) throw Error(ErrorCode::InvalidParameter, "helix needs turns, radius > 0");
        for (Index i = 0; i < n; ++i) {
            const double s = rng.uniform();
            const double t = 2.0 * pi * turns * s;
            out(i, 0) = radius * std::cos(t) + noise * rng.normal();
            out(i, 1) = radius * std::sin(t) + noise * rng.normal();
            out(i, 2) = 2.0 * s - 1.0 + noise * rng.normal();
        }
    } else if (name == "triangle") {
        detail::require_dim(name, d, 2);
        detail::require_param_count(name, params, {0, 1});
        const double side = param(params, 0, 2.0);
        if (!(side > 0.0)) throw Error(ErrorCode::InvalidParameter, "triangle needs side > 0");
        const double h = side * std::sqrt(3.0) / 2.0;
        const double half = side / 2.0;
        for (Index i = 0; i < n; ++i) {
            out.row(i) = detail::rejection_sample(rng, -half, half, 0.0, h, 0.5,
                                                  [&](double x, double y) { return y <= h * (1.0 - std::abs(x) / half); });
        }
    } else if (name == "diamond") {
        detail::require_dim(name, d, 2);
        detail::require_param_count(name, params, {0, 1});
        const double r = param(params, 0, 1.0);
        if (!(r > 0.0)) throw Error(ErrorCode::InvalidParameter, "diamond needs r > 0");
        for (Index i = 0; i < n; ++i) {
            out.row(i) = detail::rejection_sample(rng, -r, r, -r, r, 0.5,
                                                  [&](double x, double y) { return std::abs(x) + std::abs(y) <= r; });
        }
    } else if (name == "thick-square") {
        detail::require_dim(name, d, 2);
        detail::require_param_count(name, params, {0, 2});
        const double inner = param(params, 0, 0.8), outer = param(params, 1, 1.0);
        if (!(inner >= 0.0 && outer > inner)) throw Error(ErrorCode::InvalidParameter, "thick-square needs 0 <= inner < outer");
        // Split the frame into top/bottom strips (full width) and left/right
        // strips (inner height) and pick one by area.
        const double band = outer - inner;
        const double horizontal_area = 2.0 * outer * band;
        const double vertical_area = 2.0 * inner * band;
        const double total = 2.0 * (horizontal_area + vertical_area);
        for (Index i = 0; i < n; ++i) {
            const double pick = rng.uniform() * total;
            const double a = rng.uniform(), b = rng.uniform();
            if (pick < 2.0 * horizontal_area) {
                out(i, 0) = -outer + 2.0 * outer * a;
                const double y = inner + band * b;
                out(i, 1) = pick < horizontal_area ? y : -y;
            } else {
                const double x = inner + band * a;
                out(i, 0) = pick < 2.0 * horizontal_area + vertical_area ? x : -x;
                out(i, 1) = -inner + 2.0 * inner * b;
            }
        }
    } else {
        throw Error(ErrorCode::UnknownShape, "unknown shape '" + name + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reference specifications

struct StandardFamily {
    std::string name;
    std::vector<double> params;
};

struct EmpiricalSample {
    Matrix points;
};

/// One table per dimension.
struct CdfTables {
    std::vector<CdfTable> per_dimension;
};

struct ReferenceSpec {
    std::variant<StandardFamily, EmpiricalSample, CdfTables> kind;
    std::uint64_t seed = 0;
};

/// Parses "name[:p1,p2,...]".
inline StandardFamily parse_ref_dist(std::string_view text) {
    StandardFamily out;
    const auto colon = text.find(':');
    out.name = std::string(text.substr(0, colon));
    if (std::find(shape_names().begin(), shape_names().end(), out.name) == shape_names().end()) {
        throw Error(ErrorCode::UnknownShape, "unknown distribution '" + out.name + "'");
    }
    if (colon == std::string_view::npos) return out;
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        std::string token(rest.substr(0, comma));
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (token.empty() || end != token.c_str() + token.size()) {
            throw Error(ErrorCode::InvalidParameter, "bad parameter '" + token + "' in '" + std::string(text) + "'");
        }
        out.params.push_back(v);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

/// Keeps the sample when m = n, subsamples without replacement when m > n,
/// and appends n - m bootstrap rows after all originals when m < n.
inline Matrix resize_reference(const Eigen::Ref<const Matrix>& sample, Index n, std::uint64_t seed) {
    const Index m = sample.rows();
    if (m < 1) throw Error(ErrorCode::EmptySample, "reference sample is empty");
    if (m == n) return sample;
    Rng rng(seed);
    if (m > n) {
        // Partial Fisher-Yates over row indices.
        std::vector<Index> idx(static_cast<std::size_t>(m));
        for (Index i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (Index i = 0; i < n; ++i) {
            const auto j = i + static_cast<Index>(rng.index(static_cast<std::uint64_t>(m - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        idx.resize(static_cast<std::size_t>(n));
        return gather_rows(sample, idx);
    }
    Matrix out(n, sample.cols());
    out.topRows(m) = sample;
    for (Index i = m; i < n; ++i) out.row(i) = sample.row(static_cast<Index>(rng.index(static_cast<std::uint64_t>(m))));
    return out;
}

inline Matrix sample_reference(const ReferenceSpec& spec, Index n, Index d, std::uint64_t seed) {
    if (n < 1) throw Error(ErrorCode::InvalidParameter, "sample size must be positive");
    if (const auto* family = std::get_if<StandardFamily>(&spec.kind)) {
        return shape_sampler(family->name, family->params, n, d, seed);
    }
    if (const auto* empirical = std::get_if<EmpiricalSample>(&spec.kind)) {
        if (empirical->points.cols() != d) {
            throw Error(ErrorCode::DimensionMismatch, "reference sample has d=" + std::to_string(empirical->points.cols()) +
                                                          ", data has d=" + std::to_string(d));
        }
        return resize_reference(empirical->points, n, seed);
    }
    const auto& tables = std::get<CdfTables>(spec.kind).per_dimension;
    if (static_cast<Index>(tables.size()) != d) {
        throw Error(ErrorCode::DimensionMismatch, "got " + std::to_string(tables.size()) + " CDF tables for d=" + std::to_string(d));
    }
    Matrix out(n, d);
    for (Index l = 0; l < d; ++l) {
        // Each axis is drawn independently from its own stream.
        Rng stream(seed, static_cast<std::uint64_t>(l) + 1);
        const auto column = sample_inverse_cdf(tables[static_cast<std::size_t>(l)], n, stream.next());
        for (Index i = 0; i < n; ++i) out(i, l) = column[static_cast<std::size_t>(i)];
    }
    return out;
}

}  // namespace qqe
