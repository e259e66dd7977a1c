#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qqe {

/// Point matrices are stored one point per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultEpsilon = 1e-12;

enum class ErrorCode {
    NonFinite,
    TooFewPoints,
    ClassTooSmall,
    LabelLengthMismatch,
    InvalidScheme,
    EmptySample,
    ShapeMismatch,
    RankDeficient,
    DimensionMismatch,
    InvalidTable,
    UnknownShape,
    InvalidParameter,
    KTooLarge,
    MissingClassReference,
    DegenerateReference,
    RowCountMismatch,
    RankTooLow,
    Io,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::ClassTooSmall: return "ClassTooSmall";
        case ErrorCode::LabelLengthMismatch: return "LabelLengthMismatch";
        case ErrorCode::InvalidScheme: return "InvalidScheme";
        case ErrorCode::EmptySample: return "EmptySample";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidTable: return "InvalidTable";
        case ErrorCode::UnknownShape: return "UnknownShape";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::MissingClassReference: return "MissingClassReference";
        case ErrorCode::DegenerateReference: return "DegenerateReference";
        case ErrorCode::RowCountMismatch: return "RowCountMismatch";
        case ErrorCode::RankTooLow: return "RankTooLow";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

// ---------------------------------------------------------------------------
// Dataset

/// Observed sample plus optional class labels. Labels are dense ids 0..C-1;
/// `label_values[c]` holds the original integer id of class c.
struct Dataset {
    Matrix points;
    std::optional<std::vector<int>> labels;
    std::vector<long long> label_values;

    Index n() const { return points.rows(); }
    Index d() const { return points.cols(); }
    int num_classes() const { return static_cast<int>(label_values.size()); }

    /// Row indices of each class, in ascending order.
    std::vector<std::vector<Index>> class_members() const {
        std::vector<std::vector<Index>> out(label_values.size());
        if (labels) {
            for (Index i = 0; i < n(); ++i) out[static_cast<std::size_t>((*labels)[i])].push_back(i);
        }
        return out;
    }
};

inline Dataset validate_dataset(Matrix points, std::optional<std::vector<long long>> raw_labels = std::nullopt) {
    if (points.rows() < 2) throw Error(ErrorCode::TooFewPoints, "dataset needs at least 2 points");
    if (points.cols() < 1) throw Error(ErrorCode::ShapeMismatch, "dataset needs at least 1 dimension");
    if (!points.allFinite()) throw Error(ErrorCode::NonFinite, "dataset contains NaN or Inf");

    Dataset ds;
    ds.points = std::move(points);
    if (!raw_labels) return ds;

    if (static_cast<Index>(raw_labels->size()) != ds.points.rows()) {
        throw Error(ErrorCode::LabelLengthMismatch, "expected " + std::to_string(ds.points.rows()) + " labels, got " +
                                                        std::to_string(raw_labels->size()));
    }
    std::map<long long, int> counts;
    for (long long v : *raw_labels) ++counts[v];
    std::map<long long, int> dense;
    for (const auto& [value, count] : counts) {
        if (count < 2) {
            throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(value) + " has " + std::to_string(count) +
                                                      " member(s); at least 2 required");
        }
        dense[value] = static_cast<int>(ds.label_values.size());
        ds.label_values.push_back(value);
    }
    std::vector<int> remapped;
    remapped.reserve(raw_labels->size());
    for (long long v : *raw_labels) remapped.push_back(dense[v]);
    ds.labels = std::move(remapped);
    return ds;
}

/// Copies the given rows of `m` in order.
inline Matrix gather_rows(const Eigen::Ref<const Matrix>& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class Mode { Exact, Shape };

inline const char* to_string(Mode m) { return m == Mode::Exact ? "exact" : "shape"; }

struct TransformConfig {
    double lambda = 0.1;
    double eta = 0.01;
    int k = 10;
    Mode mode = Mode::Exact;
    bool supervised = false;
    int max_iters = 500;
    double rel_cost_tol = 1e-6;
    std::optional<int> rematch_every;
    int snapshot_every = 1;
    double epsilon_dist = kDefaultEpsilon;
    int max_match_rounds = 50;

    /// Checks the value invariants. The k < n check needs the sample size.
    void validate(std::optional<Index> n = std::nullopt) const {
        auto require = [](bool ok, const std::string& msg) {
            if (!ok) throw Error(ErrorCode::InvalidParameter, msg);
        };
        require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be non-negative");
        require(std::isfinite(eta) && eta > 0.0, "eta must be positive");
        require(k >= 1, "k must be positive");
        require(max_iters >= 1, "max_iters must be positive");
        require(rel_cost_tol > 0.0, "rel_cost_tol must be positive");
        require(!rematch_every || *rematch_every >= 1, "rematch_every must be positive");
        require(snapshot_every >= 1, "snapshot_every must be positive");
        require(epsilon_dist > 0.0, "epsilon_dist must be positive");
        require(max_match_rounds >= 1, "max_match_rounds must be positive");
        if (n && k >= *n) {
            throw Error(ErrorCode::KTooLarge,
                        "k=" + std::to_string(k) + " must be smaller than the sample size " + std::to_string(*n));
        }
    }
};

// ---------------------------------------------------------------------------
// Matching

/// A permutation sigma: sigma[i] is the reference row matched to observed row i.
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<Index> map) : map_(std::move(map)) {
        std::vector<Index> sorted = map_;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] != static_cast<Index>(i)) throw std::invalid_argument("sigma is not a bijection");
        }
    }

    static Permutation identity(Index n) {
        std::vector<Index> m(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
        return Permutation(std::move(m));
    }

    Index size() const { return static_cast<Index>(map_.size()); }
    Index operator[](Index i) const { return map_[static_cast<std::size_t>(i)]; }
    const std::vector<Index>& values() const { return map_; }

    Permutation inverse() const {
        std::vector<Index> inv(map_.size());
        for (std::size_t i = 0; i < map_.size(); ++i) inv[static_cast<std::size_t>(map_[i])] = static_cast<Index>(i);
        return Permutation(std::move(inv));
    }

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<Index> map_;
};

/// Rows of `y` reordered so that row i is y[sigma[i]].
inline Matrix apply_permutation(const Eigen::Ref<const Matrix>& y, const Permutation& sigma) {
    return gather_rows(y, sigma.values());
}

struct MatchResult {
    Permutation sigma;
    Matrix A;
    Vector b;
    int iterations = 0;
    bool converged = false;
    bool rank_deficient = false;
    /// Matching objective after every half-step (assignment, then regression).
    std::vector<double> objective_trace;
};

// ---------------------------------------------------------------------------
// Regularization graph

struct NeighborGraph {
    Index k = 0;
    /// n x k neighbor indices, nearest first.
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> neighbors;
    /// n x k initial distances, clamped below at epsilon.
    Matrix d0;
    /// n x k weights 1/d0.
    Matrix weights;
    /// Sum of all stored d0.
    double a = 0.0;

    Index n() const { return neighbors.rows(); }
};

// ---------------------------------------------------------------------------
// Optimizer output

enum class StopReason { MaxIters, CostConverged, Diverged };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::MaxIters: return "MaxIters";
        case StopReason::CostConverged: return "CostConverged";
        case StopReason::Diverged: return "Diverged";
    }
    return "Unknown";
}

struct Snapshot {
    int iteration = 0;
    Matrix points;
    double cost = 0.0;
};

struct PhaseTimings {
    double matching_seconds = 0.0;
    double optimization_seconds = 0.0;
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    Matrix final_points;
    StopReason stop_reason = StopReason::MaxIters;
    /// Reference row matched to each output row (y_sigma(i)).
    Matrix matched_reference;
    PhaseTimings timings;

    int iterations() const { return snapshots.empty() ? 0 : snapshots.back().iteration; }
    double initial_cost() const { return snapshots.front().cost; }
    double final_cost() const { return snapshots.back().cost; }
};

}  // namespace qqe
