#pragma once

#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <vector>

#include "qqe/knn.hpp"
#include "qqe/line_fit.hpp"
#include "qqe/matching.hpp"
#include "qqe/objective.hpp"
#include "qqe/types.hpp"

namespace qqe {

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline Matrix targets_for(Mode mode, const Matrix& x, const Matrix& matched) {
    return mode == Mode::Exact ? matched : fit_qq_lines(x, matched).mu;
}

}  // namespace detail

/// Moves x0 toward the reference distribution (exact mode) or toward its
/// shape (shape mode) while keeping k-NN distances of x0 close to their
/// initial values. `reference` must already have n rows.
inline Trajectory transform(const Eigen::Ref<const Matrix>& x0, const Eigen::Ref<const Matrix>& reference,
                            const TransformConfig& config) {
    const Index n = x0.rows();
    if (reference.rows() != n || reference.cols() != x0.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "reference must have the same shape as the data (resize it first)");
    }
    if (!x0.allFinite() || !reference.allFinite()) throw Error(ErrorCode::NonFinite, "input contains NaN or Inf");
    config.validate(n);
    const double eps = config.epsilon_dist;

    Trajectory traj;
    const auto match_start = std::chrono::steady_clock::now();
    MatchResult match = fuzzy_match(x0, reference, config.max_match_rounds);
    traj.timings.matching_seconds += detail::seconds_since(match_start);
    Matrix matched = apply_permutation(reference, match.sigma);

    const auto opt_start = std::chrono::steady_clock::now();
    const NeighborGraph graph = build_knn_graph(x0, config.k, eps);

    Matrix x = x0;
    Matrix targets = detail::targets_for(config.mode, x, matched);
    const double initial_cost = qqe_cost(x, targets, graph, config.lambda);
    traj.snapshots.push_back({0, x, initial_cost});
    const double divergence_limit = 1e6 * std::max(initial_cost, eps);

    double previous_cost = initial_cost;
    traj.stop_reason = StopReason::MaxIters;
    for (int it = 1; it <= config.max_iters; ++it) {
        if (config.rematch_every && it % *config.rematch_every == 0) {
            const auto t0 = std::chrono::steady_clock::now();
            match = fuzzy_match(x, reference, config.max_match_rounds);
            matched = apply_permutation(reference, match.sigma);
            targets = detail::targets_for(config.mode, x, matched);
            traj.timings.matching_seconds += detail::seconds_since(t0);
        }

        const Matrix grad = qqe_gradient(x, targets, graph, config.lambda, eps);
        const Matrix hess = qqe_hessian_diag(x, targets, graph, config.lambda, eps);
        x = quasi_newton_step(x, grad, hess, config.eta, eps);
        if (config.mode == Mode::Shape) targets = fit_qq_lines(x, matched).mu;
        const double cost = qqe_cost(x, targets, graph, config.lambda);

        const bool diverged = !std::isfinite(cost) || !x.allFinite() || cost > divergence_limit;
        const bool converged =
            !diverged && std::abs(cost - previous_cost) / std::max(previous_cost, eps) < config.rel_cost_tol;
        const bool last = diverged || converged || it == config.max_iters;
        if (it % config.snapshot_every == 0 || last) traj.snapshots.push_back({it, x, cost});
        if (diverged) {
            traj.stop_reason = StopReason::Diverged;
            break;
        }
        if (converged) {
            traj.stop_reason = StopReason::CostConverged;
            break;
        }
        previous_cost = cost;
    }
    traj.timings.optimization_seconds = detail::seconds_since(opt_start);
    traj.final_points = traj.snapshots.back().points;
    traj.matched_reference = std::move(matched);
    return traj;
}

/// Runs `transform` independently for each class of `data` against its own
/// reference sample (n_c rows each, indexed by dense class id). Class runs
/// execute concurrently; their snapshots are merged on the union of recorded
/// iteration indices, with a finished class contributing its final state.
inline Trajectory transform_supervised(const Dataset& data, const std::vector<Matrix>& class_references,
                                       const TransformConfig& config) {
    if (!data.labels) throw Error(ErrorCode::MissingClassReference, "supervised transform needs labels");
    const auto members = data.class_members();
    if (class_references.size() < members.size()) {
        throw Error(ErrorCode::MissingClassReference, "got " + std::to_string(class_references.size()) +
                                                          " class references for " + std::to_string(members.size()) +
                                                          " classes");
    }
    config.validate();
    for (std::size_t c = 0; c < members.size(); ++c) {
        const auto nc = static_cast<Index>(members[c].size());
        if (nc < config.k + 1) {
            throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(data.label_values[c]) + " has " +
                                                      std::to_string(nc) + " points; k=" + std::to_string(config.k) +
                                                      " needs at least k+1");
        }
        if (class_references[c].rows() != nc || class_references[c].cols() != data.d()) {
            throw Error(ErrorCode::ShapeMismatch,
                        "reference for class " + std::to_string(data.label_values[c]) + " must be " + std::to_string(nc) +
                            " x " + std::to_string(data.d()));
        }
    }

    std::vector<std::future<Trajectory>> jobs;
    for (std::size_t c = 0; c < members.size(); ++c) {
        jobs.push_back(std::async(std::launch::async, [&, c] {
            return transform(gather_rows(data.points, members[c]), class_references[c], config);
        }));
    }
    std::vector<Trajectory> parts;
    for (auto& job : jobs) parts.push_back(job.get());

    std::map<int, int> union_iters;
    for (const auto& p : parts) {
        for (const auto& s : p.snapshots) union_iters[s.iteration] = 0;
    }

    Trajectory merged;
    merged.matched_reference.resize(data.n(), data.d());
    for (const auto& [iter, unused] : union_iters) {
        Snapshot snap{iter, Matrix(data.n(), data.d()), 0.0};
        for (std::size_t c = 0; c < parts.size(); ++c) {
            const auto& snaps = parts[c].snapshots;
            // Latest class snapshot at or before this iteration.
            auto it = std::upper_bound(snaps.begin(), snaps.end(), iter,
                                       [](int value, const Snapshot& s) { return value < s.iteration; });
            const Snapshot& src = *std::prev(it);
            for (std::size_t r = 0; r < members[c].size(); ++r) snap.points.row(members[c][r]) = src.points.row(static_cast<Index>(r));
            snap.cost += src.cost;
        }
        merged.snapshots.push_back(std::move(snap));
    }

    bool any_diverged = false, any_max = false;
    for (std::size_t c = 0; c < parts.size(); ++c) {
        any_diverged = any_diverged || parts[c].stop_reason == StopReason::Diverged;
        any_max = any_max || parts[c].stop_reason == StopReason::MaxIters;
        merged.timings.matching_seconds += parts[c].timings.matching_seconds;
        merged.timings.optimization_seconds += parts[c].timings.optimization_seconds;
        for (std::size_t r = 0; r < members[c].size(); ++r) {
            merged.matched_reference.row(members[c][r]) = parts[c].matched_reference.row(static_cast<Index>(r));
        }
    }
    merged.stop_reason = any_diverged ? StopReason::Diverged : (any_max ? StopReason::MaxIters : StopReason::CostConverged);
    merged.final_points = merged.snapshots.back().points;
    return merged;
}

}  // namespace qqe
