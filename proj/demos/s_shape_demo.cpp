// Transforms an S-shaped sample to a uniform square, once to the exact
// distribution and once to its shape only, and prints the before/after
// measures.

#include <iostream>

#include "qqe/qqe.hpp"

int main() {
    using namespace qqe;
    const Matrix data = shape_sampler("s-shape", {}, 300, 2, 7);
    const Matrix reference = shape_sampler("uniform-rect", {0.5, 1.5}, 300, 2, 8);

    for (Mode mode : {Mode::Shape, Mode::Exact}) {
        TransformConfig config;
        config.mode = mode;
        config.snapshot_every = 100;
        const Trajectory run = transform(data, reference, config);
        const auto lines = qq_line_diagnostics(run.final_points, run.matched_reference);
        std::cout << to_string(mode) << ": " << to_string(run.stop_reason) << " after " << run.iterations()
                  << " iterations, cost " << run.initial_cost() << " -> " << run.final_cost() << '\n'
                  << "  mean " << run.final_points.colwise().mean() << "  R^2 " << lines[0].r_squared << ", "
                  << lines[1].r_squared << '\n'
                  << "  KL   " << kl_divergence(data, run.matched_reference) << " -> "
                  << kl_divergence(run.final_points, run.matched_reference) << '\n'
                  << "  MMD2 " << mmd_squared(data, run.matched_reference) << " -> "
                  << mmd_squared(run.final_points, run.matched_reference) << '\n'
                  << "  HSIC " << hsic(data, run.matched_reference) << " -> "
                  << hsic(run.final_points, run.matched_reference) << '\n';
    }
}
