#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace capture {

struct AscentConfig {
    int max_iters = 200;
    double step0 = 1e-2;      // infinity-norm length of the first trial step
    double step_shrink = 0.5; // backtracking factor in (0, 1)
    double grad_tol = 1e-6;   // stop when |grad|_inf falls below this
    int max_backtracks = 30;
    double step_growth = 2.0; // applied to the step after an accepted iteration
    // Start indices of variable blocks whose gradients are scaled to unit
    // infinity norm separately. Empty means one block.
    std::vector<int> block_starts;
    // Fraction of the previous displacement added to the next trial point.
    // A trial that lowers the objective falls back to the plain step.
    double momentum = 0.0;
};

void validate_ascent_config(const AscentConfig& cfg);

// Objective returning the value and writing the gradient.
using ValueAndGradient = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;
using ValueOnly = std::function<double(const Eigen::VectorXd& x)>;

struct AscentState {
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd grad;
    double step = 0.0;
    Eigen::VectorXd velocity; // last accepted displacement; empty at the start
};

enum class AscentStop { max_iters, gradient_tolerance, no_ascent };

struct AscentResult {
    AscentState state;
    std::vector<double> trace; // value at the start, then after every accepted step
    int iterations = 0;
    AscentStop stop = AscentStop::max_iters;
};

// Gradient ascent with backtracking: each iteration moves along the gradient
// by `step` (measured in the infinity norm) and halves the step until the
// objective does not decrease. A rejected direction after max_backtracks ends
// the run. The trace is therefore non-decreasing.
AscentResult gradient_ascent(const ValueAndGradient& fg, const ValueOnly& f, AscentState start, const AscentConfig& cfg);

// Convenience entry: evaluates the start point first and seeds step = step0.
// Throws InvalidStart if the starting value is not finite.
AscentResult gradient_ascent(const ValueAndGradient& fg, const ValueOnly& f, const Eigen::VectorXd& x0, const AscentConfig& cfg);

} // namespace capture
