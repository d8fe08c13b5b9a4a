#include "capture/optimizer.hpp"

#include "capture/errors.hpp"

#include <algorithm>
#include <cmath>

namespace capture {

void validate_ascent_config(const AscentConfig& cfg)
{
    if (cfg.max_iters < 0)
        throw InvalidInput("max_iters must be nonnegative");
    if (!(cfg.step0 > 0.0))
        throw InvalidInput("step0 must be positive");
    if (!(cfg.step_shrink > 0.0 && cfg.step_shrink < 1.0))
        throw InvalidInput("step_shrink must lie in (0, 1)");
    if (!(cfg.grad_tol > 0.0))
        throw InvalidInput("grad_tol must be positive");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw InvalidInput("momentum must lie in [0, 1)");
    if (cfg.max_backtracks < 1 || !(cfg.step_growth >= 1.0))
        throw InvalidInput("invalid backtracking parameters");
    for (size_t b = 0; b < cfg.block_starts.size(); ++b)
        if (cfg.block_starts[b] < 0 || (b > 0 && cfg.block_starts[b] <= cfg.block_starts[b - 1]) || (b == 0 && cfg.block_starts[b] != 0))
            throw InvalidInput("block starts must be increasing from 0");
}

namespace {

// Gradient scaled to unit infinity norm within each block; blocks whose
// gradient vanishes stay put.
Eigen::VectorXd ascent_direction(const Eigen::VectorXd& grad, const std::vector<int>& starts)
{
    Eigen::VectorXd dir = grad;
    const Eigen::Index n = grad.size();
    const size_t blocks = std::max<size_t>(1, starts.size());
    for (size_t b = 0; b < blocks; ++b) {
        const Eigen::Index lo = starts.empty() ? 0 : starts[b];
        const Eigen::Index hi = b + 1 < starts.size() ? starts[b + 1] : n;
        if (hi <= lo)
            continue;
        const double m = grad.segment(lo, hi - lo).cwiseAbs().maxCoeff();
        if (m > 0.0)
            dir.segment(lo, hi - lo) /= m;
    }
    return dir;
}

} // namespace

AscentResult gradient_ascent(const ValueAndGradient& fg, const ValueOnly& f, AscentState state, const AscentConfig& cfg)
{
    validate_ascent_config(cfg);
    AscentResult result;
    result.trace.push_back(state.value);
    if (state.step <= 0.0)
        state.step = cfg.step0;

    for (int it = 0; it < cfg.max_iters; ++it) {
        const double gmax = state.grad.size() ? state.grad.cwiseAbs().maxCoeff() : 0.0;
        if (!(gmax >= cfg.grad_tol)) {
            result.stop = AscentStop::gradient_tolerance;
            break;
        }
        const Eigen::VectorXd dir = ascent_direction(state.grad, cfg.block_starts);
        const Eigen::VectorXd from = state.x;
        double step = state.step;
        bool accepted = false;
        auto try_point = [&](const Eigen::VectorXd& trial) {
            const double value = f(trial);
            if (!(std::isfinite(value) && value >= state.value))
                return false;
            state.x = trial;
            state.value = fg(state.x, state.grad);
            return true;
        };
        const bool coast = cfg.momentum > 0.0 && state.velocity.size() == state.x.size();
        if (coast)
            accepted = try_point(from + step * dir + cfg.momentum * state.velocity);
        for (int bt = 0; !accepted && bt < cfg.max_backtracks; ++bt) {
            if (try_point(from + step * dir))
                accepted = true;
            else
                step *= cfg.step_shrink;
        }
        if (!accepted) {
            state.step = step;
            state.velocity.resize(0);
            result.stop = AscentStop::no_ascent;
            break;
        }
        if (cfg.momentum > 0.0)
            state.velocity = state.x - from;
        ++result.iterations;
        result.trace.push_back(state.value);
        state.step = step * cfg.step_growth;
    }
    result.state = std::move(state);
    return result;
}

AscentResult gradient_ascent(const ValueAndGradient& fg, const ValueOnly& f, const Eigen::VectorXd& x0, const AscentConfig& cfg)
{
    AscentState start;
    start.x = x0;
    if (!x0.allFinite())
        throw InvalidStart("starting point is not finite");
    start.value = fg(start.x, start.grad);
    if (!std::isfinite(start.value))
        throw InvalidStart("objective is not finite at the starting point");
    start.step = cfg.step0;
    return gradient_ascent(fg, f, std::move(start), cfg);
}

} // namespace capture
