#pragma once

#include "capture/actor.hpp"
#include "capture/observation.hpp"
#include "capture/optimizer.hpp"

#include <vector>

namespace capture {

struct PoseEnergyConfig {
    double clamp_cap = 1.0; // per-Image-Gaussian contribution cap
    ColorSimilarityConfig color;
    int max_iters = 200;
    double step0 = 1e-2;
    double step_shrink = 0.5;
    double grad_tol = 1e-6;

    AscentConfig ascent() const
    {
        AscentConfig a;
        a.max_iters = max_iters;
        a.step0 = step0;
        a.step_shrink = step_shrink;
        a.grad_tol = grad_tol;
        return a;
    }
};

void validate_pose_config(const PoseEnergyConfig& cfg);

// Color-weighted overlap between the projected Model Gaussians at pose theta
// and the Image Gaussians of every camera:
//   sum_c sum_i min(cap, sum_m C(delta_mi) * overlap2d(project(g_m), i)).
// Model Gaussians behind a camera contribute nothing to it.
double pose_energy(const Pose& theta, const ActorModel& actor, const std::vector<CameraObservation>& views, const PoseEnergyConfig& cfg);

// Analytic gradient; clamped Image Gaussians (partial sum >= cap) contribute
// zero. `energy`, when given, receives pose_energy at theta.
Eigen::VectorXd pose_gradient(const Pose& theta, const ActorModel& actor, const std::vector<CameraObservation>& views,
                              const PoseEnergyConfig& cfg, double* energy = nullptr);

struct PoseResult {
    Pose theta;
    std::vector<double> trace; // non-decreasing energies, starting with the initial one
    int iterations = 0;
};

PoseResult optimize_pose(const Pose& theta0, const ActorModel& actor, const std::vector<CameraObservation>& views,
                         const PoseEnergyConfig& cfg);

} // namespace capture
