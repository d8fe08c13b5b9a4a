#pragma once

#include "capture/actor.hpp"
#include "capture/observation.hpp"
#include "capture/optimizer.hpp"
#include "capture/visibility.hpp"

#include <Eigen/Core>

#include <vector>

namespace capture {

struct RefineConfig {
    double w_skin = 0.001;
    double w_smooth = 0.005;
    ColorSimilarityConfig color;
    double delta = 0.0;     // border band in pixels; <= 0 selects the per-camera default
    double eps_depth = 0.0; // visibility depth slack; <= 0 selects 1% of the bbox diagonal
    int max_iters = 200;
    double step0 = 1e-3;
    double step_shrink = 0.5;
    double grad_tol = 1e-6;
    int reclassify_every = 5;
    double rigidity_base = 0.1; // r~ = base + (1 - base) * rigidity
    double momentum = 0.0;

    AscentConfig ascent() const
    {
        AscentConfig a;
        a.max_iters = max_iters;
        a.step0 = step0;
        a.step_shrink = step_shrink;
        a.grad_tol = grad_tol;
        a.momentum = momentum;
        return a;
    }
};

void validate_refine_config(const RefineConfig& cfg);

using Vertices = std::vector<Eigen::Vector3d>;

// A scalar term and its gradient with respect to every vertex position.
struct TermValue {
    double value = 0.0;
    Vertices grad_v;
};

struct SkinTermValue {
    double value = 0.0;
    Vertices grad_v;
    Eigen::VectorXd grad_theta;
};

// Photo consistency of interior vertices:
//   sum_c sum_s sum_i C(delta_si) * overlap2d(project(g_s), i).
// The gradient accumulates into grad_v[vertex] for each Surface Gaussian.
TermValue e_surf(const std::vector<SurfaceGaussianSet>& per_camera, const std::vector<CameraObservation>& views,
                 const ColorSimilarityConfig& color, int vertex_count);

// Contour alignment of border pairs:
//   sum_c sum_b sum_i C * overlap(inside, i) + (1 - C) * overlap(outside, i).
// Both displaced means move one-to-one with their source vertex.
TermValue e_cont(const std::vector<BorderGaussianSet>& per_camera, const std::vector<CameraObservation>& views,
                 const ColorSimilarityConfig& color, int vertex_count);

// Per-vertex tether weights r~_n = base + (1 - base) * rigidity_n.
std::vector<double> tether_weights(const RigidityMask& mask, double base);

// sum_n r~_n * (1 - overlap3d(G(v_n), G(skinned_n(theta)))) with both
// Gaussians using the vertex sigma.
SkinTermValue e_skin(const Vertices& v, const Pose& theta, const ActorModel& actor, const std::vector<double>& tether);

// Uniform (umbrella) Laplacian: mean of the one-ring minus the vertex.
Vertices uniform_laplacian(const Vertices& x, const std::vector<std::vector<int>>& neighbors);

// sum_n |L(v)_n - L_ref_n|^2 against a frozen reference Laplacian.
TermValue e_smooth(const Vertices& v, const Vertices& reference_laplacian, const std::vector<std::vector<int>>& neighbors);

// Convenience form that builds the reference from the initial skinned mesh.
TermValue e_smooth(const Vertices& v, const Vertices& v_skinned_initial, const std::vector<std::array<int, 3>>& faces);

// Everything Stage-II needs about one frame that stays fixed while refining.
struct FrameContext {
    const ActorModel* actor = nullptr;
    std::vector<CameraObservation> views;
    std::vector<std::vector<int>> neighbors;
    Vertices reference_laplacian;
    std::vector<double> tether;
};

FrameContext make_frame_context(const ActorModel& actor, std::vector<CameraObservation> views, const Vertices& v_skinned_initial,
                                const RefineConfig& cfg);

// Visibility classification and normals, frozen between reclassifications.
struct FrameStructure {
    std::vector<VertexClass> classes; // per camera
    Vertices normals;
};

FrameStructure classify_frame(const Vertices& v, const FrameContext& ctx, const RefineConfig& cfg);

struct EnergyBreakdown {
    double e_surf = 0.0;
    double e_cont = 0.0;
    double e_skin = 0.0;
    double e_smooth = 0.0;
    double total = 0.0;
    Vertices grad_v;
    Eigen::VectorXd grad_theta;
};

// e_surf + e_cont - w_skin * e_skin - w_smooth * e_smooth, with the Surface and
// Border Gaussians placed at v according to the frozen structure.
EnergyBreakdown total_energy(const Vertices& v, const Pose& theta, const FrameContext& ctx, const FrameStructure& structure,
                             const RefineConfig& cfg, bool with_gradient = true);

// Same, classifying visibility at v first.
EnergyBreakdown total_energy(const Vertices& v, const Pose& theta, const FrameContext& ctx, const RefineConfig& cfg);

// Chain rule through linear blend skinning: sum_n grad_v[n] . d skinned_n / d theta.
Eigen::VectorXd skinning_pullback(const ActorModel& actor, const Pose& theta, const Vertices& grad_v);

struct TraceEntry {
    int iteration = 0;
    double e_surf = 0.0;
    double e_cont = 0.0;
    double e_skin = 0.0;
    double e_smooth = 0.0;
    double total = 0.0;
    bool reclassified = false; // first entry after a visibility update
};

struct RefineResult {
    Vertices v;
    Pose theta;
    std::vector<TraceEntry> trace;
};

// Joint gradient ascent over (v, theta), re-deriving visibility and normals
// every reclassify_every iterations.
RefineResult optimize_refine(const Vertices& v0, const Pose& theta0, const FrameContext& ctx, const RefineConfig& cfg);

} // namespace capture
