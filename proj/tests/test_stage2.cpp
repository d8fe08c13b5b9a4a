#include "capture/errors.hpp"
#include "capture/stage1.hpp"
#include "capture/stage2.hpp"
#include "capture/synth.hpp"

#include "scenes.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace capture;
using namespace capture::testing;

namespace {

Eigen::VectorXd pack(const Vertices& v, const Pose& theta)
{
    Eigen::VectorXd x(3 * v.size() + theta.size());
    for (size_t n = 0; n < v.size(); ++n)
        x.segment<3>(3 * n) = v[n];
    x.tail(theta.size()) = theta;
    return x;
}

Vertices unpack_v(const Eigen::VectorXd& x, size_t n)
{
    Vertices v(n);
    for (size_t i = 0; i < n; ++i)
        v[i] = x.segment<3>(3 * i);
    return v;
}

Eigen::VectorXd flatten(const Vertices& g)
{
    Eigen::VectorXd x(3 * g.size());
    for (size_t n = 0; n < g.size(); ++n)
        x.segment<3>(3 * n) = g[n];
    return x;
}

RefineConfig weighted_config()
{
    RefineConfig cfg;
    cfg.w_skin = 2.5;
    cfg.w_smooth = 40.0;
    return cfg;
}

struct Prepared {
    RefineScene r;
    FrameContext ctx;
    FrameStructure structure;
};

Prepared prepare(std::uint64_t seed, const RefineConfig& cfg)
{
    Prepared p{random_refine_scene(seed), {}, {}};
    p.ctx = make_frame_context(p.r.scene.actor, make_observations(p.r.scene.cameras, p.r.sets), p.r.v_initial, cfg);
    p.structure = classify_frame(p.r.v, p.ctx, cfg);
    return p;
}

std::vector<SurfaceGaussianSet> surface_sets(const Vertices& v, const ActorModel& actor, const FrameStructure& s)
{
    std::vector<SurfaceGaussianSet> out;
    for (const VertexClass& cls : s.classes)
        out.push_back(build_surface_gaussians(cls, v, actor.mesh.vertex_colors, actor.vertex_sigmas));
    return out;
}

std::vector<BorderGaussianSet> border_sets(const Vertices& v, const ActorModel& actor, const FrameStructure& s)
{
    std::vector<BorderGaussianSet> out;
    for (const VertexClass& cls : s.classes)
        out.push_back(build_border_gaussians(cls, v, s.normals, actor.mesh.vertex_colors, actor.vertex_sigmas));
    return out;
}

// Flat triangulated grid in the z = 0 plane, n x n vertices.
void flat_grid(int n, Vertices& v, std::vector<std::array<int, 3>>& faces)
{
    v.clear();
    faces.clear();
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            v.emplace_back(x, y, 0.0);
    for (int y = 0; y + 1 < n; ++y)
        for (int x = 0; x + 1 < n; ++x) {
            const int a = y * n + x, b = a + 1, c = a + n, d = c + 1;
            faces.push_back({a, b, d});
            faces.push_back({a, d, c});
        }
}

} // namespace

TEST(SurfaceTerm, CoincidentSameColorPairIsOne)
{
    const Camera cam = toy_camera(64, 64);
    ImageGaussianSet set;
    Gaussian2D ig;
    ig.mu = cam.principal_point;
    ig.sigma = 3.0;
    ig.color = {0.3, 0.8, 0.7};
    set.gaussians.push_back(ig);
    SurfaceGaussianSet s;
    s.gaussians.push_back({Gaussian3D{Eigen::Vector3d(0, 0, 100), 3.0, ig.color}, 0});
    const TermValue t = e_surf({s}, make_observations({cam}, {set}), ColorSimilarityConfig{}, 1);
    EXPECT_NEAR(t.value, 1.0, 1e-12);
    EXPECT_NEAR(t.grad_v[0].norm(), 0.0, 1e-12);
}

TEST(SurfaceTerm, ComplementaryColorContributesNothing)
{
    const Camera cam = toy_camera(64, 64);
    ImageGaussianSet set;
    Gaussian2D ig;
    ig.mu = cam.principal_point;
    ig.sigma = 3.0;
    ig.color = {0.0, 1.0, 1.0};
    set.gaussians.push_back(ig);
    SurfaceGaussianSet s;
    s.gaussians.push_back({Gaussian3D{Eigen::Vector3d(0, 0, 100), 3.0, ColorHSV{0.5, 1.0, 1.0}}, 0});
    EXPECT_EQ(e_surf({s}, make_observations({cam}, {set}), ColorSimilarityConfig{}, 1).value, 0.0);
}

TEST(SurfaceTerm, SweepPeaksInsideMatchingRegion)
{
    const auto views = toy_views();
    const ToySweep sw = toy_sweep(views, rgb_to_hsv(kToyRed), 2.0, -20.0, 20.0, 0.25);
    const size_t best = std::max_element(sw.surface.begin(), sw.surface.end()) - sw.surface.begin();
    EXPECT_LT(sw.offsets[best], 0.0);
    // Past the boundary the energy collapses.
    EXPECT_LT(sw.surface.back(), 1e-3 * sw.surface[best]);
}

TEST(ContourTerm, PairPeaksAtColorEdge)
{
    const auto views = toy_views();
    const ToySweep sw = toy_sweep(views, rgb_to_hsv(kToyRed), 2.0, -20.0, 20.0, 0.25);
    const size_t best = std::max_element(sw.border.begin(), sw.border.end()) - sw.border.begin();
    EXPECT_LE(std::abs(sw.offsets[best]), 1.0);
    for (size_t k = 0; k < sw.border.size(); ++k)
        if (k != best)
            EXPECT_LT(sw.border[k], sw.border[best]);
    // Straddling beats the pair shifted by three sigma either way.
    const auto at = [&](double x) { return sw.border[static_cast<size_t>(std::lround((x + 20.0) / 0.25))]; };
    EXPECT_GT(at(0.0), at(-6.0));
    EXPECT_GT(at(0.0), at(6.0));
}

TEST(ContourTerm, DeepInsideLosesToStraddling)
{
    const auto views = toy_views();
    const ToySweep sw = toy_sweep(views, rgb_to_hsv(kToyRed), 2.0, -16.0, 0.0, 16.0);
    ASSERT_EQ(sw.border.size(), 2u);
    EXPECT_LT(sw.border[0], sw.border[1]);
}

TEST(ContourTerm, UniformVertexColoredFieldHasNoPreference)
{
    // Fully split decomposition of a uniform image: one pixel per Gaussian.
    const int w = 128, h = 64;
    const ColorHSV c{0.05, 0.8, 0.9};
    ImageGaussianSet set;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            set.gaussians.push_back(Gaussian2D{Eigen::Vector2d(x + 0.5, y + 0.5), 0.5, c});
    const auto views = make_observations({toy_camera(w, h)}, {set});
    const ToySweep sw = toy_sweep(views, c, 2.0, -10.0, 10.0, 0.37);
    for (double e : sw.border)
        EXPECT_NEAR(e, sw.border[0], 1e-9 * sw.border[0]);
}

TEST(SkinTerm, ZeroAtSkinnedPositions)
{
    const SynthScene s = tiny_scene(3);
    const Pose theta = s.poses[0];
    const SkinTermValue t = e_skin(skinned_template(s.actor, theta), theta, s.actor, tether_weights(s.actor.rigidity, 0.1));
    EXPECT_NEAR(t.value, 0.0, 1e-12);
}

TEST(SkinTerm, FarRigidVertexApproachesFullPenalty)
{
    SynthScene s = tiny_scene(3);
    const Pose theta = s.poses[0];
    Vertices v = skinned_template(s.actor, theta);
    std::fill(s.actor.rigidity.weights.begin(), s.actor.rigidity.weights.end(), 0.0);
    s.actor.rigidity.weights[5] = 1.0;
    v[5] += Eigen::Vector3d(0, 0, 50.0);
    EXPECT_NEAR(e_skin(v, theta, s.actor, tether_weights(s.actor.rigidity, 0.1)).value, 1.0, 1e-12);
}

TEST(SkinTerm, FreeToRigidPenaltyRatio)
{
    SynthScene s = tiny_scene(3);
    const Pose theta = s.poses[0];
    Vertices v = skinned_template(s.actor, theta);
    v[7] += Eigen::Vector3d(0.01, 0.02, 0.0);
    std::fill(s.actor.rigidity.weights.begin(), s.actor.rigidity.weights.end(), 0.0);
    const double free = e_skin(v, theta, s.actor, tether_weights(s.actor.rigidity, 0.1)).value;
    s.actor.rigidity.weights[7] = 1.0;
    const double rigid = e_skin(v, theta, s.actor, tether_weights(s.actor.rigidity, 0.1)).value;
    EXPECT_GT(free, 0.0);
    EXPECT_NEAR(free / rigid, 0.1, 1e-12);
}

TEST(SkinTerm, TetherWeightsAffine)
{
    RigidityMask m;
    m.weights = {0.0, 0.5, 1.0};
    const std::vector<double> w = tether_weights(m, 0.1);
    EXPECT_DOUBLE_EQ(w[0], 0.1);
    EXPECT_DOUBLE_EQ(w[1], 0.55);
    EXPECT_DOUBLE_EQ(w[2], 1.0);
    EXPECT_DOUBLE_EQ(tether_weights(m, 0.0)[0], 0.0);
}

TEST(SmoothTerm, IdentityAndTranslation)
{
    const SynthScene s = tiny_scene(4);
    const Vertices ref = skinned_template(s.actor, s.poses[0]);
    EXPECT_EQ(e_smooth(ref, ref, s.actor.mesh.faces).value, 0.0);
    Vertices moved = ref;
    for (auto& p : moved)
        p += Eigen::Vector3d(0.3, -1.2, 2.0);
    EXPECT_NEAR(e_smooth(moved, ref, s.actor.mesh.faces).value, 0.0, 1e-24);
}

TEST(SmoothTerm, LiftedGridVertex)
{
    Vertices flat;
    std::vector<std::array<int, 3>> faces;
    flat_grid(5, flat, faces);
    const int lifted = 12;
    const double h = 0.3;
    Vertices v = flat;
    v[lifted].z() += h;

    // Neighbor sets counted directly from the edges.
    std::vector<std::set<int>> nb(flat.size());
    for (const auto& f : faces)
        for (int k = 0; k < 3; ++k) {
            nb[f[k]].insert(f[(k + 1) % 3]);
            nb[f[(k + 1) % 3]].insert(f[k]);
        }
    double expected = 1.0;
    for (int k : nb[lifted])
        expected += 1.0 / (static_cast<double>(nb[k].size()) * nb[k].size());
    expected *= h * h;
    EXPECT_NEAR(e_smooth(v, flat, faces).value, expected, 1e-14);
}

TEST(SmoothTerm, IsolatedVertexRejected)
{
    Vertices v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}};
    const std::vector<std::array<int, 3>> faces = {{0, 1, 2}};
    EXPECT_THROW(e_smooth(v, v, faces), InvalidModel);
}

TEST(TermGradients, MatchFiniteDifferences)
{
    const RefineConfig cfg = weighted_config();
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Prepared p = prepare(seed, cfg);
        const ActorModel& actor = p.r.scene.actor;
        const size_t n = p.r.v.size();
        const Eigen::VectorXd x = flatten(p.r.v);

        auto surf = [&](const Eigen::VectorXd& y) {
            const Vertices v = unpack_v(y, n);
            return e_surf(surface_sets(v, actor, p.structure), p.ctx.views, cfg.color, static_cast<int>(n)).value;
        };
        const TermValue ts = e_surf(surface_sets(p.r.v, actor, p.structure), p.ctx.views, cfg.color, static_cast<int>(n));
        ASSERT_GT(flatten(ts.grad_v).norm(), 0.0) << "seed " << seed;
        EXPECT_LT(relative_error(flatten(ts.grad_v), central_difference(surf, x, 1e-6)), 1e-4) << "surf seed " << seed;

        auto cont = [&](const Eigen::VectorXd& y) {
            const Vertices v = unpack_v(y, n);
            return e_cont(border_sets(v, actor, p.structure), p.ctx.views, cfg.color, static_cast<int>(n)).value;
        };
        const TermValue tc = e_cont(border_sets(p.r.v, actor, p.structure), p.ctx.views, cfg.color, static_cast<int>(n));
        ASSERT_GT(flatten(tc.grad_v).norm(), 0.0) << "seed " << seed;
        EXPECT_LT(relative_error(flatten(tc.grad_v), central_difference(cont, x, 1e-6)), 1e-4) << "cont seed " << seed;

        const SkinTermValue tk = e_skin(p.r.v, p.r.theta, actor, p.ctx.tether);
        auto skin_v = [&](const Eigen::VectorXd& y) { return e_skin(unpack_v(y, n), p.r.theta, actor, p.ctx.tether).value; };
        auto skin_t = [&](const Eigen::VectorXd& t) { return e_skin(p.r.v, t, actor, p.ctx.tether).value; };
        EXPECT_LT(relative_error(flatten(tk.grad_v), central_difference(skin_v, x, 1e-6)), 1e-4) << "skin v seed " << seed;
        EXPECT_LT(relative_error(tk.grad_theta, central_difference(skin_t, p.r.theta, 1e-6)), 1e-4) << "skin theta seed " << seed;

        const TermValue tm = e_smooth(p.r.v, p.ctx.reference_laplacian, p.ctx.neighbors);
        auto smooth = [&](const Eigen::VectorXd& y) { return e_smooth(unpack_v(y, n), p.ctx.reference_laplacian, p.ctx.neighbors).value; };
        EXPECT_LT(relative_error(flatten(tm.grad_v), central_difference(smooth, x, 1e-6)), 1e-4) << "smooth seed " << seed;
    }
}

TEST(TotalEnergy, JointGradientMatchesFiniteDifferences)
{
    const RefineConfig cfg = weighted_config();
    for (std::uint64_t seed = 11; seed <= 16; ++seed) {
        const Prepared p = prepare(seed, cfg);
        const size_t n = p.r.v.size();
        const EnergyBreakdown e = total_energy(p.r.v, p.r.theta, p.ctx, p.structure, cfg);
        auto f = [&](const Eigen::VectorXd& y) {
            return total_energy(unpack_v(y, n), y.tail(p.r.theta.size()), p.ctx, p.structure, cfg, false).total;
        };
        Eigen::VectorXd analytic(3 * n + p.r.theta.size());
        analytic << flatten(e.grad_v), e.grad_theta;
        EXPECT_LT(relative_error(analytic, central_difference(f, pack(p.r.v, p.r.theta), 1e-6)), 1e-4) << "seed " << seed;
    }
}

TEST(TotalEnergy, WeightSemanticsAndExactSum)
{
    RefineConfig cfg;
    cfg.w_skin = 0.0;
    cfg.w_smooth = 0.0;
    const Prepared p = prepare(21, cfg);
    const EnergyBreakdown zero = total_energy(p.r.v, p.r.theta, p.ctx, p.structure, cfg);
    EXPECT_EQ(zero.total, zero.e_surf + zero.e_cont);

    const RefineConfig w = weighted_config();
    const EnergyBreakdown e = total_energy(p.r.v, p.r.theta, p.ctx, p.structure, w);
    EXPECT_EQ(e.total, e.e_surf + e.e_cont - w.w_skin * e.e_skin - w.w_smooth * e.e_smooth);
    EXPECT_GE(e.e_surf, 0.0);
    EXPECT_GE(e.e_cont, 0.0);
    EXPECT_GE(e.e_skin, 0.0);
    EXPECT_GE(e.e_smooth, 0.0);
}

TEST(TotalEnergy, DataTermsCarryNoPoseGradient)
{
    RefineConfig cfg;
    cfg.w_skin = 0.0;
    cfg.w_smooth = 0.0;
    const Prepared p = prepare(22, cfg);
    const EnergyBreakdown e = total_energy(p.r.v, p.r.theta, p.ctx, p.structure, cfg);
    EXPECT_EQ(e.grad_theta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(TotalEnergy, RegularizersTranslationInvariant)
{
    const SynthScene s = tiny_scene(5);
    Pose theta = s.poses[0];
    Vertices v = skinned_template(s.actor, theta);
    const Vertices ref = v;
    v[3] += Eigen::Vector3d(0.02, 0.0, -0.01);
    v[40] += Eigen::Vector3d(0.0, 0.03, 0.0);
    const auto tether = tether_weights(s.actor.rigidity, 0.1);
    const double skin = e_skin(v, theta, s.actor, tether).value;
    const double smooth = e_smooth(v, ref, s.actor.mesh.faces).value;

    const Eigen::Vector3d shift(0.4, -0.2, 0.7);
    Pose moved = theta;
    moved.head<3>() += shift;
    Vertices v2 = v, ref2 = ref;
    for (auto& p : v2)
        p += shift;
    for (auto& p : ref2)
        p += shift;
    EXPECT_NEAR(e_skin(v2, moved, s.actor, tether).value, skin, 1e-12);
    EXPECT_NEAR(e_smooth(v2, ref2, s.actor.mesh.faces).value, smooth, 1e-12);
}

TEST(SkinningPullback, MatchesFiniteDifferences)
{
    const SynthScene s = tiny_scene(6);
    std::mt19937_64 rng(6);
    Vertices g(s.actor.mesh.vertices.size());
    for (auto& x : g)
        x = Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    auto f = [&](const Eigen::VectorXd& t) {
        const Vertices sk = skinned_template(s.actor, t);
        double acc = 0.0;
        for (size_t n = 0; n < sk.size(); ++n)
            acc += g[n].dot(sk[n]);
        return acc;
    };
    const Pose theta = s.poses[0];
    EXPECT_LT(relative_error(skinning_pullback(s.actor, theta, g), central_difference(f, theta, 1e-6)), 1e-6);
}

TEST(Refine, ZeroIterationsReturnsInputs)
{
    RefineConfig cfg = weighted_config();
    cfg.max_iters = 0;
    const Prepared p = prepare(31, cfg);
    const RefineResult r = optimize_refine(p.r.v, p.r.theta, p.ctx, cfg);
    EXPECT_EQ(r.theta, p.r.theta);
    for (size_t n = 0; n < r.v.size(); ++n)
        EXPECT_EQ(r.v[n], p.r.v[n]);
    EXPECT_EQ(r.trace.size(), 1u);
}

TEST(Refine, TraceMonotoneBetweenReclassifications)
{
    RefineConfig cfg = weighted_config();
    cfg.max_iters = 25;
    cfg.reclassify_every = 4;
    const Prepared p = prepare(32, cfg);
    const RefineResult r = optimize_refine(p.r.v, p.r.theta, p.ctx, cfg);
    ASSERT_GT(r.trace.size(), 5u);
    for (size_t k = 1; k < r.trace.size(); ++k)
        if (!r.trace[k].reclassified)
            EXPECT_GE(r.trace[k].total, r.trace[k - 1].total) << "iteration " << r.trace[k].iteration;
}

TEST(Refine, NonFiniteStartRejected)
{
    RefineConfig cfg = weighted_config();
    Prepared p = prepare(33, cfg);
    Vertices v = p.r.v;
    v[0].x() = std::nan("");
    EXPECT_THROW(optimize_refine(v, p.r.theta, p.ctx, cfg), Error);
}

TEST(Refine, RigidRegionStaysOnSkinnedPositions)
{
    RefineConfig cfg;
    cfg.w_skin = 1e3;
    cfg.w_smooth = 1.0;
    cfg.max_iters = 40;
    Prepared p = prepare(34, cfg);
    ActorModel& actor = p.r.scene.actor;
    std::vector<int> region;
    for (size_t n = 0; n < actor.mesh.vertices.size(); ++n) {
        actor.rigidity.weights[n] = actor.mesh.vertices[n].y() < 0.5 ? 1.0 : 0.0;
        if (actor.rigidity.weights[n] > 0.0)
            region.push_back(static_cast<int>(n));
    }
    ASSERT_FALSE(region.empty());
    const FrameContext ctx = make_frame_context(actor, make_observations(p.r.scene.cameras, p.r.sets), p.r.v_initial, cfg);
    const RefineResult r = optimize_refine(p.r.v_initial, p.r.theta, ctx, cfg);
    const Vertices sk = skinned_template(actor, r.theta);
    for (int n : region)
        EXPECT_LT((r.v[n] - sk[n]).norm(), 0.05 * actor.vertex_sigmas[n]) << "vertex " << n;
}

double bbox_diagonal(const Vertices& v)
{
    Eigen::Vector3d lo = v[0], hi = v[0];
    for (const auto& p : v) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

TEST(Refine, SkinnedStartWithoutEvidenceStaysPut)
{
    // With no Image Gaussians the regularizers alone are maximal at the start.
    const SynthScene s = tiny_scene(35, DeformKind::none);
    RefineConfig cfg = weighted_config();
    cfg.max_iters = 20;
    const Vertices v0 = s.meshes[0];
    const FrameContext ctx = make_frame_context(s.actor, make_observations(s.cameras, {ImageGaussianSet{}, ImageGaussianSet{}}), v0, cfg);
    const RefineResult r = optimize_refine(v0, s.poses[0], ctx, cfg);
    for (size_t n = 0; n < v0.size(); ++n)
        EXPECT_LT((r.v[n] - v0[n]).norm(), 1e-3 * bbox_diagonal(v0));
}

TEST(Refine, StartingAtTruthEndsCloserThanStageOne)
{
    // The decomposed images do not make the truth an exact stationary point,
    // but refinement started there must stay closer to it than a Stage-I fit.
    SynthSpec spec = synth_preset("two-bone");
    spec.deform.kind = DeformKind::none;
    spec.n_frames = 1;
    const SynthScene s = build_scene(spec);
    QuadTreeParams coarse, fine;
    coarse.min_node_px = 32;
    coarse.color_var_threshold = 0.003;
    fine.min_node_px = 8;
    fine.color_var_threshold = 0.003;
    std::vector<ImageGaussianSet> sets1, sets2;
    for (int c = 0; c < spec.n_cameras; ++c) {
        const ImageFrame f = render_frame(s, 0, c);
        sets1.push_back(quadtree_decompose(f, coarse));
        sets2.push_back(quadtree_decompose(f, fine));
    }
    const Vertices truth = s.meshes[0];
    auto mean_error = [&](const Vertices& v) {
        double e = 0.0;
        for (size_t n = 0; n < v.size(); ++n)
            e += (v[n] - truth[n]).norm();
        return e / v.size();
    };
    PoseEnergyConfig pc;
    pc.max_iters = 300;
    const PoseResult stage1 = optimize_pose(s.poses[0], s.actor, make_observations(s.cameras, sets1), pc);

    RefineConfig cfg;
    cfg.w_skin = 3.0;
    cfg.w_smooth = 5e4;
    cfg.max_iters = 40;
    const FrameContext ctx = make_frame_context(s.actor, make_observations(s.cameras, sets2), truth, cfg);
    const RefineResult r = optimize_refine(truth, s.poses[0], ctx, cfg);
    EXPECT_LT(mean_error(r.v), mean_error(skinned_template(s.actor, stage1.theta)));
}
