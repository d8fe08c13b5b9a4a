#pragma once

// Scene builders shared by the unit tests and the acceptance binary.

#include "capture/image.hpp"
#include "capture/stage2.hpp"
#include "capture/synth.hpp"

#include "test_util.hpp"

#include <random>
#include <vector>

namespace capture::testing {

// Coarse two-bone actor seen by two small cameras; under 100 vertices.
inline SynthScene tiny_scene(std::uint64_t seed, DeformKind deform = DeformKind::bulge, int image_size = 96)
{
    SynthSpec s = synth_preset("two-bone");
    s.seed = seed;
    s.n_cameras = 2;
    s.image_size = image_size;
    s.n_frames = 1;
    s.segments = 8;
    s.rings = 7;
    s.patches = 3;
    s.deform.kind = deform;
    return build_scene(s);
}

// Image Gaussians scattered around the projected actor, colored like nearby
// vertices with a hue jitter.
inline std::vector<ImageGaussianSet> random_image_sets(std::mt19937_64& rng, const ActorModel& actor, const Vertices& v,
                                                       const std::vector<Camera>& cams, int per_camera)
{
    std::vector<ImageGaussianSet> sets;
    for (size_t c = 0; c < cams.size(); ++c) {
        ImageGaussianSet set;
        set.camera_id = static_cast<int>(c);
        for (int k = 0; k < per_camera; ++k) {
            const int n = static_cast<int>(rng() % v.size());
            Gaussian3D probe;
            probe.mu = v[n];
            const Gaussian2D p = project_gaussian(probe, cams[c]);
            Gaussian2D g;
            g.mu = p.mu + Eigen::Vector2d(uniform(rng, -6, 6), uniform(rng, -6, 6));
            g.sigma = uniform(rng, 1.5, 6.0);
            g.color = actor.mesh.vertex_colors[n];
            g.color.h = std::fmod(g.color.h + uniform(rng, -0.05, 0.05) + 1.0, 1.0);
            g.color.s = std::clamp(g.color.s + uniform(rng, -0.2, 0.2), 0.0, 1.0);
            set.gaussians.push_back(g);
        }
        sets.push_back(std::move(set));
    }
    return sets;
}

// A randomly perturbed refinement state on a tiny scene, with random
// rigidity so every tether weight differs.
struct RefineScene {
    SynthScene scene;
    std::vector<ImageGaussianSet> sets;
    Pose theta;
    Vertices v;
    Vertices v_initial;
};

inline RefineScene random_refine_scene(std::uint64_t seed, int image_size = 256)
{
    std::mt19937_64 rng(seed);
    RefineScene r{tiny_scene(seed, DeformKind::bulge, image_size), {}, {}, {}, {}};
    ActorModel& actor = r.scene.actor;
    for (double& w : actor.rigidity.weights)
        w = uniform(rng, 0.0, 1.0);
    r.theta = r.scene.poses[0];
    for (Eigen::Index k = 0; k < r.theta.size(); ++k)
        r.theta[k] += uniform(rng, -0.05, 0.05);
    r.v_initial = skinned_template(actor, r.theta);
    r.v = r.v_initial;
    for (auto& p : r.v)
        p += Eigen::Vector3d(uniform(rng, -0.02, 0.02), uniform(rng, -0.02, 0.02), uniform(rng, -0.02, 0.02));
    r.sets = random_image_sets(rng, actor, r.v, r.scene.cameras, 50);
    return r;
}

// Pixel-scale toy camera: world (x, y) on the plane z = 100 lands on pixel
// (x + cx, y + cy).
inline Camera toy_camera(int width, int height)
{
    Camera cam;
    cam.translation = Eigen::Vector3d::Zero();
    cam.focal = 100.0;
    cam.principal_point = {0.5 * width, 0.5 * height};
    cam.width = width;
    cam.height = height;
    return cam;
}

// Left half one color, right half another; the boundary sits at the image
// centre column.
inline ImageFrame two_color_image(int width, int height, const Rgb& left, const Rgb& right)
{
    ImageFrame f;
    f.width = width;
    f.height = height;
    f.pixels.resize(static_cast<size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            f.at(x, y) = x < width / 2 ? left : right;
    return f;
}

// Regular lattice of Image Gaussians, one per block x block tile, carrying the
// tile color: the leaves of a quad-tree split down to that tile size.
inline ImageGaussianSet gaussian_lattice(const ImageFrame& img, int block)
{
    ImageGaussianSet set;
    for (int y = 0; y + block <= img.height; y += block)
        for (int x = 0; x + block <= img.width; x += block) {
            Eigen::Vector3d sum = Eigen::Vector3d::Zero();
            for (int j = 0; j < block; ++j)
                for (int i = 0; i < block; ++i) {
                    const Rgb& c = img.at(x + i, y + j);
                    sum += Eigen::Vector3d(c[0], c[1], c[2]);
                }
            sum /= block * block;
            set.gaussians.push_back(Gaussian2D{Eigen::Vector2d(x + 0.5 * block, y + 0.5 * block), 0.5 * block,
                                               rgb_to_hsv(Rgb{sum.x(), sum.y(), sum.z()})});
        }
    return set;
}

// The Fig.-3-style toy: red left half, cyan right half (hue distance 0.5,
// so the colors are fully dissimilar), as a lattice of 2 px Gaussians.
inline constexpr Rgb kToyRed{0.9, 0.1, 0.1};
inline constexpr Rgb kToyCyan{0.1, 0.9, 0.9};

inline std::vector<CameraObservation> toy_views(int width = 64, int height = 16)
{
    return make_observations({toy_camera(width, height)}, {gaussian_lattice(two_color_image(width, height, kToyRed, kToyCyan), 2)});
}

// Energies of a Surface Gaussian and of a border pair (normal along +x)
// swept horizontally across the toy image. Offsets are in pixels from the
// color boundary.
struct ToySweep {
    std::vector<double> offsets;
    std::vector<double> surface;
    std::vector<double> border;
};

inline ToySweep toy_sweep(const std::vector<CameraObservation>& views, const ColorHSV& vertex_color, double sigma_px, double lo, double hi,
                          double step)
{
    ToySweep out;
    const ColorSimilarityConfig color;
    for (double x = lo; x <= hi + 1e-9; x += step) {
        const Eigen::Vector3d p(x, 0.0, 100.0);
        SurfaceGaussianSet s;
        s.gaussians.push_back({Gaussian3D{p, sigma_px, vertex_color}, 0});
        BorderGaussianSet b;
        const Eigen::Vector3d n(1.0, 0.0, 0.0);
        b.pairs.push_back({Gaussian3D{p - sigma_px * n, sigma_px, vertex_color}, Gaussian3D{p + sigma_px * n, sigma_px, vertex_color}, 0});
        out.offsets.push_back(x);
        out.surface.push_back(e_surf({s}, views, color, 1).value);
        out.border.push_back(e_cont({b}, views, color, 1).value);
    }
    return out;
}

} // namespace capture::testing
