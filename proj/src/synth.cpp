#include "capture/synth.hpp"

#include "capture/camera_io.hpp"
#include "capture/errors.hpp"
#include "capture/eval.hpp"
#include "capture/visibility.hpp"

#include "json_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace capture {

namespace fs = std::filesystem;
using detail::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCylinderRadius = 0.25;
constexpr double kBoneLength = 1.0;
constexpr double kSphereRadius = 0.5;
const Eigen::Vector3d kSphereCenter(0.0, 1.0, 0.0);

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double smooth01(double t)
{
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

struct Geometry {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;
};

// Capped cylinder along +y from 0 to 2 * kBoneLength. Each cap has a ring at
// half radius and a center vertex so cap edges stay close to side edges.
Geometry cylinder(int segments, int rings)
{
    Geometry g;
    const double height = 2.0 * kBoneLength;
    auto ring_point = [&](double r, double y, int k) {
        const double phi = 2.0 * kPi * k / segments;
        return Eigen::Vector3d(r * std::cos(phi), y, r * std::sin(phi));
    };
    for (int i = 0; i < rings; ++i)
        for (int k = 0; k < segments; ++k)
            g.vertices.push_back(ring_point(kCylinderRadius, height * i / (rings - 1), k));
    auto side = [&](int i, int k) { return i * segments + (k % segments); };
    for (int i = 0; i + 1 < rings; ++i)
        for (int k = 0; k < segments; ++k) {
            const int a = side(i, k), b = side(i, k + 1), c = side(i + 1, k + 1), d = side(i + 1, k);
            g.faces.push_back({a, d, c});
            g.faces.push_back({a, c, b});
        }
    auto add_cap = [&](int outer_ring, double y, bool up) {
        const int inner0 = static_cast<int>(g.vertices.size());
        for (int k = 0; k < segments; ++k)
            g.vertices.push_back(ring_point(0.5 * kCylinderRadius, y, k));
        const int center = static_cast<int>(g.vertices.size());
        g.vertices.emplace_back(0.0, y, 0.0);
        for (int k = 0; k < segments; ++k) {
            const int o0 = side(outer_ring, k), o1 = side(outer_ring, k + 1);
            const int q0 = inner0 + k, q1 = inner0 + (k + 1) % segments;
            if (up) {
                g.faces.push_back({o0, q0, o1});
                g.faces.push_back({o1, q0, q1});
                g.faces.push_back({q0, center, q1});
            } else {
                g.faces.push_back({o0, o1, q0});
                g.faces.push_back({o1, q1, q0});
                g.faces.push_back({q0, q1, center});
            }
        }
    };
    add_cap(0, 0.0, false);
    add_cap(rings - 1, height, true);
    return g;
}

// Latitude-longitude sphere with a vertex at each pole; the top pole is the
// first vertex.
Geometry uv_sphere(int segments, int bands)
{
    Geometry g;
    g.vertices.push_back(kSphereCenter + Eigen::Vector3d(0, kSphereRadius, 0));
    for (int i = 1; i < bands; ++i) {
        const double theta = kPi * i / bands;
        for (int k = 0; k < segments; ++k) {
            const double phi = 2.0 * kPi * k / segments;
            g.vertices.push_back(kSphereCenter + kSphereRadius * Eigen::Vector3d(std::sin(theta) * std::cos(phi), std::cos(theta),
                                                                                 std::sin(theta) * std::sin(phi)));
        }
    }
    const int bottom = static_cast<int>(g.vertices.size());
    g.vertices.push_back(kSphereCenter - Eigen::Vector3d(0, kSphereRadius, 0));
    auto at = [&](int i, int k) { return 1 + (i - 1) * segments + (k % segments); };
    for (int k = 0; k < segments; ++k)
        g.faces.push_back({0, at(1, k + 1), at(1, k)});
    for (int i = 1; i + 1 < bands; ++i)
        for (int k = 0; k < segments; ++k) {
            const int a = at(i, k), b = at(i, k + 1), c = at(i + 1, k + 1), d = at(i + 1, k);
            g.faces.push_back({a, b, c});
            g.faces.push_back({a, c, d});
        }
    for (int k = 0; k < segments; ++k)
        g.faces.push_back({at(bands - 1, k), at(bands - 1, k + 1), bottom});
    return g;
}

Geometry box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi)
{
    Geometry g;
    for (int i = 0; i < 8; ++i)
        g.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
    // Outward-facing quads as pairs of triangles.
    const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        g.faces.push_back({q[0], q[1], q[2]});
        g.faces.push_back({q[0], q[2], q[3]});
    }
    return g;
}

std::vector<Joint> skeleton_for(ActorKind kind)
{
    std::vector<Joint> joints;
    joints.push_back({"root", -1, Eigen::Vector3d::Zero(), {}});
    if (kind == ActorKind::two_bone_cylinder)
        joints.push_back({"elbow", 0, Eigen::Vector3d(0, kBoneLength, 0), {Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitX()}});
    return joints;
}

std::vector<std::vector<SkinWeight>> skinning_for(ActorKind kind, const std::vector<Eigen::Vector3d>& vertices)
{
    std::vector<std::vector<SkinWeight>> out;
    for (const Eigen::Vector3d& v : vertices) {
        if (kind == ActorKind::sphere_blob) {
            out.push_back({{0, 1.0}});
            continue;
        }
        const double w = smooth01((v.y() - 0.8 * kBoneLength) / (0.4 * kBoneLength));
        if (w <= 0.0)
            out.push_back({{0, 1.0}});
        else if (w >= 1.0)
            out.push_back({{1, 1.0}});
        else
            out.push_back({{0, 1.0 - w}, {1, w}});
    }
    return out;
}

std::vector<Rgb> texture_for(const SynthSpec& spec, const std::vector<Eigen::Vector3d>& vertices)
{
    std::mt19937_64 rng(mix_seed(spec.seed, 1));
    const bool cyl = spec.actor == ActorKind::two_bone_cylinder;
    const ColorHSV lower = cyl ? ColorHSV{0.0, 0.85, 0.85} : ColorHSV{0.07, 0.85, 0.9};
    const ColorHSV upper = cyl ? ColorHSV{0.62, 0.85, 0.85} : ColorHSV{0.78, 0.7, 0.8};
    const ColorHSV palette[2] = {{0.14, 0.85, 0.95}, {0.36, 0.8, 0.8}};
    const double split = cyl ? kBoneLength : kSphereCenter.y();
    std::vector<Rgb> colors;
    for (const Eigen::Vector3d& v : vertices)
        colors.push_back(hsv_to_rgb(v.y() < split ? lower : upper));
    const double patch_radius = cyl ? 0.09 : 0.12;
    for (int p = 0; p < spec.patches; ++p) {
        const size_t center = static_cast<size_t>(unit(rng) * static_cast<double>(vertices.size()));
        const Rgb c = hsv_to_rgb(palette[p % 2]);
        for (size_t n = 0; n < vertices.size(); ++n)
            if ((vertices[n] - vertices[center]).norm() <= patch_radius)
                colors[n] = c;
    }
    return colors;
}

std::vector<ModelGaussian> model_gaussians_for(ActorKind kind)
{
    std::vector<ModelGaussian> out;
    auto add = [&](const Eigen::Vector3d& mu, double sigma, int joint) {
        ModelGaussian g;
        g.bind.mu = mu;
        g.bind.sigma = sigma;
        g.joint = joint;
        out.push_back(g);
    };
    if (kind == ActorKind::two_bone_cylinder) {
        // Five per bone, spaced along the bone axis.
        for (int bone = 0; bone < 2; ++bone)
            for (int k = 0; k < 5; ++k)
                add(Eigen::Vector3d(0, kBoneLength * (bone + (k + 0.5) / 5.0), 0), kCylinderRadius, bone);
    } else {
        add(kSphereCenter, 0.6 * kSphereRadius, 0);
        for (int axis = 0; axis < 3; ++axis)
            for (double s : {-1.0, 1.0})
                add(kSphereCenter + s * 0.5 * kSphereRadius * Eigen::Vector3d::Unit(axis), 0.35 * kSphereRadius, 0);
    }
    return out;
}

Pose pose_for(const SynthSpec& spec, const Skeleton& skeleton, int frame)
{
    Pose theta = skeleton.rest_pose();
    const double m = spec.motion;
    const double phase = 2.0 * kPi * frame / std::max(1, spec.n_frames);
    if (spec.actor == ActorKind::two_bone_cylinder) {
        theta[0] = 0.03 * m * std::sin(phase);
        theta[2] = 0.02 * m * (std::cos(phase) - 1.0);
        theta[3] = 0.06 * m * std::sin(phase);
        theta[5] = 0.05 * m * std::sin(0.5 * phase);
        theta[6] = m * (0.25 + 0.3 * std::sin(phase));
        theta[7] = 0.12 * m * std::sin(phase + 1.0);
    } else {
        theta[0] = 0.1 * m * std::sin(phase);
        theta[2] = 0.05 * m * std::sin(0.5 * phase);
        theta[4] = 0.4 * m * std::sin(phase);
        theta[5] = 0.1 * m * std::cos(phase);
    }
    return theta;
}

Camera ring_camera(const SynthSpec& spec, int k)
{
    const double angle = 2.0 * kPi * k / spec.n_cameras + 0.3;
    const double dist = 4.5;
    const Eigen::Vector3d target(0, 1.0, 0);
    const Eigen::Vector3d eye(dist * std::cos(angle), 1.6, dist * std::sin(angle));
    return look_at(eye, target, Eigen::Vector3d::UnitY(), 1.35 * spec.image_size, spec.image_size, spec.image_size);
}

// Smoothly interpolated lattice noise summed over octaves, in [0, 1].
std::vector<double> value_noise(int width, int height, int octaves, std::mt19937_64& rng)
{
    std::vector<double> out(static_cast<size_t>(width) * height, 0.0);
    double total = 0.0, amp = 1.0;
    int cell = std::max(4, std::max(width, height) / 4);
    for (int o = 0; o < octaves; ++o) {
        const int gw = width / cell + 2, gh = height / cell + 2;
        std::vector<double> lattice(static_cast<size_t>(gw) * gh);
        for (double& l : lattice)
            l = unit(rng);
        for (int y = 0; y < height; ++y) {
            const double fy = (y + 0.5) / cell;
            const int iy = static_cast<int>(fy);
            const double ty = smooth01(fy - iy);
            for (int x = 0; x < width; ++x) {
                const double fx = (x + 0.5) / cell;
                const int ix = static_cast<int>(fx);
                const double tx = smooth01(fx - ix);
                auto L = [&](int a, int b) { return lattice[static_cast<size_t>(b) * gw + a]; };
                const double top = L(ix, iy) * (1 - tx) + L(ix + 1, iy) * tx;
                const double bot = L(ix, iy + 1) * (1 - tx) + L(ix + 1, iy + 1) * tx;
                out[static_cast<size_t>(y) * width + x] += amp * (top * (1 - ty) + bot * ty);
            }
        }
        total += amp;
        amp *= 0.5;
        cell = std::max(2, cell / 2);
    }
    for (double& v : out)
        v = std::clamp(0.5 + 1.8 * (v / total - 0.5), 0.0, 1.0);
    return out;
}

json spec_to_json(const SynthSpec& s)
{
    auto rgb = [](const Rgb& c) { return json::array({c[0], c[1], c[2]}); };
    return {{"seed", s.seed},
            {"actor", to_string(s.actor)},
            {"n_cameras", s.n_cameras},
            {"image_size", s.image_size},
            {"n_frames", s.n_frames},
            {"deform",
             {{"kind", to_string(s.deform.kind)},
              {"bulge", {{"amplitude", s.deform.bulge.amplitude}, {"center", detail::to_json(s.deform.bulge.center)}, {"radius", s.deform.bulge.radius}}},
              {"skirt", {{"amplitude", s.deform.skirt.amplitude}, {"frequency", s.deform.skirt.frequency}, {"height", s.deform.skirt.height}}}}},
            {"background",
             {{"kind", to_string(s.background.kind)},
              {"color", rgb(s.background.color)},
              {"color2", rgb(s.background.color2)},
              {"checker_px", s.background.checker_px},
              {"octaves", s.background.octaves}}},
            {"occluder",
             {{"enabled", s.occluder.enabled}, {"height", s.occluder.height}, {"half_width", s.occluder.half_width}, {"color", rgb(s.occluder.color)}}},
            {"motion", s.motion},
            {"segments", s.segments},
            {"rings", s.rings},
            {"patches", s.patches},
            {"rigid_occluded_end", s.rigid_occluded_end}};
}

template <typename E>
E parse_enum(const std::string& name, std::initializer_list<E> values)
{
    for (E v : values)
        if (to_string(v) == name)
            return v;
    throw CorruptData("unknown enumerator '" + name + "' in manifest");
}

SynthSpec spec_from_json(const json& j)
{
    auto rgb = [](const json& a) { return Rgb{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()}; };
    SynthSpec s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.actor = parse_enum(j.at("actor").get<std::string>(), {ActorKind::sphere_blob, ActorKind::two_bone_cylinder});
    s.n_cameras = j.at("n_cameras").get<int>();
    s.image_size = j.at("image_size").get<int>();
    s.n_frames = j.at("n_frames").get<int>();
    const json& d = j.at("deform");
    s.deform.kind = parse_enum(d.at("kind").get<std::string>(), {DeformKind::none, DeformKind::bulge, DeformKind::skirt_swing});
    s.deform.bulge.amplitude = d.at("bulge").at("amplitude").get<double>();
    s.deform.bulge.center = detail::vec3(d.at("bulge").at("center"), "bulge center");
    s.deform.bulge.radius = d.at("bulge").at("radius").get<double>();
    s.deform.skirt.amplitude = d.at("skirt").at("amplitude").get<double>();
    s.deform.skirt.frequency = d.at("skirt").at("frequency").get<double>();
    s.deform.skirt.height = d.at("skirt").at("height").get<double>();
    const json& b = j.at("background");
    s.background.kind = parse_enum(b.at("kind").get<std::string>(), {BackgroundKind::solid, BackgroundKind::checker, BackgroundKind::photo_clutter});
    s.background.color = rgb(b.at("color"));
    s.background.color2 = rgb(b.at("color2"));
    s.background.checker_px = b.at("checker_px").get<int>();
    s.background.octaves = b.at("octaves").get<int>();
    const json& o = j.at("occluder");
    s.occluder.enabled = o.at("enabled").get<bool>();
    s.occluder.height = o.at("height").get<double>();
    s.occluder.half_width = o.at("half_width").get<double>();
    s.occluder.color = rgb(o.at("color"));
    s.motion = j.at("motion").get<double>();
    s.segments = j.at("segments").get<int>();
    s.rings = j.at("rings").get<int>();
    s.patches = j.at("patches").get<int>();
    s.rigid_occluded_end = j.at("rigid_occluded_end").get<bool>();
    return s;
}

// Stage settings written into every generated sequence config. Stage-I sees
// a coarse decomposition, Stage-II a fine one. {} is w_skin.
constexpr const char* kSceneStageSettings = R"(
[stage1]
max_iters = 300
step0 = 0.01

[stage1.quadtree]
min_node_px = 32
color_var_threshold = 0.003

[stage2]
w_skin = {:.1f}
w_smooth = 5.0e4
max_iters = 300
step0 = 0.001
momentum = 0.5
reclassify_every = 5

[stage2.quadtree]
min_node_px = 8
color_var_threshold = 0.003
)";

std::string frame_name(int frame) { return fmt::format("frame{:04d}", frame); }
std::string camera_name(int camera) { return fmt::format("cam{:02d}", camera); }

std::string toml_array(const Pose& theta)
{
    std::string out = "[";
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        out += fmt::format("{}{}", i ? ", " : "", theta[i]);
    return out + "]";
}

} // namespace

std::string to_string(ActorKind k) { return k == ActorKind::sphere_blob ? "sphere-blob" : "two-bone-cylinder"; }

std::string to_string(DeformKind k)
{
    switch (k) {
    case DeformKind::none: return "none";
    case DeformKind::bulge: return "bulge";
    case DeformKind::skirt_swing: return "skirt-swing";
    }
    return "none";
}

std::string to_string(BackgroundKind k)
{
    switch (k) {
    case BackgroundKind::solid: return "solid";
    case BackgroundKind::checker: return "checker";
    case BackgroundKind::photo_clutter: return "photo-clutter";
    }
    return "solid";
}

void validate_synth_spec(const SynthSpec& s)
{
    if (s.n_cameras < 2 || s.n_cameras > 8)
        throw InvalidInput("n_cameras must lie in [2, 8]");
    if (s.image_size < 16 || s.image_size > 8192)
        throw InvalidInput("image_size must lie in [16, 8192]");
    if (s.n_frames < 1)
        throw InvalidInput("n_frames must be positive");
    if (s.segments < 6 || s.rings < 4)
        throw InvalidInput("mesh resolution too low");
    if (s.patches < 0 || s.background.octaves < 1 || s.background.checker_px < 1)
        throw InvalidInput("invalid texture or background parameters");
    if (s.deform.kind == DeformKind::bulge && !(s.deform.bulge.radius > 0.0))
        throw InvalidInput("bulge radius must be positive");
    if (!std::isfinite(s.motion))
        throw InvalidInput("motion scale must be finite");
}

std::vector<std::string> synth_preset_names() { return {"two-bone", "two-bone-occluded", "sphere-blob"}; }

SynthSpec synth_preset(const std::string& name)
{
    SynthSpec s;
    if (name == "two-bone" || name == "two-bone-cylinder") {
        s.deform.kind = DeformKind::bulge;
        s.deform.bulge.amplitude = 0.12;
        s.background.kind = BackgroundKind::photo_clutter;
    } else if (name == "two-bone-occluded") {
        s.deform.kind = DeformKind::bulge;
        s.deform.bulge.center = Eigen::Vector3d(0.0, 0.75, 0.0);
        s.deform.bulge.radius = 0.5;
        s.deform.bulge.amplitude = 0.1;
        s.background.kind = BackgroundKind::photo_clutter;
        s.occluder.enabled = true;
        s.rigid_occluded_end = true;
        s.n_frames = 1;
    } else if (name == "sphere-blob") {
        s.actor = ActorKind::sphere_blob;
        s.deform.kind = DeformKind::bulge;
        s.deform.bulge.center = kSphereCenter + Eigen::Vector3d(0, kSphereRadius, 0);
        s.deform.bulge.radius = 0.5 * kSphereRadius;
        s.deform.bulge.amplitude = 0.2 * kSphereRadius;
        s.background.kind = BackgroundKind::checker;
        s.rings = 16;
    } else {
        throw InvalidInput("unknown synthetic preset '" + name + "'");
    }
    return s;
}

ImageFrame make_background(const BackgroundSpec& spec, int width, int height, std::uint64_t seed)
{
    ImageFrame f;
    f.width = width;
    f.height = height;
    f.pixels.assign(static_cast<size_t>(width) * height, spec.color);
    if (spec.kind == BackgroundKind::checker) {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (((x / spec.checker_px) + (y / spec.checker_px)) % 2)
                    f.at(x, y) = spec.color2;
    } else if (spec.kind == BackgroundKind::photo_clutter) {
        std::mt19937_64 rng(mix_seed(seed, 2));
        const std::vector<double> hue = value_noise(width, height, spec.octaves, rng);
        const std::vector<double> sat = value_noise(width, height, spec.octaves, rng);
        const std::vector<double> val = value_noise(width, height, spec.octaves, rng);
        // Muted, mostly green-to-yellow clutter.
        for (size_t i = 0; i < f.pixels.size(); ++i)
            f.pixels[i] = hsv_to_rgb({0.15 + 0.3 * hue[i], 0.05 + 0.3 * sat[i], 0.25 + 0.6 * val[i]});
    }
    return f;
}

ImageFrame render_view(const std::vector<Eigen::Vector3d>& vertices, const std::vector<std::array<int, 3>>& faces,
                       const std::vector<Rgb>& colors, const Camera& cam, const ImageFrame& background)
{
    if (colors.size() != vertices.size())
        throw InvalidInput("render_view needs one color per vertex");
    if (background.width != cam.width || background.height != cam.height)
        throw InvalidInput("background extent does not match the camera");
    const RasterBuffers buf = rasterize(vertices, faces, cam);
    ImageFrame out = background;
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const int f = buf.face[buf.index(x, y)];
            if (f < 0)
                continue;
            const auto& tri = faces[f];
            Eigen::Vector2d s[3];
            double z[3];
            for (int k = 0; k < 3; ++k) {
                const Eigen::Vector3d p = cam.to_camera(vertices[tri[k]]);
                z[k] = p.z();
                s[k] = cam.focal * Eigen::Vector2d(p.x() / p.z(), p.y() / p.z()) + cam.principal_point;
            }
            const Eigen::Vector2d q(x + 0.5, y + 0.5);
            auto cross = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); };
            const double area = cross(s[1] - s[0], s[2] - s[0]);
            double w[3] = {cross(s[1] - q, s[2] - q) / area, cross(s[2] - q, s[0] - q) / area, 0.0};
            w[2] = 1.0 - w[0] - w[1];
            double norm = 0.0;
            for (int k = 0; k < 3; ++k) {
                w[k] = std::max(0.0, w[k]) / z[k];
                norm += w[k];
            }
            Rgb c{0, 0, 0};
            for (int k = 0; k < 3; ++k)
                for (int ch = 0; ch < 3; ++ch)
                    c[ch] += w[k] / norm * colors[tri[k]][ch];
            for (double& ch : c)
                ch = std::clamp(ch, 0.0, 1.0);
            out.at(x, y) = c;
        }
    }
    return out;
}

std::vector<Eigen::Vector3d> deform_bind(const DeformSpec& deform, const std::vector<Eigen::Vector3d>& bind,
                                         const std::vector<Eigen::Vector3d>& bind_normals, int frame, int n_frames)
{
    std::vector<Eigen::Vector3d> out = bind;
    if (deform.kind == DeformKind::bulge) {
        const BulgeSpec& b = deform.bulge;
        for (size_t n = 0; n < out.size(); ++n) {
            const double t = (bind[n] - b.center).norm() / b.radius;
            if (t < 1.0) {
                const double u = 1.0 - t * t;
                out[n] += b.amplitude * u * u * bind_normals[n];
            }
        }
    } else if (deform.kind == DeformKind::skirt_swing) {
        const SkirtSwingSpec& s = deform.skirt;
        const double swing = std::sin(2.0 * kPi * s.frequency * frame / std::max(1, n_frames));
        for (size_t n = 0; n < out.size(); ++n) {
            if (bind[n].y() >= s.height)
                continue;
            const double u = 1.0 - bind[n].y() / s.height;
            out[n].x() += s.amplitude * u * u * swing;
        }
    }
    return out;
}

std::vector<Eigen::Vector3d> skinned_template(const ActorModel& actor, const Pose& theta)
{
    return skin_vertices(actor.mesh, forward_kinematics(actor.skeleton, theta));
}

SynthScene build_scene(const SynthSpec& spec)
{
    validate_synth_spec(spec);
    SynthScene scene;
    scene.spec = spec;
    const Geometry geo = spec.actor == ActorKind::two_bone_cylinder ? cylinder(spec.segments, spec.rings) : uv_sphere(spec.segments, spec.rings);

    ActorModel& actor = scene.actor;
    actor.skeleton = Skeleton(skeleton_for(spec.actor));
    actor.mesh.vertices = geo.vertices;
    actor.mesh.faces = geo.faces;
    actor.mesh.vertex_rgb = texture_for(spec, geo.vertices);
    for (const Rgb& c : actor.mesh.vertex_rgb)
        actor.mesh.vertex_colors.push_back(rgb_to_hsv(c));
    actor.mesh.skinning = skinning_for(spec.actor, geo.vertices);
    compute_bind_offsets(actor.skeleton, actor.mesh);
    actor.model_gaussians.gaussians = model_gaussians_for(spec.actor);
    compute_model_gaussian_offsets(actor.skeleton, actor.model_gaussians);
    actor.model_gaussians = assign_model_gaussian_colors(actor.model_gaussians, actor.mesh);
    actor.rigidity.weights.assign(geo.vertices.size(), 0.0);
    if (spec.rigid_occluded_end)
        for (size_t n = 0; n < geo.vertices.size(); ++n)
            if (geo.vertices[n].y() < spec.occluder.height)
                actor.rigidity.weights[n] = 1.0;
    actor.vertex_sigmas = default_vertex_sigmas(actor.mesh);
    validate_actor(actor);

    for (int k = 0; k < spec.n_cameras; ++k)
        scene.cameras.push_back(ring_camera(spec, k));

    const std::vector<Eigen::Vector3d> normals = vertex_normals(geo.vertices, geo.faces);
    for (int f = 0; f < spec.n_frames; ++f) {
        const Pose theta = pose_for(spec, actor.skeleton, f);
        TemplateMesh deformed = actor.mesh;
        deformed.vertices = deform_bind(spec.deform, geo.vertices, normals, f, spec.n_frames);
        compute_bind_offsets(actor.skeleton, deformed);
        scene.meshes.push_back(skin_vertices(deformed, forward_kinematics(actor.skeleton, theta)));
        scene.poses.push_back(theta);
    }

    if (spec.occluder.enabled) {
        const double w = spec.occluder.half_width;
        const Geometry b = box(Eigen::Vector3d(-w, -0.05, -w), Eigen::Vector3d(w, spec.occluder.height, w));
        scene.occluder_vertices = b.vertices;
        scene.occluder_faces = b.faces;
    }
    scene.background = make_background(spec.background, spec.image_size, spec.image_size, spec.seed);
    return scene;
}

ImageFrame render_frame(const SynthScene& scene, int frame, int camera)
{
    std::vector<Eigen::Vector3d> v = scene.meshes.at(frame);
    std::vector<std::array<int, 3>> f = scene.actor.mesh.faces;
    std::vector<Rgb> c = scene.actor.mesh.vertex_rgb;
    const int base = static_cast<int>(v.size());
    for (const Eigen::Vector3d& p : scene.occluder_vertices) {
        v.push_back(p);
        c.push_back(scene.spec.occluder.color);
    }
    for (const auto& tri : scene.occluder_faces)
        f.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
    ImageFrame img = render_view(v, f, c, scene.cameras.at(camera), scene.background);
    img.camera_id = camera;
    img.frame_id = frame;
    return img;
}

fs::path SynthManifest::image(int camera, int frame) const { return root / images_root / camera_name(camera) / (frame_name(frame) + ".png"); }
fs::path SynthManifest::mask(int camera, int frame) const { return root / masks_root / camera_name(camera) / (frame_name(frame) + ".png"); }
fs::path SynthManifest::gt_mesh(int frame) const { return root / ground_truth_dir / (frame_name(frame) + ".obj"); }
fs::path SynthManifest::gt_pose(int frame) const { return root / ground_truth_dir / ("pose_" + frame_name(frame) + ".json"); }

SynthManifest generate(const SynthSpec& spec, const fs::path& out_dir)
{
    const SynthScene scene = build_scene(spec);
    fs::create_directories(out_dir);

    SynthManifest m;
    m.root = out_dir;
    m.spec = spec;
    m.template_dir = "template";
    m.cameras = "cameras.json";
    m.images_root = "images";
    m.masks_root = "masks";
    m.ground_truth_dir = "ground_truth";
    m.sequence_config = "sequence.toml";
    m.initial_theta = scene.poses.front();
    m.n_frames = spec.n_frames;
    m.n_cameras = spec.n_cameras;
    m.vertex_count = scene.actor.mesh.vertex_count();
    m.joint_count = scene.actor.skeleton.joint_count();
    m.dof_count = scene.actor.skeleton.dof_count();

    save_template(scene.actor, TemplatePaths::in_directory(out_dir / m.template_dir));
    save_cameras(out_dir / m.cameras, scene.cameras);

    for (int f = 0; f < spec.n_frames; ++f) {
        for (int c = 0; c < spec.n_cameras; ++c) {
            const fs::path img = m.image(c, f), msk = m.mask(c, f);
            fs::create_directories(img.parent_path());
            fs::create_directories(msk.parent_path());
            write_png(img, to_rgb8(render_frame(scene, f, c)));
            const Camera& cam = scene.cameras[c];
            write_mask_png(msk, model_silhouette(scene.meshes[f], scene.actor.mesh.faces, cam), cam.width, cam.height);
        }
        fs::create_directories(m.gt_mesh(f).parent_path());
        write_obj(m.gt_mesh(f), scene.meshes[f], scene.actor.mesh.vertex_rgb, scene.actor.mesh.faces);
        detail::write_text(m.gt_pose(f), json{{"frame", f}, {"theta", detail::to_json(scene.poses[f])}}.dump(2) + "\n");
    }

    std::string toml = fmt::format("# Sequence configuration for the synthetic '{}' scene.\n", to_string(spec.actor));
    toml += fmt::format("seed = {}\nthreads = 1\n\n", spec.seed);
    toml += "[paths]\nimages = \"images\"\ntemplate = \"template\"\ncameras = \"cameras.json\"\nmasks = \"masks\"\noutput = \"run\"\n\n";
    toml += fmt::format("[frames]\nfirst = 0\nlast = {}\n\n", spec.n_frames - 1);
    toml += fmt::format("[initial]\ntheta = {}\n", toml_array(m.initial_theta));
    // Occluded parts get no image evidence and lean harder on the skinning prior.
    toml += fmt::format(kSceneStageSettings, spec.occluder.enabled ? 15.0 : 3.0);
    detail::write_text(out_dir / m.sequence_config, toml);

    json manifest = {{"spec", spec_to_json(spec)},
                     {"template", m.template_dir.generic_string()},
                     {"cameras", m.cameras.generic_string()},
                     {"images_root", m.images_root.generic_string()},
                     {"masks_root", m.masks_root.generic_string()},
                     {"ground_truth", m.ground_truth_dir.generic_string()},
                     {"sequence_config", m.sequence_config.generic_string()},
                     {"initial_theta", detail::to_json(m.initial_theta)},
                     {"n_frames", m.n_frames},
                     {"n_cameras", m.n_cameras},
                     {"vertex_count", m.vertex_count},
                     {"joint_count", m.joint_count},
                     {"dof_count", m.dof_count}};
    detail::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return m;
}

SynthManifest load_manifest(const fs::path& manifest_path)
{
    const json j = detail::read_json(manifest_path, "manifest");
    SynthManifest m;
    try {
        m.root = manifest_path.parent_path();
        m.spec = spec_from_json(j.at("spec"));
        m.template_dir = j.at("template").get<std::string>();
        m.cameras = j.at("cameras").get<std::string>();
        m.images_root = j.at("images_root").get<std::string>();
        m.masks_root = j.at("masks_root").get<std::string>();
        m.ground_truth_dir = j.at("ground_truth").get<std::string>();
        m.sequence_config = j.at("sequence_config").get<std::string>();
        m.initial_theta = detail::vecx(j.at("initial_theta"), "initial_theta");
        m.n_frames = j.at("n_frames").get<int>();
        m.n_cameras = j.at("n_cameras").get<int>();
        m.vertex_count = j.at("vertex_count").get<int>();
        m.joint_count = j.at("joint_count").get<int>();
        m.dof_count = j.at("dof_count").get<int>();
    } catch (const json::exception& e) {
        throw CorruptData("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    return m;
}

} // namespace capture
