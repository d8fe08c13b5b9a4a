#include "capture/actor.hpp"
#include "capture/errors.hpp"
#include "capture/eval.hpp"
#include "capture/synth.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <unistd.h>

using namespace capture;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("capture_synth_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

std::map<std::string, std::string> read_tree(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) {
            std::ifstream in(e.path(), std::ios::binary);
            out[fs::relative(e.path(), root).generic_string()] = std::string(std::istreambuf_iterator<char>(in), {});
        }
    return out;
}

SynthSpec small_spec()
{
    SynthSpec s = synth_preset("two-bone");
    s.n_cameras = 2;
    s.image_size = 48;
    s.n_frames = 2;
    s.segments = 8;
    s.rings = 7;
    s.patches = 3;
    return s;
}

Camera square_camera(int size)
{
    Camera cam;
    cam.focal = size;
    cam.principal_point = {0.5 * size, 0.5 * size};
    cam.width = size;
    cam.height = size;
    return cam;
}

} // namespace

TEST(Generate, SameSpecGivesIdenticalTrees)
{
    const fs::path a = scratch_dir("a"), b = scratch_dir("b");
    generate(small_spec(), a);
    generate(small_spec(), b);
    const auto ta = read_tree(a), tb = read_tree(b);
    EXPECT_GT(ta.size(), 10u);
    EXPECT_TRUE(ta == tb);

    SynthSpec other = small_spec();
    other.seed += 1;
    const fs::path c = scratch_dir("c");
    generate(other, c);
    EXPECT_NE(read_tree(c).at("images/cam00/frame0000.png"), ta.at("images/cam00/frame0000.png"));
    fs::remove_all(a);
    fs::remove_all(b);
    fs::remove_all(c);
}

TEST(Generate, MasksMatchSilhouettesAndTemplatesLoad)
{
    const fs::path dir = scratch_dir("masks");
    const SynthSpec spec = small_spec();
    const SynthManifest m = generate(spec, dir);
    const SynthScene scene = build_scene(spec);
    for (int f = 0; f < spec.n_frames; ++f)
        for (int c = 0; c < spec.n_cameras; ++c) {
            int w = 0, h = 0;
            const Mask stored = load_mask_png(m.mask(c, f), w, h);
            EXPECT_EQ(stored, model_silhouette(scene.meshes[f], scene.actor.mesh.faces, scene.cameras[c])) << c << " " << f;
        }
    const ActorModel loaded = load_template(TemplatePaths::in_directory(dir / m.template_dir));
    EXPECT_EQ(loaded.mesh.vertex_count(), scene.actor.mesh.vertex_count());
    EXPECT_EQ(loaded.skeleton.dof_count(), scene.actor.skeleton.dof_count());

    const SynthManifest back = load_manifest(dir / "manifest.json");
    EXPECT_EQ(back.n_frames, m.n_frames);
    EXPECT_EQ(back.n_cameras, m.n_cameras);
    EXPECT_EQ(back.vertex_count, m.vertex_count);
    EXPECT_EQ(back.initial_theta, m.initial_theta);
    EXPECT_EQ(back.spec.seed, spec.seed);
    EXPECT_EQ(back.spec.deform.bulge.amplitude, spec.deform.bulge.amplitude);
    EXPECT_EQ(back.mask(1, 1), m.mask(1, 1));
    EXPECT_TRUE(fs::exists(back.gt_mesh(1)));
    EXPECT_TRUE(fs::exists(back.gt_pose(0)));
    fs::remove_all(dir);
}

TEST(Deform, NoneMeansSkinnedTemplate)
{
    SynthSpec s = small_spec();
    s.deform.kind = DeformKind::none;
    s.n_frames = 3;
    const SynthScene scene = build_scene(s);
    for (int f = 0; f < s.n_frames; ++f)
        EXPECT_EQ(scene.meshes[f], skinned_template(scene.actor, scene.poses[f])) << f;
}

TEST(Deform, SphereBulgePeaksAtApex)
{
    // Amplitude 0.2 R, centred on the apex, radius 0.5 R.
    SynthSpec s = synth_preset("sphere-blob");
    s.n_frames = 1;
    s.motion = 0.0;
    s.n_cameras = 2;
    s.image_size = 32;
    const SynthScene scene = build_scene(s);
    const auto rest = skinned_template(scene.actor, scene.poses[0]);
    const double radius = 0.5;
    double worst = 0.0;
    size_t arg = 0;
    for (size_t i = 0; i < rest.size(); ++i) {
        const double d = (scene.meshes[0][i] - rest[i]).norm();
        if (d > worst) {
            worst = d;
            arg = i;
        }
    }
    EXPECT_NEAR(worst, 0.2 * radius, 1e-12);
    // The apex is the topmost rest vertex.
    for (size_t i = 0; i < rest.size(); ++i)
        EXPECT_LE(rest[i].y(), rest[arg].y() + 1e-12);
}

TEST(Deform, BulgeProfile)
{
    DeformSpec d;
    d.kind = DeformKind::bulge;
    d.bulge.amplitude = 0.3;
    d.bulge.center = Eigen::Vector3d::Zero();
    d.bulge.radius = 2.0;
    const std::vector<Eigen::Vector3d> bind = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 5}};
    const std::vector<Eigen::Vector3d> normals(4, Eigen::Vector3d::UnitZ());
    const auto moved = deform_bind(d, bind, normals, 0, 1);
    EXPECT_NEAR(moved[0].z(), 0.3, 1e-15);
    EXPECT_NEAR(moved[1].z(), 0.3 * 0.75 * 0.75, 1e-15); // t = 1/2
    EXPECT_EQ(moved[2], bind[2]);
    EXPECT_EQ(moved[3], bind[3]);
}

TEST(RenderView, EmptyMeshLeavesBackground)
{
    BackgroundSpec bg;
    bg.kind = BackgroundKind::checker;
    bg.checker_px = 3;
    const ImageFrame back = make_background(bg, 20, 20, 1);
    const ImageFrame out = render_view({}, {}, {}, square_camera(20), back);
    EXPECT_EQ(out.pixels, back.pixels);
}

TEST(RenderView, FullCoverageHidesBackground)
{
    const ImageFrame back = make_background(BackgroundSpec{}, 20, 20, 1);
    const std::vector<Eigen::Vector3d> v = {{-5, -5, 2}, {5, -5, 2}, {5, 5, 2}, {-5, 5, 2}};
    const Rgb red{1.0, 0.0, 0.0};
    const ImageFrame out = render_view(v, {{0, 1, 2}, {0, 2, 3}}, {red, red, red, red}, square_camera(20), back);
    for (const Rgb& p : out.pixels)
        EXPECT_EQ(p, red);
}

TEST(RenderView, CoverageEqualsRasterMask)
{
    SynthSpec s = small_spec();
    s.background.kind = BackgroundKind::solid;
    s.background.color = {0.0, 0.0, 0.0};
    const SynthScene scene = build_scene(s);
    std::vector<Rgb> colors(scene.actor.mesh.vertex_count(), Rgb{0.2, 0.9, 0.4});
    for (int c = 0; c < s.n_cameras; ++c) {
        const Camera& cam = scene.cameras[c];
        const ImageFrame out = render_view(scene.meshes[0], scene.actor.mesh.faces, colors, cam, scene.background);
        const Mask m = model_silhouette(scene.meshes[0], scene.actor.mesh.faces, cam);
        for (size_t i = 0; i < m.size(); ++i)
            EXPECT_EQ(m[i] != 0, out.pixels[i] != scene.background.pixels[i]) << "pixel " << i;
    }
}

TEST(SynthSpecs, ValidationAndPresets)
{
    for (const std::string& name : synth_preset_names())
        EXPECT_NO_THROW(validate_synth_spec(synth_preset(name))) << name;
    EXPECT_THROW(synth_preset("nope"), InvalidInput);
    SynthSpec s = small_spec();
    s.n_cameras = 1;
    EXPECT_THROW(validate_synth_spec(s), InvalidInput);
    s = small_spec();
    s.n_cameras = 9;
    EXPECT_THROW(validate_synth_spec(s), InvalidInput);
    s = small_spec();
    s.n_frames = 0;
    EXPECT_THROW(validate_synth_spec(s), InvalidInput);
    s = small_spec();
    s.deform.bulge.radius = 0.0;
    EXPECT_THROW(validate_synth_spec(s), InvalidInput);
}
