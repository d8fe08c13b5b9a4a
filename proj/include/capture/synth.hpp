#pragma once

#include "capture/actor.hpp"
#include "capture/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace capture {

enum class ActorKind { sphere_blob, two_bone_cylinder };
enum class DeformKind { none, bulge, skirt_swing };
enum class BackgroundKind { solid, checker, photo_clutter };

// Displacement along the bind-pose normal of amplitude * (1 - t^2)^2 with
// t = |x - center| / radius, zero for t >= 1. Applied in the bind pose, so
// the bump travels with the bones.
struct BulgeSpec {
    double amplitude = 0.07;
    Eigen::Vector3d center = Eigen::Vector3d(0.0, 1.5, 0.0);
    double radius = 0.55;
};

// Lateral sway of the lower part of the actor, strongest at the bottom:
// x += amplitude * (1 - y / height)^2 * sin(2 pi frequency frame / n_frames)
// for bind heights y below `height`.
struct SkirtSwingSpec {
    double amplitude = 0.05;
    double frequency = 1.0;
    double height = 0.8;
};

struct DeformSpec {
    DeformKind kind = DeformKind::none;
    BulgeSpec bulge;
    SkirtSwingSpec skirt;
};

struct BackgroundSpec {
    BackgroundKind kind = BackgroundKind::solid;
    Rgb color{0.35, 0.35, 0.35};
    Rgb color2{0.6, 0.6, 0.6}; // second checker color
    int checker_px = 32;
    int octaves = 4;
};

// An opaque gray box around the bottom end of the actor.
struct OccluderSpec {
    bool enabled = false;
    double height = 0.55;
    double half_width = 0.45;
    Rgb color{0.5, 0.5, 0.5};
};

struct SynthSpec {
    std::uint64_t seed = 7;
    ActorKind actor = ActorKind::two_bone_cylinder;
    int n_cameras = 4;
    int image_size = 512;
    int n_frames = 10;
    DeformSpec deform;
    BackgroundSpec background;
    OccluderSpec occluder;
    double motion = 1.0;    // scales the scripted joint motion; 0 holds the rest pose
    int segments = 24;      // around the cylinder or sphere
    int rings = 31;         // along the cylinder, or latitude bands of the sphere
    int patches = 10;       // texture spots
    bool rigid_occluded_end = false; // mark the occluded end rigid in the template
};

// Throws InvalidInput for out-of-range fields.
void validate_synth_spec(const SynthSpec& spec);

// Named presets: "two-bone" (bulge, clutter), "two-bone-occluded",
// "sphere-blob". Throws InvalidInput for unknown names.
SynthSpec synth_preset(const std::string& name);
std::vector<std::string> synth_preset_names();

ImageFrame make_background(const BackgroundSpec& spec, int width, int height, std::uint64_t seed);

// Flat-shaded render of per-vertex colors over a background, using the
// z-buffer of rasterize(). Colors are interpolated perspective-correctly.
ImageFrame render_view(const std::vector<Eigen::Vector3d>& vertices, const std::vector<std::array<int, 3>>& faces,
                       const std::vector<Rgb>& colors, const Camera& cam, const ImageFrame& background);

// Deformed bind-pose positions of every vertex for the given frame.
std::vector<Eigen::Vector3d> deform_bind(const DeformSpec& deform, const std::vector<Eigen::Vector3d>& bind,
                                         const std::vector<Eigen::Vector3d>& bind_normals, int frame, int n_frames);

struct SynthScene {
    SynthSpec spec;
    ActorModel actor;
    std::vector<Camera> cameras;
    std::vector<Pose> poses;                           // ground truth per frame
    std::vector<std::vector<Eigen::Vector3d>> meshes;  // ground-truth vertices per frame
    std::vector<Eigen::Vector3d> occluder_vertices;
    std::vector<std::array<int, 3>> occluder_faces;
    ImageFrame background;
};

// Everything generate() writes, in memory.
SynthScene build_scene(const SynthSpec& spec);

// Ground-truth skinned template vertices (no deformation) at a pose.
std::vector<Eigen::Vector3d> skinned_template(const ActorModel& actor, const Pose& theta);

// Render of one frame and camera, occluder included.
ImageFrame render_frame(const SynthScene& scene, int frame, int camera);

// Paths are relative to the directory holding manifest.json.
struct SynthManifest {
    std::filesystem::path root;
    SynthSpec spec;
    std::filesystem::path template_dir;
    std::filesystem::path cameras;
    std::filesystem::path images_root;
    std::filesystem::path masks_root;
    std::filesystem::path ground_truth_dir;
    std::filesystem::path sequence_config;
    Pose initial_theta;
    int n_frames = 0;
    int n_cameras = 0;
    int vertex_count = 0;
    int joint_count = 0;
    int dof_count = 0;

    std::filesystem::path image(int camera, int frame) const;
    std::filesystem::path mask(int camera, int frame) const;
    std::filesystem::path gt_mesh(int frame) const;
    std::filesystem::path gt_pose(int frame) const;
};

// Writes the template bundle, camera rig, per-frame images, silhouette masks,
// ground-truth meshes and poses, a sequence config and manifest.json.
SynthManifest generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

SynthManifest load_manifest(const std::filesystem::path& manifest_path);

std::string to_string(ActorKind k);
std::string to_string(DeformKind k);
std::string to_string(BackgroundKind k);

} // namespace capture
