#pragma once

#include "capture/gaussian.hpp"
#include "capture/image.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace capture {

using Pose = Eigen::VectorXd;

// Number of leading pose entries owned by the free root: translation (x, y, z)
// followed by rotations about the x, y and z axes, composed as Rx * Ry * Rz.
inline constexpr int kRootDofs = 6;

struct Joint {
    std::string name;
    int parent = -1; // -1 for the root
    Eigen::Vector3d rest_offset = Eigen::Vector3d::Zero();
    std::vector<Eigen::Vector3d> dof_axes; // at most 3, unit length
};

class Skeleton {
public:
    Skeleton() = default;
    // Validates the hierarchy and axes; throws InvalidModel.
    explicit Skeleton(std::vector<Joint> joints);

    const std::vector<Joint>& joints() const { return joints_; }
    int joint_count() const { return static_cast<int>(joints_.size()); }
    int dof_count() const { return dof_count_; }
    // Index into the pose vector of the first DOF of joint j.
    int dof_offset(int j) const { return dof_offset_[j]; }
    // Joints ordered parents-first.
    const std::vector<int>& order() const { return order_; }
    // True when joint a lies on the path from the root to joint j (inclusive).
    bool is_ancestor_or_self(int a, int j) const { return ancestor_[static_cast<size_t>(a) * joints_.size() + j] != 0; }
    // Owning joint of every pose entry; the six root entries map to joint 0.
    int dof_joint(int k) const { return dof_joint_[k]; }

    Pose rest_pose() const { return Pose::Zero(dof_count_); }

private:
    std::vector<Joint> joints_;
    std::vector<int> dof_offset_;
    std::vector<int> dof_joint_;
    std::vector<int> order_;
    std::vector<char> ancestor_;
    int dof_count_ = kRootDofs;
};

struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
    Eigen::Vector3d apply_inverse(const Eigen::Vector3d& p) const { return rotation.transpose() * (p - translation); }
    RigidTransform operator*(const RigidTransform& o) const { return {rotation * o.rotation, rotation * o.translation + translation}; }
};

// World-space description of one pose DOF at the current pose. Moving a point
// rigidly attached below the DOF changes it by `axis` (translation) or by
// axis x (p - pivot) (rotation) per unit of the pose entry.
struct DofFrame {
    bool translation = false;
    Eigen::Vector3d axis = Eigen::Vector3d::Zero();
    Eigen::Vector3d pivot = Eigen::Vector3d::Zero();
    int joint = 0;

    Eigen::Vector3d point_derivative(const Eigen::Vector3d& p) const
    {
        return translation ? axis : Eigen::Vector3d(axis.cross(p - pivot));
    }
};

struct KinematicState {
    std::vector<RigidTransform> transforms; // world-from-joint, one per joint
    std::vector<DofFrame> dofs;             // one per pose entry
};

// Throws InvalidModel if the pose length does not match the skeleton.
std::vector<RigidTransform> forward_kinematics(const Skeleton& skeleton, const Pose& theta);
KinematicState forward_kinematics_with_dofs(const Skeleton& skeleton, const Pose& theta);

struct SkinWeight {
    int joint = 0;
    double weight = 0.0;
};

struct TemplateMesh {
    std::vector<Eigen::Vector3d> vertices; // bind pose
    std::vector<std::array<int, 3>> faces;
    std::vector<ColorHSV> vertex_colors;
    std::vector<Rgb> vertex_rgb; // the colors as read from disk
    std::vector<std::vector<SkinWeight>> skinning;
    // bind_offsets[n][k] is the offset of vertex n in the bind frame of joint skinning[n][k].joint.
    std::vector<std::vector<Eigen::Vector3d>> bind_offsets;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
};

struct RigidityMask {
    std::vector<double> weights; // 1 = rigid, 0 = free
};

struct ModelGaussian {
    Gaussian3D bind;   // bind-pose Gaussian, world frame
    int joint = 0;
    Eigen::Vector3d local_offset = Eigen::Vector3d::Zero(); // mean in the owning joint's bind frame
};

struct ModelGaussianSet {
    std::vector<ModelGaussian> gaussians;
};

struct ActorModel {
    Skeleton skeleton;
    TemplateMesh mesh;
    ModelGaussianSet model_gaussians;
    RigidityMask rigidity;
    std::vector<double> vertex_sigmas; // default per-vertex Gaussian std
};

// Fills bind_offsets from the rest-pose transforms of the skeleton.
void compute_bind_offsets(const Skeleton& skeleton, TemplateMesh& mesh);
void compute_model_gaussian_offsets(const Skeleton& skeleton, ModelGaussianSet& set);

// Linear blend skinning: sum_j W(j, n) * T_j * d_{j, n}.
std::vector<Eigen::Vector3d> skin_vertices(const TemplateMesh& mesh, const std::vector<RigidTransform>& transforms);

std::vector<Gaussian3D> pose_model_gaussians(const ModelGaussianSet& set, const std::vector<RigidTransform>& transforms);

// Each Gaussian takes the circular-mean HSV of the template vertices inside
// its 2-sigma ball, or the nearest vertex's color if that ball is empty.
ModelGaussianSet assign_model_gaussian_colors(const ModelGaussianSet& set, const TemplateMesh& mesh);

// Half the mean length of the edges incident to each vertex, in the bind pose.
std::vector<double> default_vertex_sigmas(const TemplateMesh& mesh);

// Sorted, de-duplicated one-ring neighbours of every vertex.
std::vector<std::vector<int>> vertex_neighbors(int vertex_count, const std::vector<std::array<int, 3>>& faces);

// Checks weights, offsets, faces and mask against the skeleton; throws
// InvalidModel naming the offending entity.
void validate_actor(const ActorModel& actor);

struct TemplatePaths {
    std::filesystem::path mesh;
    std::filesystem::path skeleton;
    std::filesystem::path weights;
    std::filesystem::path rigidity; // optional file; missing means all-free
    std::filesystem::path gaussians;

    static TemplatePaths in_directory(const std::filesystem::path& dir);
};

ActorModel load_template(const TemplatePaths& paths);
void save_template(const ActorModel& actor, const TemplatePaths& paths);

// Wavefront OBJ with per-vertex colors on the `v` lines.
struct ObjMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Rgb> colors;
    std::vector<std::array<int, 3>> faces;
};

ObjMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const std::vector<Eigen::Vector3d>& vertices, const std::vector<Rgb>& colors,
               const std::vector<std::array<int, 3>>& faces);

} // namespace capture
