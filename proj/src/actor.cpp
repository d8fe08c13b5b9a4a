#include "capture/actor.hpp"

#include "capture/errors.hpp"

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace capture {

Skeleton::Skeleton(std::vector<Joint> joints) : joints_(std::move(joints))
{
    const int n = static_cast<int>(joints_.size());
    if (n == 0)
        throw InvalidModel("skeleton has no joints");
    if (joints_[0].parent != -1)
        throw InvalidModel("joint 0 ('" + joints_[0].name + "') must be the root");

    std::vector<std::vector<int>> children(n);
    for (int j = 1; j < n; ++j) {
        const int p = joints_[j].parent;
        if (p < 0 || p >= n || p == j)
            throw InvalidModel("joint " + std::to_string(j) + " ('" + joints_[j].name + "') has invalid parent " + std::to_string(p));
        children[p].push_back(j);
    }

    std::queue<int> queue;
    queue.push(0);
    while (!queue.empty()) {
        const int j = queue.front();
        queue.pop();
        order_.push_back(j);
        for (int c : children[j])
            queue.push(c);
    }
    if (static_cast<int>(order_.size()) != n)
        throw InvalidModel("joint hierarchy is not a tree rooted at joint 0");

    for (int j = 0; j < n; ++j) {
        const Joint& joint = joints_[j];
        if (joint.dof_axes.size() > 3)
            throw InvalidModel("joint '" + joint.name + "' has more than 3 DOF axes");
        if (!joint.rest_offset.allFinite())
            throw InvalidModel("joint '" + joint.name + "' has a non-finite rest offset");
        for (const auto& axis : joint.dof_axes)
            if (!axis.allFinite() || std::fabs(axis.norm() - 1.0) > 1e-9)
                throw InvalidModel("joint '" + joint.name + "' has a non-unit DOF axis");
    }

    dof_offset_.resize(n);
    dof_joint_.assign(kRootDofs, 0);
    int next = kRootDofs;
    for (int j = 0; j < n; ++j) {
        dof_offset_[j] = next;
        for (size_t k = 0; k < joints_[j].dof_axes.size(); ++k)
            dof_joint_.push_back(j);
        next += static_cast<int>(joints_[j].dof_axes.size());
    }
    dof_count_ = next;

    ancestor_.assign(static_cast<size_t>(n) * n, 0);
    for (int j = 0; j < n; ++j)
        for (int a = j; a != -1; a = joints_[a].parent)
            ancestor_[static_cast<size_t>(a) * n + j] = 1;
}

namespace {

Eigen::Matrix3d axis_rotation(const Eigen::Vector3d& axis, double angle)
{
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

void check_pose(const Skeleton& skeleton, const Pose& theta)
{
    if (theta.size() != skeleton.dof_count())
        throw InvalidModel("pose has " + std::to_string(theta.size()) + " entries, skeleton expects " +
                           std::to_string(skeleton.dof_count()));
    if (!theta.allFinite())
        throw InvalidModel("pose contains non-finite entries");
}

} // namespace

KinematicState forward_kinematics_with_dofs(const Skeleton& skeleton, const Pose& theta)
{
    check_pose(skeleton, theta);
    const auto& joints = skeleton.joints();
    KinematicState state;
    state.transforms.resize(joints.size());
    state.dofs.resize(static_cast<size_t>(skeleton.dof_count()));

    for (int j : skeleton.order()) {
        const Joint& joint = joints[j];
        RigidTransform t;
        if (j == 0) {
            t.translation = theta.head<3>() + joint.rest_offset;
            for (int k = 0; k < 3; ++k) {
                DofFrame& tr = state.dofs[k];
                tr.translation = true;
                tr.axis = Eigen::Vector3d::Unit(k);
                tr.joint = 0;
            }
            for (int k = 0; k < 3; ++k) {
                DofFrame& rot = state.dofs[3 + k];
                rot.axis = t.rotation * Eigen::Vector3d::Unit(k);
                rot.pivot = t.translation;
                rot.joint = 0;
                t.rotation = t.rotation * axis_rotation(Eigen::Vector3d::Unit(k), theta[3 + k]);
            }
        } else {
            const RigidTransform& parent = state.transforms[joint.parent];
            t.rotation = parent.rotation;
            t.translation = parent.apply(joint.rest_offset);
        }
        const int offset = skeleton.dof_offset(j);
        for (size_t k = 0; k < joint.dof_axes.size(); ++k) {
            DofFrame& rot = state.dofs[offset + k];
            rot.axis = t.rotation * joint.dof_axes[k];
            rot.pivot = t.translation;
            rot.joint = j;
            t.rotation = t.rotation * axis_rotation(joint.dof_axes[k], theta[offset + static_cast<int>(k)]);
        }
        state.transforms[j] = t;
    }
    return state;
}

std::vector<RigidTransform> forward_kinematics(const Skeleton& skeleton, const Pose& theta)
{
    return forward_kinematics_with_dofs(skeleton, theta).transforms;
}

void compute_bind_offsets(const Skeleton& skeleton, TemplateMesh& mesh)
{
    const auto rest = forward_kinematics(skeleton, skeleton.rest_pose());
    mesh.bind_offsets.assign(mesh.vertices.size(), {});
    for (size_t n = 0; n < mesh.vertices.size(); ++n) {
        for (const SkinWeight& w : mesh.skinning[n]) {
            if (w.joint < 0 || w.joint >= skeleton.joint_count())
                throw InvalidModel("vertex " + std::to_string(n) + " references unknown joint " + std::to_string(w.joint));
            mesh.bind_offsets[n].push_back(rest[w.joint].apply_inverse(mesh.vertices[n]));
        }
    }
}

void compute_model_gaussian_offsets(const Skeleton& skeleton, ModelGaussianSet& set)
{
    const auto rest = forward_kinematics(skeleton, skeleton.rest_pose());
    for (size_t m = 0; m < set.gaussians.size(); ++m) {
        ModelGaussian& g = set.gaussians[m];
        if (g.joint < 0 || g.joint >= skeleton.joint_count())
            throw InvalidModel("model gaussian " + std::to_string(m) + " references unknown joint " + std::to_string(g.joint));
        g.local_offset = rest[g.joint].apply_inverse(g.bind.mu);
    }
}

std::vector<Eigen::Vector3d> skin_vertices(const TemplateMesh& mesh, const std::vector<RigidTransform>& transforms)
{
    if (mesh.skinning.size() != mesh.vertices.size() || mesh.bind_offsets.size() != mesh.vertices.size())
        throw InvalidModel("skinning data does not match the vertex count");
    std::vector<Eigen::Vector3d> out(mesh.vertices.size(), Eigen::Vector3d::Zero());
    for (size_t n = 0; n < mesh.vertices.size(); ++n) {
        const auto& weights = mesh.skinning[n];
        if (weights.size() != mesh.bind_offsets[n].size())
            throw InvalidModel("vertex " + std::to_string(n) + " has mismatched skinning offsets");
        for (size_t k = 0; k < weights.size(); ++k) {
            const int j = weights[k].joint;
            if (j < 0 || j >= static_cast<int>(transforms.size()))
                throw InvalidModel("vertex " + std::to_string(n) + " references a joint without a transform");
            out[n] += weights[k].weight * transforms[j].apply(mesh.bind_offsets[n][k]);
        }
    }
    return out;
}

std::vector<Gaussian3D> pose_model_gaussians(const ModelGaussianSet& set, const std::vector<RigidTransform>& transforms)
{
    std::vector<Gaussian3D> out;
    out.reserve(set.gaussians.size());
    for (const ModelGaussian& g : set.gaussians) {
        if (g.joint < 0 || g.joint >= static_cast<int>(transforms.size()))
            throw InvalidModel("model gaussian references a joint without a transform");
        Gaussian3D posed = g.bind;
        posed.mu = transforms[g.joint].apply(g.local_offset);
        out.push_back(posed);
    }
    return out;
}

namespace {

ColorHSV circular_mean(const std::vector<ColorHSV>& colors)
{
    double c = 0.0, s = 0.0, sat = 0.0, val = 0.0;
    for (const ColorHSV& col : colors) {
        c += std::cos(2.0 * std::numbers::pi * col.h);
        s += std::sin(2.0 * std::numbers::pi * col.h);
        sat += col.s;
        val += col.v;
    }
    const double n = static_cast<double>(colors.size());
    ColorHSV out;
    double h = (std::fabs(c) < 1e-15 && std::fabs(s) < 1e-15) ? 0.0 : std::atan2(s, c) / (2.0 * std::numbers::pi);
    if (h < 0.0)
        h += 1.0;
    if (h >= 1.0)
        h -= 1.0;
    out.h = h;
    out.s = sat / n;
    out.v = val / n;
    return out;
}

} // namespace

ModelGaussianSet assign_model_gaussian_colors(const ModelGaussianSet& set, const TemplateMesh& mesh)
{
    if (mesh.vertices.empty())
        throw InvalidModel("cannot color model gaussians from an empty mesh");
    ModelGaussianSet out = set;
    for (ModelGaussian& g : out.gaussians) {
        const double radius2 = 4.0 * g.bind.sigma * g.bind.sigma;
        std::vector<ColorHSV> near;
        size_t nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (size_t n = 0; n < mesh.vertices.size(); ++n) {
            const double d2 = (mesh.vertices[n] - g.bind.mu).squaredNorm();
            if (d2 <= radius2)
                near.push_back(mesh.vertex_colors[n]);
            if (d2 < best) {
                best = d2;
                nearest = n;
            }
        }
        g.bind.color = near.empty() ? mesh.vertex_colors[nearest] : circular_mean(near);
    }
    return out;
}

std::vector<std::vector<int>> vertex_neighbors(int vertex_count, const std::vector<std::array<int, 3>>& faces)
{
    std::vector<std::vector<int>> nbrs(static_cast<size_t>(vertex_count));
    for (const auto& f : faces) {
        for (int k = 0; k < 3; ++k) {
            const int a = f[k];
            const int b = f[(k + 1) % 3];
            nbrs[a].push_back(b);
            nbrs[b].push_back(a);
        }
    }
    for (auto& list : nbrs) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return nbrs;
}

std::vector<double> default_vertex_sigmas(const TemplateMesh& mesh)
{
    const int n = mesh.vertex_count();
    const auto nbrs = vertex_neighbors(n, mesh.faces);
    std::vector<double> sigmas(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (nbrs[i].empty())
            throw InvalidModel("vertex " + std::to_string(i) + " has no incident edge");
        double sum = 0.0;
        for (int k : nbrs[i])
            sum += (mesh.vertices[i] - mesh.vertices[k]).norm();
        sigmas[i] = 0.5 * sum / static_cast<double>(nbrs[i].size());
        if (!(sigmas[i] > 0.0))
            throw InvalidModel("vertex " + std::to_string(i) + " has only zero-length edges");
    }
    return sigmas;
}

void validate_actor(const ActorModel& actor)
{
    const TemplateMesh& mesh = actor.mesh;
    const size_t n = mesh.vertices.size();
    const int joints = actor.skeleton.joint_count();
    if (n == 0)
        throw InvalidModel("template mesh has no vertices");
    if (mesh.vertex_colors.size() != n || mesh.vertex_rgb.size() != n)
        throw InvalidModel("vertex color count does not match the vertex count");
    if (mesh.skinning.size() != n)
        throw InvalidModel("skinning weights cover " + std::to_string(mesh.skinning.size()) + " vertices, mesh has " + std::to_string(n));
    for (size_t v = 0; v < n; ++v) {
        if (!mesh.vertices[v].allFinite())
            throw InvalidModel("vertex " + std::to_string(v) + " has non-finite coordinates");
        double sum = 0.0;
        for (const SkinWeight& w : mesh.skinning[v]) {
            if (w.joint < 0 || w.joint >= joints)
                throw InvalidModel("vertex " + std::to_string(v) + " references unknown joint " + std::to_string(w.joint));
            if (!(w.weight >= 0.0) || !std::isfinite(w.weight))
                throw InvalidModel("vertex " + std::to_string(v) + " has a negative skinning weight");
            sum += w.weight;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw InvalidModel("skinning weights of vertex " + std::to_string(v) + " sum to " + std::to_string(sum) + ", expected 1");
    }
    std::vector<std::array<int, 2>> edges;
    edges.reserve(mesh.faces.size() * 3);
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const int a = mesh.faces[f][k];
            if (a < 0 || static_cast<size_t>(a) >= n)
                throw InvalidModel("face " + std::to_string(f) + " references invalid vertex " + std::to_string(a));
            const int b = mesh.faces[f][(k + 1) % 3];
            edges.push_back({std::min(a, b), std::max(a, b)});
        }
    }
    std::sort(edges.begin(), edges.end());
    for (size_t i = 0; i + 2 < edges.size(); ++i)
        if (edges[i] == edges[i + 2])
            throw InvalidModel("edge (" + std::to_string(edges[i][0]) + ", " + std::to_string(edges[i][1]) + ") borders more than two faces");

    if (actor.rigidity.weights.size() != n)
        throw InvalidModel("rigidity mask has " + std::to_string(actor.rigidity.weights.size()) + " entries, mesh has " + std::to_string(n));
    for (size_t v = 0; v < n; ++v)
        if (!(actor.rigidity.weights[v] >= 0.0 && actor.rigidity.weights[v] <= 1.0))
            throw InvalidModel("rigidity of vertex " + std::to_string(v) + " is outside [0, 1]");

    for (size_t m = 0; m < actor.model_gaussians.gaussians.size(); ++m) {
        const ModelGaussian& g = actor.model_gaussians.gaussians[m];
        if (g.joint < 0 || g.joint >= joints)
            throw InvalidModel("model gaussian " + std::to_string(m) + " references unknown joint " + std::to_string(g.joint));
        if (!(g.bind.sigma > 0.0) || !std::isfinite(g.bind.sigma))
            throw InvalidModel("model gaussian " + std::to_string(m) + " has invalid sigma");
    }
}

} // namespace capture
