#include "capture/stage2.hpp"

#include "capture/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace capture {

void validate_refine_config(const RefineConfig& cfg)
{
    if (!(cfg.w_skin >= 0.0) || !(cfg.w_smooth >= 0.0))
        throw InvalidInput("refinement weights must be nonnegative");
    if (cfg.reclassify_every < 1)
        throw InvalidInput("reclassify_every must be at least 1");
    if (!(cfg.rigidity_base >= 0.0 && cfg.rigidity_base <= 1.0))
        throw InvalidInput("rigidity_base must lie in [0, 1]");
    validate_color_config(cfg.color);
    validate_ascent_config(cfg.ascent());
}

TermValue e_surf(const std::vector<SurfaceGaussianSet>& per_camera, const std::vector<CameraObservation>& views,
                 const ColorSimilarityConfig& color, int vertex_count)
{
    if (per_camera.size() != views.size())
        throw InvalidInput("surface gaussian sets do not match the camera count");
    TermValue out;
    out.grad_v.assign(static_cast<size_t>(vertex_count), Eigen::Vector3d::Zero());
    for (size_t c = 0; c < views.size(); ++c) {
        const auto& images = views[c].images.gaussians();
        for (const SurfaceGaussian& s : per_camera[c].gaussians) {
            Gaussian2D p;
            Eigen::Matrix3d jac;
            if (!project_with_jacobian(s.gaussian, views[c].camera, p, jac))
                continue;
            Eigen::Vector3d d2 = Eigen::Vector3d::Zero();
            views[c].images.for_each_near(p.mu, p.sigma, [&](int i) {
                const double w = color_similarity(p.color, images[i].color, color);
                if (w <= 0.0)
                    return;
                double value = 0.0;
                const Overlap2DGrad g = grad_overlap2d(p, images[i], value);
                out.value += w * value;
                d2.head<2>() += w * g.d_mu;
                d2.z() += w * g.d_sigma;
            });
            out.grad_v[s.vertex] += jac.transpose() * d2;
        }
    }
    return out;
}

TermValue e_cont(const std::vector<BorderGaussianSet>& per_camera, const std::vector<CameraObservation>& views,
                 const ColorSimilarityConfig& color, int vertex_count)
{
    if (per_camera.size() != views.size())
        throw InvalidInput("border gaussian sets do not match the camera count");
    TermValue out;
    out.grad_v.assign(static_cast<size_t>(vertex_count), Eigen::Vector3d::Zero());
    for (size_t c = 0; c < views.size(); ++c) {
        const auto& images = views[c].images.gaussians();
        for (const BorderGaussian& b : per_camera[c].pairs) {
            for (int side = 0; side < 2; ++side) {
                const Gaussian3D& g3 = side == 0 ? b.inside : b.outside;
                Gaussian2D p;
                Eigen::Matrix3d jac;
                if (!project_with_jacobian(g3, views[c].camera, p, jac))
                    continue;
                Eigen::Vector3d d2 = Eigen::Vector3d::Zero();
                views[c].images.for_each_near(p.mu, p.sigma, [&](int i) {
                    const double sim = color_similarity(p.color, images[i].color, color);
                    const double w = side == 0 ? sim : 1.0 - sim;
                    if (w <= 0.0)
                        return;
                    double value = 0.0;
                    const Overlap2DGrad g = grad_overlap2d(p, images[i], value);
                    out.value += w * value;
                    d2.head<2>() += w * g.d_mu;
                    d2.z() += w * g.d_sigma;
                });
                out.grad_v[b.vertex] += jac.transpose() * d2;
            }
        }
    }
    return out;
}

std::vector<double> tether_weights(const RigidityMask& mask, double base)
{
    std::vector<double> out(mask.weights.size());
    for (size_t n = 0; n < out.size(); ++n)
        out[n] = base + (1.0 - base) * mask.weights[n];
    return out;
}

SkinTermValue e_skin(const Vertices& v, const Pose& theta, const ActorModel& actor, const std::vector<double>& tether)
{
    const TemplateMesh& mesh = actor.mesh;
    const size_t n_vert = mesh.vertices.size();
    if (v.size() != n_vert || tether.size() != n_vert || actor.vertex_sigmas.size() != n_vert)
        throw InvalidInput("e_skin inputs do not match the vertex count");
    const KinematicState ks = forward_kinematics_with_dofs(actor.skeleton, theta);
    const int ndof = actor.skeleton.dof_count();

    SkinTermValue out;
    out.grad_v.assign(n_vert, Eigen::Vector3d::Zero());
    out.grad_theta = Eigen::VectorXd::Zero(ndof);

    for (size_t n = 0; n < n_vert; ++n) {
        const auto& weights = mesh.skinning[n];
        Eigen::Vector3d skinned = Eigen::Vector3d::Zero();
        for (size_t k = 0; k < weights.size(); ++k)
            skinned += weights[k].weight * ks.transforms[weights[k].joint].apply(mesh.bind_offsets[n][k]);

        Gaussian3D a;
        a.mu = v[n];
        a.sigma = actor.vertex_sigmas[n];
        Gaussian3D b = a;
        b.mu = skinned;
        const double ov = overlap3d(a, b);
        out.value += tether[n] * (1.0 - ov);

        const Eigen::Vector3d d_ov = grad_overlap3d(a, b).d_mu; // w.r.t. v_n; w.r.t. skinned it is the negation
        out.grad_v[n] = -tether[n] * d_ov;
        const Eigen::Vector3d d_skinned = tether[n] * d_ov;
        if (d_skinned.squaredNorm() == 0.0)
            continue;
        for (size_t k = 0; k < weights.size(); ++k) {
            const int j = weights[k].joint;
            const Eigen::Vector3d p = ks.transforms[j].apply(mesh.bind_offsets[n][k]);
            for (int dof = 0; dof < ndof; ++dof)
                if (actor.skeleton.is_ancestor_or_self(actor.skeleton.dof_joint(dof), j))
                    out.grad_theta[dof] += weights[k].weight * d_skinned.dot(ks.dofs[dof].point_derivative(p));
        }
    }
    return out;
}

Vertices uniform_laplacian(const Vertices& x, const std::vector<std::vector<int>>& neighbors)
{
    if (x.size() != neighbors.size())
        throw InvalidInput("laplacian input does not match the neighbourhood table");
    Vertices out(x.size());
    for (size_t n = 0; n < x.size(); ++n) {
        if (neighbors[n].empty())
            throw InvalidModel("vertex " + std::to_string(n) + " is isolated");
        Eigen::Vector3d sum = Eigen::Vector3d::Zero();
        for (int k : neighbors[n])
            sum += x[k];
        out[n] = sum / static_cast<double>(neighbors[n].size()) - x[n];
    }
    return out;
}

TermValue e_smooth(const Vertices& v, const Vertices& reference_laplacian, const std::vector<std::vector<int>>& neighbors)
{
    if (reference_laplacian.size() != v.size())
        throw InvalidInput("reference laplacian does not match the vertex count");
    const Vertices lap = uniform_laplacian(v, neighbors);
    TermValue out;
    out.grad_v.assign(v.size(), Eigen::Vector3d::Zero());
    for (size_t n = 0; n < v.size(); ++n) {
        const Eigen::Vector3d r = lap[n] - reference_laplacian[n];
        out.value += r.squaredNorm();
        out.grad_v[n] -= 2.0 * r;
        const double inv = 1.0 / static_cast<double>(neighbors[n].size());
        for (int k : neighbors[n])
            out.grad_v[k] += 2.0 * inv * r;
    }
    return out;
}

TermValue e_smooth(const Vertices& v, const Vertices& v_skinned_initial, const std::vector<std::array<int, 3>>& faces)
{
    const auto nbrs = vertex_neighbors(static_cast<int>(v.size()), faces);
    return e_smooth(v, uniform_laplacian(v_skinned_initial, nbrs), nbrs);
}

FrameContext make_frame_context(const ActorModel& actor, std::vector<CameraObservation> views, const Vertices& v_skinned_initial,
                                const RefineConfig& cfg)
{
    validate_refine_config(cfg);
    FrameContext ctx;
    ctx.actor = &actor;
    ctx.views = std::move(views);
    ctx.neighbors = vertex_neighbors(actor.mesh.vertex_count(), actor.mesh.faces);
    ctx.reference_laplacian = uniform_laplacian(v_skinned_initial, ctx.neighbors);
    ctx.tether = tether_weights(actor.rigidity, cfg.rigidity_base);
    return ctx;
}

FrameStructure classify_frame(const Vertices& v, const FrameContext& ctx, const RefineConfig& cfg)
{
    const TemplateMesh& mesh = ctx.actor->mesh;
    FrameStructure st;
    st.normals = vertex_normals(v, mesh.faces);
    const double eps = cfg.eps_depth > 0.0 ? cfg.eps_depth : default_depth_epsilon(v);
    for (const CameraObservation& view : ctx.views) {
        const RasterBuffers buf = rasterize(v, mesh.faces, view.camera);
        const double delta = cfg.delta > 0.0 ? cfg.delta : default_border_delta(v, ctx.actor->vertex_sigmas, view.camera);
        st.classes.push_back(classify_vertices(v, view.camera, buf, delta, eps));
    }
    return st;
}

EnergyBreakdown total_energy(const Vertices& v, const Pose& theta, const FrameContext& ctx, const FrameStructure& structure,
                             const RefineConfig& cfg, bool with_gradient)
{
    const ActorModel& actor = *ctx.actor;
    const int n = actor.mesh.vertex_count();
    if (static_cast<int>(v.size()) != n)
        throw InvalidInput("vertex array does not match the template");
    if (structure.classes.size() != ctx.views.size())
        throw InvalidInput("frame structure does not match the camera count");

    std::vector<SurfaceGaussianSet> surface;
    std::vector<BorderGaussianSet> border;
    for (const VertexClass& cls : structure.classes) {
        surface.push_back(build_surface_gaussians(cls, v, actor.mesh.vertex_colors, actor.vertex_sigmas));
        border.push_back(build_border_gaussians(cls, v, structure.normals, actor.mesh.vertex_colors, actor.vertex_sigmas));
    }

    const TermValue surf = e_surf(surface, ctx.views, cfg.color, n);
    const TermValue cont = e_cont(border, ctx.views, cfg.color, n);
    const SkinTermValue skin = e_skin(v, theta, actor, ctx.tether);
    const TermValue smooth = e_smooth(v, ctx.reference_laplacian, ctx.neighbors);

    EnergyBreakdown out;
    out.e_surf = surf.value;
    out.e_cont = cont.value;
    out.e_skin = skin.value;
    out.e_smooth = smooth.value;
    out.total = out.e_surf + out.e_cont - cfg.w_skin * out.e_skin - cfg.w_smooth * out.e_smooth;
    if (with_gradient) {
        out.grad_v.resize(v.size());
        for (size_t k = 0; k < v.size(); ++k)
            out.grad_v[k] = surf.grad_v[k] + cont.grad_v[k] - cfg.w_skin * skin.grad_v[k] - cfg.w_smooth * smooth.grad_v[k];
        out.grad_theta = -cfg.w_skin * skin.grad_theta;
    }
    return out;
}

EnergyBreakdown total_energy(const Vertices& v, const Pose& theta, const FrameContext& ctx, const RefineConfig& cfg)
{
    return total_energy(v, theta, ctx, classify_frame(v, ctx, cfg), cfg, true);
}

namespace {

Eigen::VectorXd pack(const Vertices& v, const Pose& theta)
{
    Eigen::VectorXd x(3 * v.size() + theta.size());
    for (size_t n = 0; n < v.size(); ++n)
        x.segment<3>(3 * n) = v[n];
    x.tail(theta.size()) = theta;
    return x;
}

void unpack(const Eigen::VectorXd& x, size_t n_vert, Vertices& v, Pose& theta)
{
    v.resize(n_vert);
    for (size_t n = 0; n < n_vert; ++n)
        v[n] = x.segment<3>(3 * n);
    theta = x.tail(x.size() - 3 * static_cast<Eigen::Index>(n_vert));
}

TraceEntry to_entry(int iteration, const EnergyBreakdown& e, bool reclassified)
{
    return {iteration, e.e_surf, e.e_cont, e.e_skin, e.e_smooth, e.total, reclassified};
}

} // namespace

Eigen::VectorXd skinning_pullback(const ActorModel& actor, const Pose& theta, const Vertices& grad_v)
{
    const TemplateMesh& mesh = actor.mesh;
    if (grad_v.size() != mesh.vertices.size())
        throw InvalidInput("gradient does not match the vertex count");
    const KinematicState ks = forward_kinematics_with_dofs(actor.skeleton, theta);
    const int ndof = actor.skeleton.dof_count();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(ndof);
    for (size_t n = 0; n < grad_v.size(); ++n) {
        if (grad_v[n].squaredNorm() == 0.0)
            continue;
        const auto& weights = mesh.skinning[n];
        for (size_t k = 0; k < weights.size(); ++k) {
            const int j = weights[k].joint;
            const Eigen::Vector3d p = ks.transforms[j].apply(mesh.bind_offsets[n][k]);
            for (int dof = 0; dof < ndof; ++dof)
                if (actor.skeleton.is_ancestor_or_self(actor.skeleton.dof_joint(dof), j))
                    out[dof] += weights[k].weight * grad_v[n].dot(ks.dofs[dof].point_derivative(p));
        }
    }
    return out;
}

namespace {

} // namespace

RefineResult optimize_refine(const Vertices& v0, const Pose& theta0, const FrameContext& ctx, const RefineConfig& cfg)
{
    validate_refine_config(cfg);
    const ActorModel& actor = *ctx.actor;
    const size_t n_vert = v0.size();
    if (static_cast<int>(n_vert) != actor.mesh.vertex_count())
        throw InvalidInput("initial vertices do not match the template");
    if (theta0.size() != actor.skeleton.dof_count())
        throw InvalidInput("initial pose has the wrong length");

    // The ascent runs on (v - skinned(theta), theta). The objective and its
    // maxima are unchanged, but a pose step now carries the whole mesh along
    // instead of waiting for every vertex to drift there on its own.
    Vertices v_tmp;
    Pose theta_tmp;
    const auto to_vertices = [&](const Eigen::VectorXd& x) {
        unpack(x, n_vert, v_tmp, theta_tmp);
        const Vertices skinned = skin_vertices(actor.mesh, forward_kinematics(actor.skeleton, theta_tmp));
        for (size_t n = 0; n < n_vert; ++n)
            v_tmp[n] += skinned[n];
    };

    FrameStructure structure = classify_frame(v0, ctx, cfg);
    EnergyBreakdown last;

    const ValueAndGradient fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        to_vertices(x);
        last = total_energy(v_tmp, theta_tmp, ctx, structure, cfg, true);
        g = pack(last.grad_v, last.grad_theta + skinning_pullback(actor, theta_tmp, last.grad_v));
        return last.total;
    };
    const ValueOnly f = [&](const Eigen::VectorXd& x) {
        to_vertices(x);
        return total_energy(v_tmp, theta_tmp, ctx, structure, cfg, false).total;
    };

    const Vertices skinned0 = skin_vertices(actor.mesh, forward_kinematics(actor.skeleton, theta0));
    Vertices d0(n_vert);
    for (size_t n = 0; n < n_vert; ++n)
        d0[n] = v0[n] - skinned0[n];

    AscentState state;
    state.x = pack(d0, theta0);
    state.value = fg(state.x, state.grad);
    if (!std::isfinite(state.value))
        throw InvalidStart("stage-II energy is not finite at the initial state");
    state.step = cfg.step0;

    RefineResult result;
    result.trace.push_back(to_entry(0, last, false));

    int done = 0;
    while (done < cfg.max_iters) {
        if (done > 0) {
            to_vertices(state.x);
            structure = classify_frame(v_tmp, ctx, cfg);
            state.value = fg(state.x, state.grad);
            result.trace.push_back(to_entry(done, last, true));
        }
        AscentConfig block = cfg.ascent();
        block.max_iters = std::min(cfg.reclassify_every, cfg.max_iters - done);
        block.block_starts = {0, static_cast<int>(3 * n_vert)};
        std::vector<TraceEntry> entries;
        const ValueAndGradient recording = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
            const double value = fg(x, g);
            entries.push_back(to_entry(0, last, false));
            return value;
        };
        AscentResult r = gradient_ascent(recording, f, state, block);
        for (int k = 0; k < r.iterations; ++k) {
            entries[k].iteration = done + k + 1;
            result.trace.push_back(entries[k]);
        }
        done += r.iterations;
        state = std::move(r.state);
        if (r.iterations == 0)
            break;
    }

    if (done == 0) {
        result.v = v0;
        result.theta = theta0;
    } else {
        to_vertices(state.x);
        result.v = v_tmp;
        result.theta = theta_tmp;
    }
    return result;
}

} // namespace capture
