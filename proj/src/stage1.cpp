#include "capture/stage1.hpp"

#include "capture/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace capture {

void validate_pose_config(const PoseEnergyConfig& cfg)
{
    if (!(cfg.clamp_cap > 0.0))
        throw InvalidInput("clamp_cap must be positive");
    validate_color_config(cfg.color);
    validate_ascent_config(cfg.ascent());
}

namespace {

struct Projected {
    Gaussian2D g;
    Eigen::Matrix3d jac;
    bool valid = false;
};

double evaluate(const Pose& theta, const ActorModel& actor, const std::vector<CameraObservation>& views, const PoseEnergyConfig& cfg,
                Eigen::VectorXd* grad)
{
    const KinematicState ks = forward_kinematics_with_dofs(actor.skeleton, theta);
    const std::vector<Gaussian3D> posed = pose_model_gaussians(actor.model_gaussians, ks.transforms);
    const auto& owners = actor.model_gaussians.gaussians;
    const int ndof = actor.skeleton.dof_count();
    if (grad)
        grad->setZero(ndof);

    double energy = 0.0;
    std::vector<Projected> proj(posed.size());
    std::vector<double> partial;
    std::vector<Eigen::Vector3d> d_world(posed.size());

    for (const CameraObservation& view : views) {
        const auto& images = view.images.gaussians();
        for (size_t m = 0; m < posed.size(); ++m)
            proj[m].valid = project_with_jacobian(posed[m], view.camera, proj[m].g, proj[m].jac);

        partial.assign(images.size(), 0.0);
        for (size_t m = 0; m < posed.size(); ++m) {
            if (!proj[m].valid)
                continue;
            const Gaussian2D& pm = proj[m].g;
            view.images.for_each_near(pm.mu, pm.sigma, [&](int i) {
                const double c = color_similarity(pm.color, images[i].color, cfg.color);
                if (c > 0.0)
                    partial[i] += c * overlap2d(pm, images[i]);
            });
        }
        double cam_energy = 0.0;
        for (double s : partial)
            cam_energy += std::min(cfg.clamp_cap, s);
        energy += cam_energy;

        if (!grad)
            continue;
        for (size_t m = 0; m < posed.size(); ++m) {
            if (!proj[m].valid)
                continue;
            const Gaussian2D& pm = proj[m].g;
            Eigen::Vector3d d2(0.0, 0.0, 0.0); // d/d(mu_x, mu_y, sigma_2d)
            view.images.for_each_near(pm.mu, pm.sigma, [&](int i) {
                if (partial[i] >= cfg.clamp_cap)
                    return;
                const double c = color_similarity(pm.color, images[i].color, cfg.color);
                if (c <= 0.0)
                    return;
                const Overlap2DGrad g = grad_overlap2d(pm, images[i]);
                d2.head<2>() += c * g.d_mu;
                d2.z() += c * g.d_sigma;
            });
            const Eigen::Vector3d dw = proj[m].jac.transpose() * d2;
            const int joint = owners[m].joint;
            for (int k = 0; k < ndof; ++k)
                if (actor.skeleton.is_ancestor_or_self(actor.skeleton.dof_joint(k), joint))
                    (*grad)[k] += dw.dot(ks.dofs[k].point_derivative(posed[m].mu));
        }
    }
    return energy;
}

} // namespace

double pose_energy(const Pose& theta, const ActorModel& actor, const std::vector<CameraObservation>& views, const PoseEnergyConfig& cfg)
{
    return evaluate(theta, actor, views, cfg, nullptr);
}

Eigen::VectorXd pose_gradient(const Pose& theta, const ActorModel& actor, const std::vector<CameraObservation>& views,
                              const PoseEnergyConfig& cfg, double* energy)
{
    Eigen::VectorXd grad;
    const double e = evaluate(theta, actor, views, cfg, &grad);
    if (energy)
        *energy = e;
    return grad;
}

PoseResult optimize_pose(const Pose& theta0, const ActorModel& actor, const std::vector<CameraObservation>& views,
                         const PoseEnergyConfig& cfg)
{
    validate_pose_config(cfg);
    if (theta0.size() != actor.skeleton.dof_count())
        throw InvalidInput("initial pose has the wrong length");
    if (!theta0.allFinite())
        throw InvalidStart("initial pose is not finite");

    const ValueAndGradient fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return evaluate(x, actor, views, cfg, &g); };
    const ValueOnly f = [&](const Eigen::VectorXd& x) { return evaluate(x, actor, views, cfg, nullptr); };
    AscentResult r = gradient_ascent(fg, f, theta0, cfg.ascent());
    return {std::move(r.state.x), std::move(r.trace), r.iterations};
}

} // namespace capture
