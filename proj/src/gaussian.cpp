#include "capture/gaussian.hpp"

#include "capture/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace capture {

namespace {

void check_sigma(double sigma)
{
    if (!std::isfinite(sigma) || sigma <= 0.0)
        throw InvalidInput("gaussian sigma must be finite and positive, got " + std::to_string(sigma));
}

template <typename V>
void check_mean(const V& mu)
{
    if (!mu.allFinite())
        throw InvalidInput("gaussian mean must be finite");
}

} // namespace

void validate_camera(const Camera& cam)
{
    if (!cam.rotation.allFinite() || !cam.translation.allFinite())
        throw InvalidInput("camera extrinsics must be finite");
    const double err = (cam.rotation * cam.rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (err > 1e-9)
        throw InvalidInput("camera rotation is not orthonormal (deviation " + std::to_string(err) + ")");
    if (!std::isfinite(cam.focal) || cam.focal <= 0.0)
        throw InvalidInput("camera focal length must be positive");
    if (cam.width <= 0 || cam.height <= 0)
        throw InvalidInput("camera image extent must be positive");
    if (!cam.principal_point.allFinite())
        throw InvalidInput("camera principal point must be finite");
}

void validate_color_config(const ColorSimilarityConfig& cfg)
{
    if (!(cfg.d0 >= 0.0) || !(cfg.d1 > cfg.d0))
        throw InvalidInput("color similarity thresholds must satisfy 0 <= d0 < d1");
    if ((cfg.weights.array() < 0.0).any() || !cfg.weights.allFinite())
        throw InvalidInput("color similarity weights must be finite and nonnegative");
}

double overlap2d(const Gaussian2D& a, const Gaussian2D& b)
{
    check_sigma(a.sigma);
    check_sigma(b.sigma);
    check_mean(a.mu);
    check_mean(b.mu);
    const double s = a.sigma * a.sigma + b.sigma * b.sigma;
    return 2.0 * a.sigma * b.sigma / s * std::exp(-(a.mu - b.mu).squaredNorm() / s);
}

double overlap3d(const Gaussian3D& a, const Gaussian3D& b)
{
    check_sigma(a.sigma);
    check_sigma(b.sigma);
    check_mean(a.mu);
    check_mean(b.mu);
    const double s = a.sigma * a.sigma + b.sigma * b.sigma;
    const double p = 2.0 * a.sigma * b.sigma / s;
    return p * std::sqrt(p) * std::exp(-(a.mu - b.mu).squaredNorm() / s);
}

Overlap2DGrad grad_overlap2d(const Gaussian2D& a, const Gaussian2D& b, double& value)
{
    check_sigma(a.sigma);
    check_sigma(b.sigma);
    const double sa = a.sigma;
    const double sb = b.sigma;
    const double s = sa * sa + sb * sb;
    const Eigen::Vector2d d = a.mu - b.mu;
    const double d2 = d.squaredNorm();
    const double p = 2.0 * sa * sb / s;
    const double e = std::exp(-d2 / s);
    value = p * e;

    Overlap2DGrad g;
    g.d_mu = value * (-2.0 / s) * d;
    const double dp = 2.0 * sb * (sb * sb - sa * sa) / (s * s);
    g.d_sigma = e * (dp + p * 2.0 * sa * d2 / (s * s));
    return g;
}

Overlap2DGrad grad_overlap2d(const Gaussian2D& a, const Gaussian2D& b)
{
    double unused = 0.0;
    return grad_overlap2d(a, b, unused);
}

Overlap3DGrad grad_overlap3d(const Gaussian3D& a, const Gaussian3D& b)
{
    check_sigma(a.sigma);
    check_sigma(b.sigma);
    const double sa = a.sigma;
    const double sb = b.sigma;
    const double s = sa * sa + sb * sb;
    const Eigen::Vector3d d = a.mu - b.mu;
    const double d2 = d.squaredNorm();
    const double p = 2.0 * sa * sb / s;
    const double e = std::exp(-d2 / s);
    const double value = p * std::sqrt(p) * e;

    Overlap3DGrad g;
    g.d_mu = value * (-2.0 / s) * d;
    const double dp = 2.0 * sb * (sb * sb - sa * sa) / (s * s);
    g.d_sigma = 1.5 * std::sqrt(p) * dp * e + value * 2.0 * sa * d2 / (s * s);
    return g;
}

double hsv_distance(const ColorHSV& a, const ColorHSV& b, const ColorSimilarityConfig& cfg)
{
    double dh = std::fabs(a.h - b.h);
    dh = dh - std::floor(dh);
    dh = std::min(dh, 1.0 - dh);
    const double ds = a.s - b.s;
    const double dv = a.v - b.v;
    return std::sqrt(cfg.weights[0] * dh * dh + cfg.weights[1] * ds * ds + cfg.weights[2] * dv * dv);
}

double color_similarity(double delta, const ColorSimilarityConfig& cfg)
{
    if (delta <= cfg.d0)
        return 1.0;
    if (delta >= cfg.d1)
        return 0.0;
    const double t = (delta - cfg.d0) / (cfg.d1 - cfg.d0);
    return 1.0 - t * t * (3.0 - 2.0 * t);
}

bool project_with_jacobian(const Gaussian3D& g, const Camera& cam, Gaussian2D& out, Eigen::Matrix3d& jac)
{
    const Eigen::Vector3d p = cam.to_camera(g.mu);
    if (!(p.z() > 0.0))
        return false;
    const double iz = 1.0 / p.z();
    const double f = cam.focal;
    out.mu = Eigen::Vector2d(f * p.x() * iz, f * p.y() * iz) + cam.principal_point;
    out.sigma = f * g.sigma * iz;
    out.color = g.color;

    Eigen::Matrix3d dp;
    dp << f * iz, 0.0, -f * p.x() * iz * iz,
          0.0, f * iz, -f * p.y() * iz * iz,
          0.0, 0.0, -f * g.sigma * iz * iz;
    jac = dp * cam.rotation;
    return true;
}

Gaussian2D project_gaussian(const Gaussian3D& g, const Camera& cam)
{
    check_sigma(g.sigma);
    Gaussian2D out;
    Eigen::Matrix3d jac;
    if (!project_with_jacobian(g, cam, out, jac))
        throw BehindCamera("gaussian projects behind the camera");
    return out;
}

Eigen::Matrix3d grad_project(const Gaussian3D& g, const Camera& cam)
{
    check_sigma(g.sigma);
    Gaussian2D out;
    Eigen::Matrix3d jac;
    if (!project_with_jacobian(g, cam, out, jac))
        throw BehindCamera("gaussian projects behind the camera");
    return jac;
}

} // namespace capture
