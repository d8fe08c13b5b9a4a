#pragma once

#include <Eigen/Core>

namespace capture {

// HSV color, every channel in [0, 1]. Hue is circular.
struct ColorHSV {
    double h = 0.0;
    double s = 0.0;
    double v = 0.0;

    bool operator==(const ColorHSV&) const = default;
};

// Isotropic 2D Gaussian in pixel coordinates.
struct Gaussian2D {
    Eigen::Vector2d mu = Eigen::Vector2d::Zero();
    double sigma = 1.0;
    ColorHSV color;
};

// Isotropic 3D Gaussian in world units.
struct Gaussian3D {
    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    double sigma = 1.0;
    ColorHSV color;
};

// Pinhole calibration. A world point x maps to camera space as R*x + t,
// with +z pointing into the scene.
struct Camera {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    double focal = 1.0;
    Eigen::Vector2d principal_point = Eigen::Vector2d::Zero();
    int width = 1;
    int height = 1;

    Eigen::Vector3d to_camera(const Eigen::Vector3d& x) const { return rotation * x + translation; }
    Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
};

// Throws InvalidInput for non-orthonormal rotation, non-positive focal or
// empty image extent.
void validate_camera(const Camera& cam);

struct ColorSimilarityConfig {
    double d0 = 0.1;
    double d1 = 0.45;
    Eigen::Vector3d weights{1.0, 1.0, 1.0};
};

void validate_color_config(const ColorSimilarityConfig& cfg);

// Normalized pairwise overlap of two isotropic 2D Gaussians:
//   2 sa sb / (sa^2 + sb^2) * exp(-|mu_a - mu_b|^2 / (sa^2 + sb^2)).
// Colors are ignored. Equals 1 for identical Gaussians.
double overlap2d(const Gaussian2D& a, const Gaussian2D& b);

// 3D analogue; the prefactor is raised to the power 3/2.
double overlap3d(const Gaussian3D& a, const Gaussian3D& b);

struct Overlap2DGrad {
    Eigen::Vector2d d_mu = Eigen::Vector2d::Zero();
    double d_sigma = 0.0;
};

struct Overlap3DGrad {
    Eigen::Vector3d d_mu = Eigen::Vector3d::Zero();
    double d_sigma = 0.0;
};

// Partial derivatives of overlap2d(a, b) with respect to a.mu and a.sigma.
Overlap2DGrad grad_overlap2d(const Gaussian2D& a, const Gaussian2D& b);

// Value and derivative in one pass; `value` receives overlap2d(a, b).
Overlap2DGrad grad_overlap2d(const Gaussian2D& a, const Gaussian2D& b, double& value);

Overlap3DGrad grad_overlap3d(const Gaussian3D& a, const Gaussian3D& b);

// Weighted Euclidean HSV distance with circular hue difference.
double hsv_distance(const ColorHSV& a, const ColorHSV& b, const ColorSimilarityConfig& cfg);

// 1 below d0, 0 above d1, smoothstep falloff in between.
double color_similarity(double delta, const ColorSimilarityConfig& cfg);

inline double color_similarity(const ColorHSV& a, const ColorHSV& b, const ColorSimilarityConfig& cfg)
{
    return color_similarity(hsv_distance(a, b, cfg), cfg);
}

// Per-Gaussian weak perspective: the mean goes through the pinhole model and
// sigma scales by focal / depth at the mean. Throws BehindCamera when the
// camera-space depth is not positive.
Gaussian2D project_gaussian(const Gaussian3D& g, const Camera& cam);

// Rows: d(mu_x), d(mu_y), d(sigma_2d); columns: world-space mean coordinates.
Eigen::Matrix3d grad_project(const Gaussian3D& g, const Camera& cam);

// Projection and its Jacobian together. Returns false (and leaves outputs
// untouched) if the Gaussian is behind the camera.
bool project_with_jacobian(const Gaussian3D& g, const Camera& cam, Gaussian2D& out, Eigen::Matrix3d& jac);

} // namespace capture
