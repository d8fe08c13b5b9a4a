#pragma once

#include "capture/gaussian.hpp"
#include "capture/image.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace capture {

// Uniform-grid index over one camera's Image Gaussians. A pair (query, i) is
// considered only when |mu_q - mu_i|^2 <= cutoff * (sigma_q^2 + sigma_i^2);
// beyond that the overlap is below exp(-cutoff) times its prefactor. The
// index enumerates a superset of those pairs, each exactly once, so sums over
// pairs do not depend on the cell size. A cutoff of +inf disables culling.
class ImageGaussianIndex {
public:
    ImageGaussianIndex() = default;
    ImageGaussianIndex(std::vector<Gaussian2D> gaussians, int width, int height, double cutoff, int cell_px = 16);

    const std::vector<Gaussian2D>& gaussians() const { return gaussians_; }
    double cutoff() const { return cutoff_; }

    // Whether the pair passes the cutoff test.
    bool within_cutoff(const Eigen::Vector2d& mu, double sigma, const Gaussian2D& g) const
    {
        return (mu - g.mu).squaredNorm() <= cutoff_ * (sigma * sigma + g.sigma * g.sigma);
    }

    // Calls fn(i) for every Image Gaussian that passes the cutoff test against
    // the query (mu, sigma). Visiting order is deterministic.
    template <typename Fn>
    void for_each_near(const Eigen::Vector2d& mu, double sigma, Fn&& fn) const
    {
        if (!culling_) {
            for (size_t i = 0; i < gaussians_.size(); ++i)
                if (within_cutoff(mu, sigma, gaussians_[i]))
                    fn(static_cast<int>(i));
            return;
        }
        const Rect q = cell_rect(mu, reach_ * sigma);
        if (q.x0 > q.x1 || q.y0 > q.y1)
            return;
        for (int cy = q.y0; cy <= q.y1; ++cy) {
            for (int cx = q.x0; cx <= q.x1; ++cx) {
                const auto& cell = cells_[static_cast<size_t>(cy) * cols_ + cx];
                for (int i : cell) {
                    const Rect& r = rects_[i];
                    // Visit each entry only from the first cell shared by both rectangles.
                    if (cx != std::max(r.x0, q.x0) || cy != std::max(r.y0, q.y0))
                        continue;
                    if (within_cutoff(mu, sigma, gaussians_[i]))
                        fn(i);
                }
            }
        }
    }

private:
    struct Rect {
        int x0, y0, x1, y1;
    };

    Rect cell_rect(const Eigen::Vector2d& mu, double radius) const;

    std::vector<Gaussian2D> gaussians_;
    std::vector<Rect> rects_;
    std::vector<std::vector<int>> cells_;
    double cutoff_ = 36.0;
    double reach_ = 6.0;
    double cell_ = 16.0;
    double origin_x_ = 0.0;
    double origin_y_ = 0.0;
    int cols_ = 0;
    int rows_ = 0;
    bool culling_ = false;
};

// One calibrated camera together with the Image Gaussians of its frame.
struct CameraObservation {
    Camera camera;
    ImageGaussianIndex images;
};

inline constexpr double kDefaultOverlapCutoff = 36.0;

std::vector<CameraObservation> make_observations(const std::vector<Camera>& cameras, const std::vector<ImageGaussianSet>& image_sets,
                                                 double cutoff = kDefaultOverlapCutoff);

} // namespace capture
