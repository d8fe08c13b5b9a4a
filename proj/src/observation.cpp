#include "capture/observation.hpp"

#include "capture/errors.hpp"

#include <limits>

namespace capture {

ImageGaussianIndex::ImageGaussianIndex(std::vector<Gaussian2D> gaussians, int width, int height, double cutoff, int cell_px)
    : gaussians_(std::move(gaussians)), cutoff_(cutoff)
{
    if (!(cutoff > 0.0))
        throw InvalidInput("overlap cutoff must be positive");
    if (width <= 0 || height <= 0 || cell_px <= 0)
        throw InvalidInput("invalid image index extent");
    for (const Gaussian2D& g : gaussians_)
        if (!(g.sigma > 0.0) || !std::isfinite(g.sigma) || !g.mu.allFinite())
            throw InvalidInput("image gaussian with invalid mean or sigma");

    culling_ = std::isfinite(cutoff);
    if (!culling_)
        return;
    reach_ = std::sqrt(cutoff);
    cell_ = cell_px;
    cols_ = (width + cell_px - 1) / cell_px;
    rows_ = (height + cell_px - 1) / cell_px;
    cells_.assign(static_cast<size_t>(cols_) * rows_, {});
    rects_.reserve(gaussians_.size());
    for (size_t i = 0; i < gaussians_.size(); ++i) {
        const Rect r = cell_rect(gaussians_[i].mu, reach_ * gaussians_[i].sigma);
        rects_.push_back(r);
        for (int cy = r.y0; cy <= r.y1; ++cy)
            for (int cx = r.x0; cx <= r.x1; ++cx)
                cells_[static_cast<size_t>(cy) * cols_ + cx].push_back(static_cast<int>(i));
    }
}

ImageGaussianIndex::Rect ImageGaussianIndex::cell_rect(const Eigen::Vector2d& mu, double radius) const
{
    // Clamping keeps rectangles that share an unclamped cell sharing a clamped one.
    auto clamp_cell = [](double c, int n) {
        if (!(c > 0.0))
            return 0;
        if (c >= n - 1)
            return n - 1;
        return static_cast<int>(c);
    };
    return {clamp_cell(std::floor((mu.x() - radius) / cell_), cols_), clamp_cell(std::floor((mu.y() - radius) / cell_), rows_),
            clamp_cell(std::floor((mu.x() + radius) / cell_), cols_), clamp_cell(std::floor((mu.y() + radius) / cell_), rows_)};
}

std::vector<CameraObservation> make_observations(const std::vector<Camera>& cameras, const std::vector<ImageGaussianSet>& image_sets,
                                                 double cutoff)
{
    if (cameras.size() != image_sets.size())
        throw InvalidInput("camera count does not match the number of image gaussian sets");
    std::vector<CameraObservation> obs;
    obs.reserve(cameras.size());
    for (size_t c = 0; c < cameras.size(); ++c) {
        validate_camera(cameras[c]);
        obs.push_back({cameras[c], ImageGaussianIndex(image_sets[c].gaussians, cameras[c].width, cameras[c].height, cutoff)});
    }
    return obs;
}

} // namespace capture
