#pragma once

#include "capture/gaussian.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace capture {

using Rgb = std::array<double, 3>;

struct ImageFrame {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels; // row-major, values in [0, 1]
    int camera_id = 0;
    int frame_id = 0;

    const Rgb& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    Rgb& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
};

// 8-bit RGB raster used for output images.
struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // row-major RGB triples
};

// Decodes PNG (8-bit gray/RGB/RGBA, alpha ignored) or binary PPM (P6).
// Throws MissingFile, UnsupportedFormat or CorruptData.
ImageFrame load_frame(const std::filesystem::path& path);

// Reads a PNG as a binary mask: any nonzero channel marks foreground.
std::vector<std::uint8_t> load_mask_png(const std::filesystem::path& path, int& width, int& height);

void write_png(const std::filesystem::path& path, const Rgb8Image& image);
void write_mask_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& mask, int width, int height);

Rgb8Image to_rgb8(const ImageFrame& frame);

// Hue is scaled to [0, 1); achromatic inputs get h = 0.
ColorHSV rgb_to_hsv(const Rgb& rgb);
Rgb hsv_to_rgb(const ColorHSV& hsv);

struct QuadTreeParams {
    int max_depth = 8;
    int min_node_px = 4;
    double color_var_threshold = 0.01;
};

struct ImageGaussianSet {
    std::vector<Gaussian2D> gaussians;
    int camera_id = 0;
    int frame_id = 0;
};

// Recursive four-way split of nodes whose largest per-channel RGB variance
// exceeds the threshold. A node splits only while its depth is below
// max_depth and both of its children would keep at least min_node_px pixels
// per side. Leaves are emitted in depth-first order (top-left, top-right,
// bottom-left, bottom-right).
ImageGaussianSet quadtree_decompose(const ImageFrame& frame, const QuadTreeParams& params);

} // namespace capture
