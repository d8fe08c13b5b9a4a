#pragma once

#include "capture/gaussian.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace capture {

struct RasterBuffers {
    int width = 0;
    int height = 0;
    std::vector<double> depth;        // camera-space depth, +inf where empty
    std::vector<std::uint8_t> mask;   // 1 where depth is finite
    std::vector<int> face;            // winning face index, -1 where empty

    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

// Z-buffered rasterization of every triangle (both facings). A pixel is
// covered when its center lies inside or on the projected triangle; depth is
// interpolated perspective-correctly. Among equal depths the earliest face
// wins. Triangles with a vertex at or behind the camera plane are skipped.
RasterBuffers rasterize(const std::vector<Eigen::Vector3d>& vertices, const std::vector<std::array<int, 3>>& faces, const Camera& cam);

// Area-weighted vertex normals of a counter-clockwise mesh. Throws
// InvalidModel for vertices without an incident face or with a degenerate
// accumulated normal.
std::vector<Eigen::Vector3d> vertex_normals(const std::vector<Eigen::Vector3d>& vertices, const std::vector<std::array<int, 3>>& faces);

enum class VertexTag : std::uint8_t { hidden, interior, border };

struct VertexClass {
    std::vector<VertexTag> tags;
    // Image-plane distance to the outer silhouette contour, in pixels. Only
    // meaningful for border vertices; +inf elsewhere.
    std::vector<double> contour_distance;

    size_t count(VertexTag t) const;
};

// Mask pixels that touch the background component connected to the image
// frame (4-neighbourhood), plus mask pixels on the image border.
std::vector<std::uint8_t> outer_contour(const RasterBuffers& buffers);

VertexClass classify_vertices(const std::vector<Eigen::Vector3d>& vertices, const Camera& cam, const RasterBuffers& buffers,
                              double delta, double eps_depth);

struct SurfaceGaussian {
    Gaussian3D gaussian;
    int vertex = 0;
};

struct SurfaceGaussianSet {
    std::vector<SurfaceGaussian> gaussians;
};

struct BorderGaussian {
    Gaussian3D inside;
    Gaussian3D outside;
    int vertex = 0;
};

struct BorderGaussianSet {
    std::vector<BorderGaussian> pairs;
};

SurfaceGaussianSet build_surface_gaussians(const VertexClass& cls, const std::vector<Eigen::Vector3d>& vertices,
                                           const std::vector<ColorHSV>& colors, const std::vector<double>& sigmas);

// Inside mean = v - sigma * n, outside mean = v + sigma * n; both carry the
// vertex color.
BorderGaussianSet build_border_gaussians(const VertexClass& cls, const std::vector<Eigen::Vector3d>& vertices,
                                         const std::vector<Eigen::Vector3d>& normals, const std::vector<ColorHSV>& colors,
                                         const std::vector<double>& sigmas);

// Border band width: twice the mean projected sigma of the vertices in front
// of the camera, clamped to [1, 10] pixels.
double default_border_delta(const std::vector<Eigen::Vector3d>& vertices, const std::vector<double>& sigmas, const Camera& cam);

// One percent of the bounding-box diagonal.
double default_depth_epsilon(const std::vector<Eigen::Vector3d>& vertices);

// Debug dumps.
void write_depth_pfm(const std::filesystem::path& path, const RasterBuffers& buffers);
void write_mask(const std::filesystem::path& path, const RasterBuffers& buffers);

} // namespace capture
