#include "capture/visibility.hpp"

#include "capture/errors.hpp"
#include "capture/image.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace capture {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNearPlane = 1e-9;

double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p)
{
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

} // namespace

RasterBuffers rasterize(const std::vector<Eigen::Vector3d>& vertices, const std::vector<std::array<int, 3>>& faces, const Camera& cam)
{
    validate_camera(cam);
    RasterBuffers buf;
    buf.width = cam.width;
    buf.height = cam.height;
    const size_t npx = static_cast<size_t>(cam.width) * cam.height;
    buf.depth.assign(npx, kInf);
    buf.mask.assign(npx, 0);
    buf.face.assign(npx, -1);

    std::vector<Eigen::Vector2d> screen(vertices.size());
    std::vector<double> depth(vertices.size());
    for (size_t i = 0; i < vertices.size(); ++i) {
        const Eigen::Vector3d p = cam.to_camera(vertices[i]);
        depth[i] = p.z();
        if (p.z() > kNearPlane)
            screen[i] = Eigen::Vector2d(cam.focal * p.x() / p.z(), cam.focal * p.y() / p.z()) + cam.principal_point;
    }

    for (size_t f = 0; f < faces.size(); ++f) {
        const auto& tri = faces[f];
        if (depth[tri[0]] <= kNearPlane || depth[tri[1]] <= kNearPlane || depth[tri[2]] <= kNearPlane)
            continue;
        const Eigen::Vector2d& a = screen[tri[0]];
        const Eigen::Vector2d& b = screen[tri[1]];
        const Eigen::Vector2d& c = screen[tri[2]];
        const double area = edge(a, b, c);
        if (area == 0.0 || !std::isfinite(area))
            continue;

        const double minx = std::min({a.x(), b.x(), c.x()});
        const double maxx = std::max({a.x(), b.x(), c.x()});
        const double miny = std::min({a.y(), b.y(), c.y()});
        const double maxy = std::max({a.y(), b.y(), c.y()});
        const int x0 = std::max(0, static_cast<int>(std::ceil(minx - 0.5)));
        const int x1 = std::min(cam.width - 1, static_cast<int>(std::floor(maxx - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(miny - 0.5)));
        const int y1 = std::min(cam.height - 1, static_cast<int>(std::floor(maxy - 0.5)));
        const double inv_area = 1.0 / area;
        const double iz0 = 1.0 / depth[tri[0]];
        const double iz1 = 1.0 / depth[tri[1]];
        const double iz2 = 1.0 / depth[tri[2]];

        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Eigen::Vector2d q(x + 0.5, y + 0.5);
                const double l0 = edge(b, c, q) * inv_area;
                const double l1 = edge(c, a, q) * inv_area;
                const double l2 = edge(a, b, q) * inv_area;
                if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0)
                    continue;
                const double z = 1.0 / (l0 * iz0 + l1 * iz1 + l2 * iz2);
                const size_t idx = buf.index(x, y);
                if (z < buf.depth[idx]) {
                    buf.depth[idx] = z;
                    buf.mask[idx] = 1;
                    buf.face[idx] = static_cast<int>(f);
                }
            }
        }
    }
    return buf;
}

std::vector<Eigen::Vector3d> vertex_normals(const std::vector<Eigen::Vector3d>& vertices, const std::vector<std::array<int, 3>>& faces)
{
    std::vector<Eigen::Vector3d> acc(vertices.size(), Eigen::Vector3d::Zero());
    std::vector<char> touched(vertices.size(), 0);
    for (const auto& f : faces) {
        const Eigen::Vector3d n = (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
        for (int k = 0; k < 3; ++k) {
            acc[f[k]] += n;
            touched[f[k]] = 1;
        }
    }
    for (size_t i = 0; i < acc.size(); ++i) {
        if (!touched[i])
            throw InvalidModel("vertex " + std::to_string(i) + " has no incident face");
        const double len = acc[i].norm();
        if (!(len > 0.0) || !std::isfinite(len))
            throw InvalidModel("vertex " + std::to_string(i) + " has a degenerate normal");
        acc[i] /= len;
    }
    return acc;
}

size_t VertexClass::count(VertexTag t) const { return static_cast<size_t>(std::count(tags.begin(), tags.end(), t)); }

std::vector<std::uint8_t> outer_contour(const RasterBuffers& buffers)
{
    const int w = buffers.width;
    const int h = buffers.height;
    std::vector<std::uint8_t> exterior(buffers.mask.size(), 0);
    std::vector<int> stack;
    auto seed = [&](int x, int y) {
        const size_t i = buffers.index(x, y);
        if (!buffers.mask[i] && !exterior[i]) {
            exterior[i] = 1;
            stack.push_back(static_cast<int>(i));
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int x = i % w;
        const int y = i / w;
        if (x > 0)
            seed(x - 1, y);
        if (x + 1 < w)
            seed(x + 1, y);
        if (y > 0)
            seed(x, y - 1);
        if (y + 1 < h)
            seed(x, y + 1);
    }

    std::vector<std::uint8_t> contour(buffers.mask.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = buffers.index(x, y);
            if (!buffers.mask[i])
                continue;
            const bool on_frame = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            if (on_frame || exterior[i - 1] || exterior[i + 1] || exterior[i - w] || exterior[i + w])
                contour[i] = 1;
        }
    }
    return contour;
}

VertexClass classify_vertices(const std::vector<Eigen::Vector3d>& vertices, const Camera& cam, const RasterBuffers& buffers,
                              double delta, double eps_depth)
{
    if (buffers.width != cam.width || buffers.height != cam.height)
        throw InvalidInput("raster buffers do not match the camera");
    if (!(delta >= 0.0))
        throw InvalidInput("border band width must be nonnegative");

    const auto contour = outer_contour(buffers);
    const int radius = static_cast<int>(std::ceil(delta)) + 1;

    VertexClass out;
    out.tags.assign(vertices.size(), VertexTag::hidden);
    out.contour_distance.assign(vertices.size(), kInf);
    for (size_t n = 0; n < vertices.size(); ++n) {
        const Eigen::Vector3d p = cam.to_camera(vertices[n]);
        if (!(p.z() > kNearPlane))
            continue;
        const double u = cam.focal * p.x() / p.z() + cam.principal_point.x();
        const double v = cam.focal * p.y() / p.z() + cam.principal_point.y();
        if (!(u >= 0.0 && v >= 0.0 && u < cam.width && v < cam.height))
            continue;
        const int px = static_cast<int>(u);
        const int py = static_cast<int>(v);
        if (p.z() > buffers.depth[buffers.index(px, py)] + eps_depth)
            continue;

        double best = kInf;
        for (int y = std::max(0, py - radius); y <= std::min(cam.height - 1, py + radius); ++y) {
            for (int x = std::max(0, px - radius); x <= std::min(cam.width - 1, px + radius); ++x) {
                if (!contour[buffers.index(x, y)])
                    continue;
                const double dx = std::max({x - u, 0.0, u - (x + 1)});
                const double dy = std::max({y - v, 0.0, v - (y + 1)});
                best = std::min(best, std::sqrt(dx * dx + dy * dy));
            }
        }
        if (best <= delta) {
            out.tags[n] = VertexTag::border;
            out.contour_distance[n] = best;
        } else {
            out.tags[n] = VertexTag::interior;
        }
    }
    return out;
}

SurfaceGaussianSet build_surface_gaussians(const VertexClass& cls, const std::vector<Eigen::Vector3d>& vertices,
                                           const std::vector<ColorHSV>& colors, const std::vector<double>& sigmas)
{
    SurfaceGaussianSet set;
    for (size_t n = 0; n < cls.tags.size(); ++n) {
        if (cls.tags[n] != VertexTag::interior)
            continue;
        SurfaceGaussian s;
        s.gaussian.mu = vertices[n];
        s.gaussian.sigma = sigmas[n];
        s.gaussian.color = colors[n];
        s.vertex = static_cast<int>(n);
        set.gaussians.push_back(s);
    }
    return set;
}

BorderGaussianSet build_border_gaussians(const VertexClass& cls, const std::vector<Eigen::Vector3d>& vertices,
                                         const std::vector<Eigen::Vector3d>& normals, const std::vector<ColorHSV>& colors,
                                         const std::vector<double>& sigmas)
{
    BorderGaussianSet set;
    for (size_t n = 0; n < cls.tags.size(); ++n) {
        if (cls.tags[n] != VertexTag::border)
            continue;
        BorderGaussian b;
        const double sigma = sigmas[n];
        b.inside.mu = vertices[n] - sigma * normals[n];
        b.outside.mu = vertices[n] + sigma * normals[n];
        b.inside.sigma = b.outside.sigma = sigma;
        b.inside.color = b.outside.color = colors[n];
        b.vertex = static_cast<int>(n);
        set.pairs.push_back(b);
    }
    return set;
}

double default_border_delta(const std::vector<Eigen::Vector3d>& vertices, const std::vector<double>& sigmas, const Camera& cam)
{
    double sum = 0.0;
    size_t count = 0;
    for (size_t n = 0; n < vertices.size(); ++n) {
        const double z = cam.to_camera(vertices[n]).z();
        if (z > kNearPlane) {
            sum += cam.focal * sigmas[n] / z;
            ++count;
        }
    }
    const double mean = count ? sum / static_cast<double>(count) : 0.0;
    return std::clamp(2.0 * mean, 1.0, 10.0);
}

double default_depth_epsilon(const std::vector<Eigen::Vector3d>& vertices)
{
    if (vertices.empty())
        return 0.0;
    Eigen::Vector3d lo = vertices.front();
    Eigen::Vector3d hi = vertices.front();
    for (const auto& v : vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return 0.01 * (hi - lo).norm();
}

void write_depth_pfm(const std::filesystem::path& path, const RasterBuffers& buffers)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << "Pf\n" << buffers.width << " " << buffers.height << "\n-1.0\n";
    for (int y = buffers.height - 1; y >= 0; --y) {
        for (int x = 0; x < buffers.width; ++x) {
            const double d = buffers.depth[buffers.index(x, y)];
            const float value = std::isfinite(d) ? static_cast<float>(d) : 0.0f;
            out.write(reinterpret_cast<const char*>(&value), sizeof(float));
        }
    }
}

void write_mask(const std::filesystem::path& path, const RasterBuffers& buffers)
{
    write_mask_png(path, buffers.mask, buffers.width, buffers.height);
}

} // namespace capture
