#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

namespace capture::testing {

// Portable uniform double in [lo, hi) from a 64-bit engine.
inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x, double h)
{
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        g[k] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

// Norm-wise relative error with an absolute floor for near-zero gradients.
inline double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric, double floor = 1e-8)
{
    const double scale = std::max({analytic.norm(), numeric.norm(), floor});
    return (analytic - numeric).norm() / scale;
}

} // namespace capture::testing

#include <array>
#include <map>
#include <utility>
#include <vector>

namespace capture::testing {

struct TestMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;
};

// Subdivided icosahedron on a sphere, faces wound counter-clockwise seen
// from outside. Level k has 10 * 4^k + 2 vertices.
inline TestMesh icosphere(int level, double radius = 1.0, const Eigen::Vector3d& center = Eigen::Vector3d::Zero())
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v)
        p.normalize();
    std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                                         {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                                         {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end())
                return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const int idx = static_cast<int>(v.size()) - 1;
            mid.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        for (const auto& tri : f) {
            const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    for (auto& p : v)
        p = center + radius * p;
    return {v, f};
}

} // namespace capture::testing
