#pragma once

#include "capture/gaussian.hpp"

#include <filesystem>
#include <vector>

namespace capture {

// Camera rig as JSON:
//   {"cameras": [{"id", "rotation": [[3], [3], [3]], "translation": [3],
//                 "focal", "principal_point": [2], "width", "height"}, ...]}
// Cameras are returned in file order and validated.
std::vector<Camera> load_cameras(const std::filesystem::path& path);
void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras);

// Camera at `eye` looking at `target`; image y points away from `up`.
Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up, double focal, int width, int height);

} // namespace capture
