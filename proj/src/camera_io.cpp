#include "capture/camera_io.hpp"

#include "capture/errors.hpp"

#include "json_io.hpp"

#include <Eigen/Geometry>

namespace capture {

using detail::json;

std::vector<Camera> load_cameras(const std::filesystem::path& path)
{
    const json doc = detail::read_json(path, "camera");
    std::vector<Camera> cams;
    try {
        for (const json& c : doc.at("cameras")) {
            Camera cam;
            const json& r = c.at("rotation");
            if (!r.is_array() || r.size() != 3)
                throw CorruptData("camera rotation must be a 3x3 array");
            for (int i = 0; i < 3; ++i)
                cam.rotation.row(i) = detail::vec3(r[i], "camera rotation row").transpose();
            cam.translation = detail::vec3(c.at("translation"), "camera translation");
            cam.focal = c.at("focal").get<double>();
            const json& pp = c.at("principal_point");
            if (!pp.is_array() || pp.size() != 2)
                throw CorruptData("camera principal_point must hold 2 numbers");
            cam.principal_point = {pp[0].get<double>(), pp[1].get<double>()};
            cam.width = c.at("width").get<int>();
            cam.height = c.at("height").get<int>();
            validate_camera(cam);
            cams.push_back(cam);
        }
    } catch (const json::exception& e) {
        throw CorruptData("malformed camera file " + path.string() + ": " + e.what());
    }
    if (cams.empty())
        throw CorruptData("camera file " + path.string() + " lists no cameras");
    return cams;
}

void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras)
{
    json list = json::array();
    for (size_t k = 0; k < cameras.size(); ++k) {
        const Camera& c = cameras[k];
        json rot = json::array();
        for (int i = 0; i < 3; ++i)
            rot.push_back(detail::to_json(Eigen::Vector3d(c.rotation.row(i).transpose())));
        list.push_back({{"id", k},
                        {"rotation", rot},
                        {"translation", detail::to_json(c.translation)},
                        {"focal", c.focal},
                        {"principal_point", json::array({c.principal_point.x(), c.principal_point.y()})},
                        {"width", c.width},
                        {"height", c.height}});
    }
    detail::write_text(path, json{{"cameras", list}}.dump(2) + "\n");
}

Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up, double focal, int width, int height)
{
    const Eigen::Vector3d forward = (target - eye).normalized();
    const Eigen::Vector3d right = forward.cross(up).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    Camera cam;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    cam.focal = focal;
    cam.principal_point = {0.5 * width, 0.5 * height};
    cam.width = width;
    cam.height = height;
    validate_camera(cam);
    return cam;
}

} // namespace capture
