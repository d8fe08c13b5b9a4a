#pragma once

// Small JSON and text-file helpers shared by the file-format code.

#include "capture/errors.hpp"

#include "json.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <string>

namespace capture::detail {

using nlohmann::json;

inline json read_json(const std::filesystem::path& path, const char* what)
{
    if (!std::filesystem::exists(path))
        throw MissingFile(std::string(what) + " file not found: " + path.string());
    std::ifstream in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw CorruptData(std::string("cannot parse ") + what + " file " + path.string() + ": " + e.what());
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
}

inline Eigen::Vector3d vec3(const json& j, const std::string& context)
{
    if (!j.is_array() || j.size() != 3)
        throw CorruptData(context + ": expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json to_json(const Eigen::VectorXd& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
    return out;
}

inline Eigen::VectorXd vecx(const json& j, const std::string& context)
{
    if (!j.is_array())
        throw CorruptData(context + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

} // namespace capture::detail
