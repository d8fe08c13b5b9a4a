#include "capture/actor.hpp"

#include "capture/errors.hpp"

#include "json_io.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

namespace capture {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using detail::read_json;
using detail::to_json;
using detail::vec3;
using detail::write_text;

Skeleton parse_skeleton(const json& doc, const fs::path& path)
{
    if (!doc.is_array())
        throw CorruptData("skeleton file " + path.string() + " must hold an array of joints");
    std::vector<Joint> joints;
    try {
        for (size_t i = 0; i < doc.size(); ++i) {
            const json& jj = doc[i];
            Joint joint;
            joint.name = jj.value("name", "joint" + std::to_string(i));
            joint.parent = jj.contains("parent") && !jj["parent"].is_null() ? jj["parent"].get<int>() : -1;
            joint.rest_offset = vec3(jj.at("rest_offset"), "joint '" + joint.name + "' rest_offset");
            if (jj.contains("dof_axes"))
                for (const json& axis : jj["dof_axes"])
                    joint.dof_axes.push_back(vec3(axis, "joint '" + joint.name + "' dof axis"));
            joints.push_back(std::move(joint));
        }
    } catch (const json::exception& e) {
        throw CorruptData("malformed skeleton file " + path.string() + ": " + e.what());
    }
    return Skeleton(std::move(joints));
}

} // namespace

TemplatePaths TemplatePaths::in_directory(const fs::path& dir)
{
    return {dir / "mesh.obj", dir / "skeleton.json", dir / "weights.json", dir / "rigidity.txt", dir / "gaussians.json"};
}

ObjMesh read_obj(const fs::path& path)
{
    if (!fs::exists(path))
        throw MissingFile("mesh file not found: " + path.string());
    std::ifstream in(path);
    ObjMesh mesh;
    std::string line;
    int line_no = 0;
    bool any_color = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Eigen::Vector3d p;
            if (!(ss >> p.x() >> p.y() >> p.z()))
                throw CorruptData(fmt::format("{}:{}: malformed vertex", path.string(), line_no));
            Rgb c{0.5, 0.5, 0.5};
            if (ss >> c[0]) {
                if (!(ss >> c[1] >> c[2]))
                    throw CorruptData(fmt::format("{}:{}: incomplete vertex color", path.string(), line_no));
                for (double ch : c)
                    if (!(ch >= 0.0 && ch <= 1.0))
                        throw CorruptData(fmt::format("{}:{}: vertex color outside [0, 1]", path.string(), line_no));
                any_color = true;
            }
            mesh.vertices.push_back(p);
            mesh.colors.push_back(c);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                const int raw = std::stoi(tok.substr(0, tok.find('/')));
                const int i = raw > 0 ? raw - 1 : static_cast<int>(mesh.vertices.size()) + raw;
                if (i < 0 || i >= static_cast<int>(mesh.vertices.size()))
                    throw CorruptData(fmt::format("{}:{}: face index out of range", path.string(), line_no));
                idx.push_back(i);
            }
            if (idx.size() < 3)
                throw CorruptData(fmt::format("{}:{}: face with fewer than 3 vertices", path.string(), line_no));
            for (size_t k = 1; k + 1 < idx.size(); ++k)
                mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
    if (!any_color && !mesh.vertices.empty())
        spdlog::warn("mesh {} carries no vertex colors; using gray", path.string());
    return mesh;
}

void write_obj(const fs::path& path, const std::vector<Eigen::Vector3d>& vertices, const std::vector<Rgb>& colors,
               const std::vector<std::array<int, 3>>& faces)
{
    if (colors.size() != vertices.size())
        throw InvalidInput("color count does not match vertex count");
    std::string text;
    text.reserve(vertices.size() * 80 + faces.size() * 24);
    for (size_t i = 0; i < vertices.size(); ++i)
        text += fmt::format("v {:.9f} {:.9f} {:.9f} {:.6f} {:.6f} {:.6f}\n", vertices[i].x(), vertices[i].y(), vertices[i].z(),
                            colors[i][0], colors[i][1], colors[i][2]);
    for (const auto& f : faces)
        text += fmt::format("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1);
    write_text(path, text);
}

ActorModel load_template(const TemplatePaths& paths)
{
    ActorModel actor;
    actor.skeleton = parse_skeleton(read_json(paths.skeleton, "skeleton"), paths.skeleton);

    const ObjMesh obj = read_obj(paths.mesh);
    TemplateMesh& mesh = actor.mesh;
    mesh.vertices = obj.vertices;
    mesh.faces = obj.faces;
    mesh.vertex_rgb = obj.colors;
    for (const Rgb& c : obj.colors)
        mesh.vertex_colors.push_back(rgb_to_hsv(c));

    const json weights = read_json(paths.weights, "skinning weights");
    if (!weights.is_array())
        throw CorruptData("skinning weights file must hold one array per vertex");
    if (weights.size() != mesh.vertices.size())
        throw InvalidModel(fmt::format("skinning weights list {} vertices, mesh has {}", weights.size(), mesh.vertices.size()));
    try {
        for (const json& row : weights) {
            std::vector<SkinWeight> list;
            for (const json& e : row)
                list.push_back({e.at("joint").get<int>(), e.at("weight").get<double>()});
            mesh.skinning.push_back(std::move(list));
        }
    } catch (const json::exception& e) {
        throw CorruptData("malformed skinning weights file " + paths.weights.string() + ": " + e.what());
    }

    const json gaussians = read_json(paths.gaussians, "model gaussians");
    if (!gaussians.is_array())
        throw CorruptData("model gaussian file must hold an array");
    try {
        for (const json& e : gaussians) {
            ModelGaussian g;
            g.joint = e.at("joint").get<int>();
            g.bind.mu = vec3(e.at("mu"), "model gaussian mean");
            g.bind.sigma = e.at("sigma").get<double>();
            actor.model_gaussians.gaussians.push_back(g);
        }
    } catch (const json::exception& e) {
        throw CorruptData("malformed model gaussian file " + paths.gaussians.string() + ": " + e.what());
    }

    if (!paths.rigidity.empty() && fs::exists(paths.rigidity)) {
        std::ifstream in(paths.rigidity);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            try {
                actor.rigidity.weights.push_back(std::stod(line));
            } catch (const std::exception&) {
                throw CorruptData("malformed rigidity value '" + line + "' in " + paths.rigidity.string());
            }
        }
    } else {
        spdlog::warn("rigidity mask {} not found; treating every vertex as free", paths.rigidity.string());
        actor.rigidity.weights.assign(mesh.vertices.size(), 0.0);
    }

    validate_actor(actor);
    compute_bind_offsets(actor.skeleton, mesh);
    compute_model_gaussian_offsets(actor.skeleton, actor.model_gaussians);
    actor.model_gaussians = assign_model_gaussian_colors(actor.model_gaussians, mesh);
    actor.vertex_sigmas = default_vertex_sigmas(mesh);
    return actor;
}

void save_template(const ActorModel& actor, const TemplatePaths& paths)
{
    write_obj(paths.mesh, actor.mesh.vertices, actor.mesh.vertex_rgb, actor.mesh.faces);

    json skel = json::array();
    for (const Joint& j : actor.skeleton.joints()) {
        json axes = json::array();
        for (const auto& a : j.dof_axes)
            axes.push_back(to_json(a));
        skel.push_back({{"name", j.name}, {"parent", j.parent < 0 ? json(nullptr) : json(j.parent)}, {"rest_offset", to_json(j.rest_offset)},
                        {"dof_axes", axes}});
    }
    write_text(paths.skeleton, skel.dump(2) + "\n");

    json weights = json::array();
    for (const auto& row : actor.mesh.skinning) {
        json list = json::array();
        for (const SkinWeight& w : row)
            list.push_back({{"joint", w.joint}, {"weight", w.weight}});
        weights.push_back(list);
    }
    write_text(paths.weights, weights.dump() + "\n");

    json gs = json::array();
    for (const ModelGaussian& g : actor.model_gaussians.gaussians)
        gs.push_back({{"joint", g.joint}, {"mu", to_json(g.bind.mu)}, {"sigma", g.bind.sigma}});
    write_text(paths.gaussians, gs.dump(2) + "\n");

    std::string rig;
    for (double r : actor.rigidity.weights)
        rig += fmt::format("{}\n", r);
    write_text(paths.rigidity, rig);
}

} // namespace capture
