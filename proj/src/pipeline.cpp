#include "capture/pipeline.hpp"

#include "capture/camera_io.hpp"
#include "capture/errors.hpp"

#include "json_io.hpp"
#include "toml.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <exception>
#include <thread>

namespace capture {

namespace fs = std::filesystem;
using detail::json;

namespace {

template <typename T>
void take(const toml::node_view<const toml::node>& table, const char* key, T& out)
{
    const auto node = table[key];
    if (!node)
        return;
    if (auto v = node.value<T>())
        out = *v;
    else
        throw CorruptData(fmt::format("config key '{}' has the wrong type", key));
}

void take_quadtree(const toml::node_view<const toml::node>& table, QuadTreeParams& q)
{
    take(table, "max_depth", q.max_depth);
    take(table, "min_node_px", q.min_node_px);
    take(table, "color_var_threshold", q.color_var_threshold);
}

void take_color(const toml::node_view<const toml::node>& table, ColorSimilarityConfig& c)
{
    take(table, "color_d0", c.d0);
    take(table, "color_d1", c.d1);
}

fs::path resolve(const fs::path& base, const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; }

void require_exists(const fs::path& p, const char* what)
{
    if (!fs::exists(p))
        throw MissingFile(fmt::format("{} not found: {}", what, p.string()));
}

std::string camera_dir(int camera) { return fmt::format("cam{:02d}", camera); }

const char* stage_dir(MeshStage stage) { return stage == MeshStage::stage1 ? "stage1" : "stage2"; }

std::vector<ImageGaussianSet> decompose_frame(const SequenceConfig& cfg, int n_cameras, int frame, const QuadTreeParams& q)
{
    std::vector<ImageGaussianSet> sets(static_cast<size_t>(n_cameras));
    parallel_for(n_cameras, cfg.threads, [&](int c) {
        sets[c] = quadtree_decompose(load_frame(image_path(cfg, c, frame)), q);
        sets[c].camera_id = c;
    });
    return sets;
}

void log_failures(const char* stage, const std::vector<FrameFailure>& failed)
{
    for (const FrameFailure& f : failed)
        spdlog::error("{} frame {}: {}", stage, f.frame, f.message);
}

} // namespace

std::string frame_stem(int frame) { return fmt::format("frame{:04d}", frame); }

fs::path image_path(const SequenceConfig& cfg, int camera, int frame)
{
    return cfg.paths.images / camera_dir(camera) / (frame_stem(frame) + ".png");
}

fs::path mask_path(const SequenceConfig& cfg, int camera, int frame)
{
    if (!cfg.paths.masks)
        throw MissingFile("no ground-truth mask directory configured ([paths] masks)");
    return *cfg.paths.masks / camera_dir(camera) / (frame_stem(frame) + ".png");
}

fs::path pose_path(const SequenceConfig& cfg, MeshStage stage, int frame)
{
    return cfg.paths.output / stage_dir(stage) / ("pose_" + frame_stem(frame) + ".json");
}

fs::path mesh_path(const SequenceConfig& cfg, MeshStage stage, int frame)
{
    const char* kind = stage == MeshStage::stage1 ? "skinned_" : "refined_";
    return cfg.paths.output / stage_dir(stage) / (kind + frame_stem(frame) + ".obj");
}

fs::path trace_path(const SequenceConfig& cfg, int frame) { return cfg.paths.output / "stage2" / ("trace_" + frame_stem(frame) + ".csv"); }

fs::path eval_dir(const SequenceConfig& cfg, MeshStage stage) { return cfg.paths.output / "eval" / stage_dir(stage); }

SequenceConfig load_sequence_config(const fs::path& path)
{
    require_exists(path, "sequence config");
    toml::table doc;
    try {
        doc = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw CorruptData(fmt::format("cannot parse {}: {}", path.string(), e.description()));
    }
    const fs::path base = fs::absolute(path).parent_path();
    const toml::node_view<const toml::node> root{static_cast<const toml::node&>(doc)};

    SequenceConfig cfg;
    std::int64_t seed = 0;
    take(root, "seed", seed);
    cfg.seed = static_cast<std::uint64_t>(seed);
    take(root, "threads", cfg.threads);

    const auto paths = root["paths"];
    auto path_of = [&](const char* key, bool required) -> std::optional<fs::path> {
        std::string s;
        take(paths, key, s);
        if (s.empty()) {
            if (required)
                throw InvalidInput(fmt::format("config is missing [paths] {}", key));
            return std::nullopt;
        }
        return resolve(base, s);
    };
    cfg.paths.images = *path_of("images", true);
    cfg.paths.template_dir = *path_of("template", true);
    cfg.paths.cameras = *path_of("cameras", true);
    cfg.paths.masks = path_of("masks", false);
    cfg.paths.output = path_of("output", false).value_or(base / "run");

    take(root["frames"], "first", cfg.first_frame);
    take(root["frames"], "last", cfg.last_frame);

    if (const toml::array* theta = doc["initial"]["theta"].as_array()) {
        cfg.initial_theta.resize(static_cast<Eigen::Index>(theta->size()));
        for (size_t i = 0; i < theta->size(); ++i) {
            const auto v = (*theta)[i].value<double>();
            if (!v)
                throw CorruptData("[initial] theta must hold numbers");
            cfg.initial_theta[static_cast<Eigen::Index>(i)] = *v;
        }
    }

    const auto s1 = root["stage1"];
    take(s1, "clamp_cap", cfg.stage1.clamp_cap);
    take(s1, "max_iters", cfg.stage1.max_iters);
    take(s1, "step0", cfg.stage1.step0);
    take(s1, "step_shrink", cfg.stage1.step_shrink);
    take(s1, "grad_tol", cfg.stage1.grad_tol);
    take_color(s1, cfg.stage1.color);
    take_quadtree(s1["quadtree"], cfg.stage1_quadtree);

    const auto s2 = root["stage2"];
    take(s2, "w_skin", cfg.stage2.w_skin);
    take(s2, "w_smooth", cfg.stage2.w_smooth);
    take(s2, "delta", cfg.stage2.delta);
    take(s2, "eps_depth", cfg.stage2.eps_depth);
    take(s2, "max_iters", cfg.stage2.max_iters);
    take(s2, "step0", cfg.stage2.step0);
    take(s2, "step_shrink", cfg.stage2.step_shrink);
    take(s2, "grad_tol", cfg.stage2.grad_tol);
    take(s2, "reclassify_every", cfg.stage2.reclassify_every);
    take(s2, "rigidity_base", cfg.stage2.rigidity_base);
    take(s2, "momentum", cfg.stage2.momentum);
    take_color(s2, cfg.stage2.color);
    take_quadtree(s2["quadtree"], cfg.stage2_quadtree);

    validate_sequence_config(cfg);
    return cfg;
}

void validate_sequence_config(const SequenceConfig& cfg)
{
    require_exists(cfg.paths.images, "image directory");
    require_exists(cfg.paths.template_dir, "template directory");
    require_exists(cfg.paths.cameras, "camera file");
    if (cfg.paths.masks)
        require_exists(*cfg.paths.masks, "mask directory");
    if (cfg.first_frame < 0 || cfg.last_frame < cfg.first_frame)
        throw InvalidInput(fmt::format("invalid frame range {}..{}", cfg.first_frame, cfg.last_frame));
    if (cfg.threads < 1)
        throw InvalidInput("threads must be at least 1");
    for (const QuadTreeParams* q : {&cfg.stage1_quadtree, &cfg.stage2_quadtree})
        if (q->max_depth < 0 || q->min_node_px < 1 || !(q->color_var_threshold >= 0.0))
            throw InvalidInput("invalid quad-tree parameters");
    validate_pose_config(cfg.stage1);
    validate_refine_config(cfg.stage2);
}

void write_pose_record(const fs::path& path, const PoseRecord& record)
{
    const json doc{{"frame", record.frame}, {"theta", detail::to_json(record.theta)}, {"energy", record.energy}};
    detail::write_text(path, doc.dump(2) + "\n");
}

PoseRecord read_pose_record(const fs::path& path)
{
    const json doc = detail::read_json(path, "pose");
    PoseRecord r;
    try {
        r.frame = doc.at("frame").get<int>();
        r.theta = detail::vecx(doc.at("theta"), "pose theta");
        r.energy = doc.at("energy").get<double>();
    } catch (const json::exception& e) {
        throw CorruptData("malformed pose file " + path.string() + ": " + e.what());
    }
    return r;
}

std::string trace_csv(const std::vector<TraceEntry>& trace)
{
    std::string out = "iteration,e_surf,e_cont,e_skin,e_smooth,total\n";
    for (const TraceEntry& t : trace)
        out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", t.iteration, t.e_surf, t.e_cont, t.e_skin, t.e_smooth, t.total);
    return out;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn)
{
    if (n <= 0)
        return;
    const int workers = std::max(1, std::min(threads, n));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (std::thread& t : pool)
            t.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e)
            std::rethrow_exception(e);
}

StageReport run_stage1(const SequenceConfig& cfg)
{
    validate_sequence_config(cfg);
    const ActorModel actor = load_template(TemplatePaths::in_directory(cfg.paths.template_dir));
    const std::vector<Camera> cams = load_cameras(cfg.paths.cameras);
    const int n_cameras = static_cast<int>(cams.size());

    Pose theta = cfg.initial_theta.size() ? cfg.initial_theta : actor.skeleton.rest_pose();
    if (theta.size() != actor.skeleton.dof_count())
        throw InvalidInput(fmt::format("initial theta has {} entries, the skeleton has {} DOFs", theta.size(), actor.skeleton.dof_count()));
    if (cfg.first_frame > 0) {
        const fs::path prev = pose_path(cfg, MeshStage::stage1, cfg.first_frame - 1);
        if (fs::exists(prev))
            theta = read_pose_record(prev).theta;
    }

    StageReport report;
    for (int frame = cfg.first_frame; frame <= cfg.last_frame; ++frame) {
        try {
            const auto sets = decompose_frame(cfg, n_cameras, frame, cfg.stage1_quadtree);
            const PoseResult r = optimize_pose(theta, actor, make_observations(cams, sets), cfg.stage1);
            theta = r.theta;
            write_pose_record(pose_path(cfg, MeshStage::stage1, frame), {frame, r.theta, r.trace.back()});
            write_obj(mesh_path(cfg, MeshStage::stage1, frame), skin_vertices(actor.mesh, forward_kinematics(actor.skeleton, r.theta)),
                      actor.mesh.vertex_rgb, actor.mesh.faces);
            spdlog::info("stage1 frame {}: {} iterations, energy {:.4f}", frame, r.iterations, r.trace.back());
            report.completed.push_back(frame);
        } catch (const std::exception& e) {
            report.failed.push_back({frame, e.what()});
        }
    }
    log_failures("stage1", report.failed);
    return report;
}

StageReport run_stage2(const SequenceConfig& cfg)
{
    validate_sequence_config(cfg);
    for (int frame = cfg.first_frame; frame <= cfg.last_frame; ++frame)
        if (!fs::exists(pose_path(cfg, MeshStage::stage1, frame)))
            throw MissingFile(fmt::format("stage2 needs the stage1 pose of frame {} ({}); run stage1 first", frame,
                                          pose_path(cfg, MeshStage::stage1, frame).string()));
    const ActorModel actor = load_template(TemplatePaths::in_directory(cfg.paths.template_dir));
    const std::vector<Camera> cams = load_cameras(cfg.paths.cameras);
    const int n_cameras = static_cast<int>(cams.size());

    const int n = cfg.last_frame - cfg.first_frame + 1;
    std::vector<std::string> errors(static_cast<size_t>(n));
    // Frames are independent; within a frame everything runs on one thread.
    SequenceConfig inner = cfg;
    inner.threads = 1;
    parallel_for(n, cfg.threads, [&](int k) {
        const int frame = cfg.first_frame + k;
        try {
            const PoseRecord start = read_pose_record(pose_path(cfg, MeshStage::stage1, frame));
            if (start.theta.size() != actor.skeleton.dof_count())
                throw CorruptData(fmt::format("stage1 pose of frame {} has the wrong DOF count", frame));
            const auto sets = decompose_frame(inner, n_cameras, frame, cfg.stage2_quadtree);
            const Vertices v0 = skin_vertices(actor.mesh, forward_kinematics(actor.skeleton, start.theta));
            const FrameContext ctx = make_frame_context(actor, make_observations(cams, sets), v0, cfg.stage2);
            const RefineResult r = optimize_refine(v0, start.theta, ctx, cfg.stage2);
            write_obj(mesh_path(cfg, MeshStage::stage2, frame), r.v, actor.mesh.vertex_rgb, actor.mesh.faces);
            write_pose_record(pose_path(cfg, MeshStage::stage2, frame), {frame, r.theta, r.trace.back().total});
            detail::write_text(trace_path(cfg, frame), trace_csv(r.trace));
            spdlog::info("stage2 frame {}: energy {:.4f} -> {:.4f}", frame, r.trace.front().total, r.trace.back().total);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    });

    StageReport report;
    for (int k = 0; k < n; ++k) {
        if (errors[k].empty())
            report.completed.push_back(cfg.first_frame + k);
        else
            report.failed.push_back({cfg.first_frame + k, errors[k]});
    }
    log_failures("stage2", report.failed);
    return report;
}

EvalReport run_eval(const SequenceConfig& cfg, MeshStage stage)
{
    validate_sequence_config(cfg);
    if (!cfg.paths.masks)
        throw MissingFile("eval needs ground-truth masks; set [paths] masks in the config");
    const std::vector<Camera> cams = load_cameras(cfg.paths.cameras);
    const int n_cameras = static_cast<int>(cams.size());
    for (int frame = cfg.first_frame; frame <= cfg.last_frame; ++frame) {
        require_exists(mesh_path(cfg, stage, frame), stage == MeshStage::stage1 ? "stage1 mesh (run stage1 first)" : "stage2 mesh (run stage2 first)");
        for (int c = 0; c < n_cameras; ++c)
            require_exists(mask_path(cfg, c, frame), "ground-truth mask");
    }

    const fs::path dir = eval_dir(cfg, stage);
    const int n = cfg.last_frame - cfg.first_frame + 1;
    std::vector<std::vector<F1Entry>> per_frame(static_cast<size_t>(n));
    std::vector<std::string> errors(static_cast<size_t>(n));
    parallel_for(n, cfg.threads, [&](int k) {
        const int frame = cfg.first_frame + k;
        try {
            const ObjMesh mesh = read_obj(mesh_path(cfg, stage, frame));
            for (int c = 0; c < n_cameras; ++c) {
                int w = 0, h = 0;
                const Mask truth = load_mask_png(mask_path(cfg, c, frame), w, h);
                const OverlapLabels labels = overlap_labels(model_silhouette(mesh.vertices, mesh.faces, cams[c]), truth, w, h);
                write_png(dir / overlay_filename(c, frame), overlay_image(labels));
                per_frame[k].push_back({frame, c, labels.counts, f1_score(labels)});
            }
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    });

    EvalReport out;
    std::vector<F1Entry> entries;
    for (int k = 0; k < n; ++k) {
        if (!errors[k].empty())
            out.failed.push_back({cfg.first_frame + k, errors[k]});
        else
            entries.insert(entries.end(), per_frame[k].begin(), per_frame[k].end());
    }
    out.report = summarize(std::move(entries));
    detail::write_text(dir / "f1.csv", report_csv(out.report));
    log_failures("eval", out.failed);
    return out;
}

} // namespace capture
