// capture: synthesize scenes, track poses, refine surfaces and evaluate.

#include "capture/errors.hpp"
#include "capture/pipeline.hpp"
#include "capture/synth.hpp"

#include "CLI11.hpp"
#include "toml.hpp"

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

using namespace capture;
namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config;
    std::optional<double> w_skin;
    std::optional<double> w_smooth;
    std::optional<double> delta;
    std::optional<int> max_iters;
    std::string frames;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_sequence_flags(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "sequence config (TOML)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--w-skin", o.w_skin, "skinning prior weight");
    cmd->add_option("--w-smooth", o.w_smooth, "Laplacian smoothness weight");
    cmd->add_option("--delta", o.delta, "border band width in pixels");
    cmd->add_option("--max-iters", o.max_iters, "iteration limit for the stages being run");
    cmd->add_option("--frames", o.frames, "frame range A..B");
    cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "seed recorded with the run");
    cmd->add_option("--out", o.out, "output directory (default from config)");
}

std::pair<int, int> parse_frames(const std::string& s)
{
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            const int f = std::stoi(s);
            return {f, f};
        }
        return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
    } catch (const std::exception&) {
        throw InvalidInput("--frames expects A..B, got '" + s + "'");
    }
}

SequenceConfig sequence_config(const Overrides& o)
{
    SequenceConfig cfg = load_sequence_config(o.config);
    if (o.w_skin)
        cfg.stage2.w_skin = *o.w_skin;
    if (o.w_smooth)
        cfg.stage2.w_smooth = *o.w_smooth;
    if (o.delta)
        cfg.stage2.delta = *o.delta;
    if (o.max_iters) {
        cfg.stage1.max_iters = *o.max_iters;
        cfg.stage2.max_iters = *o.max_iters;
    }
    if (!o.frames.empty())
        std::tie(cfg.first_frame, cfg.last_frame) = parse_frames(o.frames);
    if (o.threads)
        cfg.threads = *o.threads;
    if (o.seed)
        cfg.seed = *o.seed;
    if (!o.out.empty())
        cfg.paths.output = fs::absolute(o.out);
    validate_sequence_config(cfg);
    return cfg;
}

int report_failures(const char* stage, const std::vector<FrameFailure>& failed)
{
    if (failed.empty())
        return 0;
    std::string frames;
    for (const FrameFailure& f : failed)
        frames += (frames.empty() ? "" : ", ") + std::to_string(f.frame);
    std::cerr << stage << " failed on frames: " << frames << "\n";
    return 1;
}

template <typename E>
E enum_named(const std::string& name, std::initializer_list<E> values)
{
    for (E v : values)
        if (to_string(v) == name)
            return v;
    throw InvalidInput("unknown name '" + name + "'");
}

template <typename T>
void take(const toml::node_view<const toml::node>& t, const char* key, T& out)
{
    if (auto v = t[key].value<T>())
        out = *v;
}

// A synth TOML starts from `preset` (default two-bone) and overrides fields.
SynthSpec synth_spec_from_toml(const fs::path& path)
{
    toml::table doc;
    try {
        doc = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw CorruptData(fmt::format("cannot parse {}: {}", path.string(), e.description()));
    }
    const toml::node_view<const toml::node> root{static_cast<const toml::node&>(doc)};
    SynthSpec s = synth_preset(root["preset"].value_or(std::string("two-bone")));
    std::int64_t seed = static_cast<std::int64_t>(s.seed);
    take(root, "seed", seed);
    s.seed = static_cast<std::uint64_t>(seed);
    if (auto a = root["actor"].value<std::string>())
        s.actor = enum_named(*a, {ActorKind::sphere_blob, ActorKind::two_bone_cylinder});
    take(root, "n_cameras", s.n_cameras);
    take(root, "image_size", s.image_size);
    take(root, "n_frames", s.n_frames);
    take(root, "motion", s.motion);
    take(root, "segments", s.segments);
    take(root, "rings", s.rings);
    take(root, "patches", s.patches);
    take(root, "rigid_occluded_end", s.rigid_occluded_end);

    const auto d = root["deform"];
    if (auto k = d["kind"].value<std::string>())
        s.deform.kind = enum_named(*k, {DeformKind::none, DeformKind::bulge, DeformKind::skirt_swing});
    take(d, "amplitude", s.deform.bulge.amplitude);
    take(d, "radius", s.deform.bulge.radius);
    if (const toml::array* c = d["center"].as_array(); c && c->size() == 3)
        for (int i = 0; i < 3; ++i)
            s.deform.bulge.center[i] = (*c)[static_cast<size_t>(i)].value_or(0.0);
    take(d, "swing_amplitude", s.deform.skirt.amplitude);
    take(d, "frequency", s.deform.skirt.frequency);
    take(d, "height", s.deform.skirt.height);

    const auto b = root["background"];
    if (auto k = b["kind"].value<std::string>())
        s.background.kind = enum_named(*k, {BackgroundKind::solid, BackgroundKind::checker, BackgroundKind::photo_clutter});
    take(b, "octaves", s.background.octaves);
    take(b, "checker_px", s.background.checker_px);

    const auto occ = root["occluder"];
    take(occ, "enabled", s.occluder.enabled);
    take(occ, "height", s.occluder.height);
    take(occ, "half_width", s.occluder.half_width);
    return s;
}

void print_f1(const char* label, const F1Report& r)
{
    std::cout << fmt::format("{:<10} mean F1 {:.4f} ± {:.4f}  (P {:.4f}, R {:.4f}, {} views)\n", label, r.f1.mean, r.f1.std, r.precision.mean,
                             r.recall.mean, r.entries.size());
}

void set_log_level()
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("capture"));
    const char* env = std::getenv("CAPTURE_LOG");
    const std::string level = env ? env : "warn";
    if (level == "error")
        spdlog::set_level(spdlog::level::err);
    else if (level == "warn")
        spdlog::set_level(spdlog::level::warn);
    else if (level == "info")
        spdlog::set_level(spdlog::level::info);
    else if (level == "debug")
        spdlog::set_level(spdlog::level::debug);
    else {
        spdlog::set_level(spdlog::level::warn);
        spdlog::warn("CAPTURE_LOG='{}' is not one of error, warn, info, debug", level);
    }
}

} // namespace

int main(int argc, char** argv)
{
    set_log_level();
    CLI::App app{"Multi-view performance capture: synthetic scenes, pose tracking, surface refinement, evaluation"};
    app.require_subcommand(1);

    std::string preset = "two-bone";
    std::string synth_config;
    std::optional<std::uint64_t> synth_seed;
    std::optional<int> synth_frames;
    std::string synth_out;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic multi-view scene");
    synth->add_option("--preset", preset, "two-bone, two-bone-occluded or sphere-blob");
    synth->add_option("--config", synth_config, "scene TOML (overrides the preset)")->check(CLI::ExistingFile);
    synth->add_option("--seed", synth_seed, "scene seed");
    synth->add_option("--n-frames", synth_frames, "number of frames");
    synth->add_option("--out", synth_out, "output directory")->required();

    Overrides s1, s2, ev, pl;
    int eval_stage = 2;
    CLI::App* stage1 = app.add_subcommand("stage1", "track skeletal poses");
    add_sequence_flags(stage1, s1);
    CLI::App* stage2 = app.add_subcommand("stage2", "refine surfaces from the stage1 poses");
    add_sequence_flags(stage2, s2);
    CLI::App* eval = app.add_subcommand("eval", "silhouette F1 of stage meshes against masks");
    add_sequence_flags(eval, ev);
    eval->add_option("--stage", eval_stage, "1 or 2")->check(CLI::IsMember({1, 2}));
    CLI::App* pipeline = app.add_subcommand("pipeline", "stage1, stage2 and eval of both");
    add_sequence_flags(pipeline, pl);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            SynthSpec spec = synth_config.empty() ? synth_preset(preset) : synth_spec_from_toml(synth_config);
            if (synth_seed)
                spec.seed = *synth_seed;
            if (synth_frames)
                spec.n_frames = *synth_frames;
            const SynthManifest m = generate(spec, synth_out);
            std::cout << "wrote " << (m.root / "manifest.json").string() << "\n";
            return 0;
        }
        if (stage1->parsed())
            return report_failures("stage1", run_stage1(sequence_config(s1)).failed);
        if (stage2->parsed())
            return report_failures("stage2", run_stage2(sequence_config(s2)).failed);
        if (eval->parsed()) {
            const EvalReport r = run_eval(sequence_config(ev), eval_stage == 1 ? MeshStage::stage1 : MeshStage::stage2);
            print_f1(eval_stage == 1 ? "Stage-I" : "Stage-II", r.report);
            return report_failures("eval", r.failed);
        }
        if (pipeline->parsed()) {
            const SequenceConfig cfg = sequence_config(pl);
            int rc = report_failures("stage1", run_stage1(cfg).failed);
            rc |= report_failures("stage2", run_stage2(cfg).failed);
            const EvalReport e1 = run_eval(cfg, MeshStage::stage1);
            const EvalReport e2 = run_eval(cfg, MeshStage::stage2);
            rc |= report_failures("eval", e1.failed) | report_failures("eval", e2.failed);
            print_f1("Stage-I", e1.report);
            print_f1("Stage-II", e2.report);
            return rc;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
