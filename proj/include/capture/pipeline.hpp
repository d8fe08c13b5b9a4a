#pragma once

#include "capture/eval.hpp"
#include "capture/image.hpp"
#include "capture/stage1.hpp"
#include "capture/stage2.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace capture {

// Input images live at <images>/camCC/frameFFFF.png, masks likewise under
// <masks>. All paths are absolute after loading.
struct SequencePaths {
    std::filesystem::path images;
    std::filesystem::path template_dir;
    std::filesystem::path cameras;
    std::optional<std::filesystem::path> masks;
    std::filesystem::path output;
};

struct SequenceConfig {
    SequencePaths paths;
    int first_frame = 0;
    int last_frame = 0;
    Pose initial_theta; // start of the first frame; empty selects the rest pose
    QuadTreeParams stage1_quadtree;
    QuadTreeParams stage2_quadtree;
    PoseEnergyConfig stage1;
    RefineConfig stage2;
    int threads = 1;
    std::uint64_t seed = 0;
};

// Parses the TOML file; relative paths resolve against its directory. Throws
// MissingFile when a referenced input does not exist.
SequenceConfig load_sequence_config(const std::filesystem::path& path);

// Throws InvalidInput or MissingFile.
void validate_sequence_config(const SequenceConfig& cfg);

std::string frame_stem(int frame); // "frame0007"
std::filesystem::path image_path(const SequenceConfig& cfg, int camera, int frame);
std::filesystem::path mask_path(const SequenceConfig& cfg, int camera, int frame);

enum class MeshStage { stage1, stage2 };

// Output layout below paths.output.
std::filesystem::path pose_path(const SequenceConfig& cfg, MeshStage stage, int frame);
std::filesystem::path mesh_path(const SequenceConfig& cfg, MeshStage stage, int frame);
std::filesystem::path trace_path(const SequenceConfig& cfg, int frame);
std::filesystem::path eval_dir(const SequenceConfig& cfg, MeshStage stage);

struct PoseRecord {
    int frame = 0;
    Pose theta;
    double energy = 0.0;
};

void write_pose_record(const std::filesystem::path& path, const PoseRecord& record);
PoseRecord read_pose_record(const std::filesystem::path& path);

std::string trace_csv(const std::vector<TraceEntry>& trace);

struct FrameFailure {
    int frame = 0;
    std::string message;
};

struct StageReport {
    std::vector<int> completed;
    std::vector<FrameFailure> failed;
    bool ok() const { return failed.empty(); }
};

// Runs fn(0..n-1) on up to `threads` workers. Exceptions are rethrown after
// all workers finish, the lowest index first.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Frame t starts from frame t-1: the previous result of this run, else a
// stored Stage-I pose, else the configured initial pose.
StageReport run_stage1(const SequenceConfig& cfg);

// Needs the Stage-I pose of every requested frame.
StageReport run_stage2(const SequenceConfig& cfg);

struct EvalReport {
    F1Report report;
    std::vector<FrameFailure> failed;
};

// Needs masks and the meshes of the given stage. Writes f1.csv and overlays.
EvalReport run_eval(const SequenceConfig& cfg, MeshStage stage);

} // namespace capture
