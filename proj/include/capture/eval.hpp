#pragma once

#include "capture/gaussian.hpp"
#include "capture/image.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace capture {

using Mask = std::vector<std::uint8_t>;

Mask model_silhouette(const std::vector<Eigen::Vector3d>& vertices, const std::vector<std::array<int, 3>>& faces, const Camera& cam);

enum class PixelLabel : std::uint8_t { tn, tp, fp, fn };

struct LabelCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
};

struct OverlapLabels {
    int width = 0;
    int height = 0;
    std::vector<PixelLabel> labels;
    LabelCounts counts;
};

// Throws InvalidInput on mismatched extents.
OverlapLabels overlap_labels(const Mask& model, const Mask& truth, int width, int height);

struct F1Score {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

F1Score f1_score(const LabelCounts& counts);
inline F1Score f1_score(const OverlapLabels& labels) { return f1_score(labels.counts); }

// Purple for true positives, red for false positives, green for false
// negatives and black for true negatives.
inline constexpr std::array<std::uint8_t, 3> kColorTP{161, 161, 255};
inline constexpr std::array<std::uint8_t, 3> kColorFP{255, 0, 0};
inline constexpr std::array<std::uint8_t, 3> kColorFN{0, 255, 0};
inline constexpr std::array<std::uint8_t, 3> kColorTN{0, 0, 0};

Rgb8Image overlay_image(const OverlapLabels& labels);

struct F1Entry {
    int frame = 0;
    int camera = 0;
    LabelCounts counts;
    F1Score score;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation; 0 for fewer than two entries
};

struct F1Report {
    std::vector<F1Entry> entries;
    MeanStd precision;
    MeanStd recall;
    MeanStd f1;
};

F1Report summarize(std::vector<F1Entry> entries);

// frame,camera,tp,fp,fn,tn,precision,recall,f1 rows followed by a summary row.
std::string report_csv(const F1Report& report);

std::string overlay_filename(int camera, int frame);

} // namespace capture
