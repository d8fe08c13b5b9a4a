#include "capture/eval.hpp"

#include "capture/errors.hpp"
#include "capture/visibility.hpp"

#include <fmt/format.h>

#include <cmath>

namespace capture {

Mask model_silhouette(const std::vector<Eigen::Vector3d>& vertices, const std::vector<std::array<int, 3>>& faces, const Camera& cam)
{
    return rasterize(vertices, faces, cam).mask;
}

OverlapLabels overlap_labels(const Mask& model, const Mask& truth, int width, int height)
{
    const size_t n = static_cast<size_t>(width) * static_cast<size_t>(height);
    if (width <= 0 || height <= 0 || model.size() != n || truth.size() != n)
        throw InvalidInput("silhouette masks must share the same extent");
    OverlapLabels out;
    out.width = width;
    out.height = height;
    out.labels.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const bool m = model[i] != 0;
        const bool t = truth[i] != 0;
        PixelLabel l;
        if (m && t) {
            l = PixelLabel::tp;
            ++out.counts.tp;
        } else if (m) {
            l = PixelLabel::fp;
            ++out.counts.fp;
        } else if (t) {
            l = PixelLabel::fn;
            ++out.counts.fn;
        } else {
            l = PixelLabel::tn;
            ++out.counts.tn;
        }
        out.labels[i] = l;
    }
    return out;
}

F1Score f1_score(const LabelCounts& c)
{
    F1Score s;
    const double tp = static_cast<double>(c.tp);
    if (c.tp + c.fp > 0)
        s.precision = tp / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0)
        s.recall = tp / static_cast<double>(c.tp + c.fn);
    const std::int64_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom > 0)
        s.f1 = 2.0 * tp / static_cast<double>(denom);
    return s;
}

Rgb8Image overlay_image(const OverlapLabels& labels)
{
    Rgb8Image img;
    img.width = labels.width;
    img.height = labels.height;
    img.data.resize(labels.labels.size() * 3);
    for (size_t i = 0; i < labels.labels.size(); ++i) {
        const std::array<std::uint8_t, 3>* color = &kColorTN;
        switch (labels.labels[i]) {
        case PixelLabel::tp: color = &kColorTP; break;
        case PixelLabel::fp: color = &kColorFP; break;
        case PixelLabel::fn: color = &kColorFN; break;
        case PixelLabel::tn: break;
        }
        for (int c = 0; c < 3; ++c)
            img.data[3 * i + c] = (*color)[c];
    }
    return img;
}

namespace {

MeanStd mean_std(const std::vector<double>& xs)
{
    MeanStd out;
    if (xs.empty())
        return out;
    for (double x : xs)
        out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs)
            ss += (x - out.mean) * (x - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return out;
}

} // namespace

F1Report summarize(std::vector<F1Entry> entries)
{
    F1Report r;
    r.entries = std::move(entries);
    std::vector<double> p, rec, f;
    for (const F1Entry& e : r.entries) {
        p.push_back(e.score.precision);
        rec.push_back(e.score.recall);
        f.push_back(e.score.f1);
    }
    r.precision = mean_std(p);
    r.recall = mean_std(rec);
    r.f1 = mean_std(f);
    return r;
}

std::string report_csv(const F1Report& report)
{
    std::string out = "frame,camera,tp,fp,fn,tn,precision,recall,f1\n";
    for (const F1Entry& e : report.entries)
        out += fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f}\n", e.frame, e.camera, e.counts.tp, e.counts.fp, e.counts.fn,
                           e.counts.tn, e.score.precision, e.score.recall, e.score.f1);
    out += fmt::format("summary,all,,,,,{:.6f} ± {:.6f},{:.6f} ± {:.6f},{:.6f} ± {:.6f}\n", report.precision.mean, report.precision.std,
                       report.recall.mean, report.recall.std, report.f1.mean, report.f1.std);
    return out;
}

std::string overlay_filename(int camera, int frame) { return fmt::format("overlay_cam{:02d}_frame{:04d}.png", camera, frame); }

} // namespace capture
