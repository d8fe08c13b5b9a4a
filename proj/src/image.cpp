#include "capture/image.hpp"

#include "capture/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace capture {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path)
{
    if (!fs::exists(path) || !fs::is_regular_file(path))
        throw MissingFile("image not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingFile("cannot open image: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_png(const std::vector<std::uint8_t>& bytes)
{
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

// Decodes into 8-bit RGBA.
std::vector<std::uint8_t> decode_png(const std::vector<std::uint8_t>& bytes, const fs::path& path, int& width, int& height)
{
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw CorruptData("corrupt PNG " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw CorruptData("corrupt PNG " + path.string() + ": " + msg);
    }
    width = static_cast<int>(image.width);
    height = static_cast<int>(image.height);
    return buffer;
}

// Binary PPM (P6), maxval <= 255.
ImageFrame decode_ppm(const std::vector<std::uint8_t>& bytes, const fs::path& path)
{
    size_t pos = 2;
    auto next_token = [&]() -> long {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw CorruptData("corrupt PPM header in " + path.string());
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > (1L << 24))
                throw CorruptData("PPM header value out of range in " + path.string());
            ++pos;
        }
        return v;
    };
    const long w = next_token();
    const long h = next_token();
    const long maxval = next_token();
    if (w <= 0 || h <= 0 || maxval <= 0)
        throw CorruptData("invalid PPM dimensions in " + path.string());
    if (maxval > 255)
        throw UnsupportedFormat("16-bit PPM is not supported: " + path.string());
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw CorruptData("corrupt PPM header in " + path.string());
    ++pos;
    const size_t need = static_cast<size_t>(w) * static_cast<size_t>(h) * 3;
    if (bytes.size() - pos < need)
        throw CorruptData("truncated PPM pixel data in " + path.string());

    ImageFrame frame;
    frame.width = static_cast<int>(w);
    frame.height = static_cast<int>(h);
    frame.pixels.resize(static_cast<size_t>(w) * h);
    const double scale = 1.0 / static_cast<double>(maxval);
    for (size_t i = 0; i < frame.pixels.size(); ++i) {
        for (int c = 0; c < 3; ++c)
            frame.pixels[i][c] = std::min(1.0, bytes[pos + 3 * i + c] * scale);
    }
    return frame;
}

} // namespace

ImageFrame load_frame(const fs::path& path)
{
    const auto bytes = read_bytes(path);
    if (is_png(bytes)) {
        int w = 0;
        int h = 0;
        const auto rgba = decode_png(bytes, path, w, h);
        ImageFrame frame;
        frame.width = w;
        frame.height = h;
        frame.pixels.resize(static_cast<size_t>(w) * h);
        for (size_t i = 0; i < frame.pixels.size(); ++i)
            for (int c = 0; c < 3; ++c)
                frame.pixels[i][c] = rgba[4 * i + c] / 255.0;
        return frame;
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
        return decode_ppm(bytes, path);
    throw UnsupportedFormat("unsupported image format: " + path.string());
}

std::vector<std::uint8_t> load_mask_png(const fs::path& path, int& width, int& height)
{
    const auto bytes = read_bytes(path);
    if (!is_png(bytes))
        throw UnsupportedFormat("mask is not a PNG: " + path.string());
    const auto rgba = decode_png(bytes, path, width, height);
    std::vector<std::uint8_t> mask(static_cast<size_t>(width) * height);
    for (size_t i = 0; i < mask.size(); ++i)
        mask[i] = (rgba[4 * i] | rgba[4 * i + 1] | rgba[4 * i + 2]) != 0 ? 1 : 0;
    return mask;
}

void write_png(const fs::path& path, const Rgb8Image& image)
{
    if (image.data.size() != static_cast<size_t>(image.width) * image.height * 3)
        throw InvalidInput("image buffer size does not match its extent");
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0, nullptr))
        throw Error("failed to write PNG " + path.string() + ": " + png.message);
}

void write_mask_png(const fs::path& path, const std::vector<std::uint8_t>& mask, int width, int height)
{
    if (mask.size() != static_cast<size_t>(width) * height)
        throw InvalidInput("mask size does not match its extent");
    Rgb8Image img;
    img.width = width;
    img.height = height;
    img.data.resize(mask.size() * 3);
    for (size_t i = 0; i < mask.size(); ++i) {
        const std::uint8_t v = mask[i] ? 255 : 0;
        img.data[3 * i] = img.data[3 * i + 1] = img.data[3 * i + 2] = v;
    }
    write_png(path, img);
}

Rgb8Image to_rgb8(const ImageFrame& frame)
{
    Rgb8Image img;
    img.width = frame.width;
    img.height = frame.height;
    img.data.resize(frame.pixels.size() * 3);
    for (size_t i = 0; i < frame.pixels.size(); ++i)
        for (int c = 0; c < 3; ++c)
            img.data[3 * i + c] = static_cast<std::uint8_t>(std::lround(std::clamp(frame.pixels[i][c], 0.0, 1.0) * 255.0));
    return img;
}

ColorHSV rgb_to_hsv(const Rgb& rgb)
{
    for (double c : rgb) {
        if (!std::isfinite(c) || c < 0.0 || c > 1.0)
            throw InvalidInput("RGB component outside [0, 1]");
    }
    const double r = rgb[0];
    const double g = rgb[1];
    const double b = rgb[2];
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double chroma = mx - mn;

    ColorHSV out;
    out.v = mx;
    out.s = mx > 0.0 ? chroma / mx : 0.0;
    if (chroma <= 0.0)
        return out;

    double h = 0.0;
    if (mx == r)
        h = (g - b) / chroma;
    else if (mx == g)
        h = 2.0 + (b - r) / chroma;
    else
        h = 4.0 + (r - g) / chroma;
    h /= 6.0;
    if (h < 0.0)
        h += 1.0;
    if (h >= 1.0)
        h -= 1.0;
    out.h = h;
    return out;
}

Rgb hsv_to_rgb(const ColorHSV& hsv)
{
    double h = hsv.h - std::floor(hsv.h);
    const double s = std::clamp(hsv.s, 0.0, 1.0);
    const double v = std::clamp(hsv.v, 0.0, 1.0);
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp) % 6) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
    }
    const double m = v - c;
    return {r + m, g + m, b + m};
}

namespace {

struct Node {
    int x0, y0, w, h, depth;
};

struct NodeStats {
    Rgb mean{};
    double max_var = 0.0;
};

NodeStats node_stats(const ImageFrame& frame, const Node& n)
{
    Rgb sum{};
    for (int y = n.y0; y < n.y0 + n.h; ++y)
        for (int x = n.x0; x < n.x0 + n.w; ++x) {
            const Rgb& p = frame.at(x, y);
            for (int c = 0; c < 3; ++c)
                sum[c] += p[c];
        }
    const double count = static_cast<double>(n.w) * n.h;
    NodeStats st;
    for (int c = 0; c < 3; ++c)
        st.mean[c] = sum[c] / count;
    Rgb var{};
    for (int y = n.y0; y < n.y0 + n.h; ++y)
        for (int x = n.x0; x < n.x0 + n.w; ++x) {
            const Rgb& p = frame.at(x, y);
            for (int c = 0; c < 3; ++c) {
                const double d = p[c] - st.mean[c];
                var[c] += d * d;
            }
        }
    st.max_var = std::max({var[0], var[1], var[2]}) / count;
    return st;
}

void decompose(const ImageFrame& frame, const QuadTreeParams& params, const Node& n, std::vector<Gaussian2D>& out)
{
    const NodeStats st = node_stats(frame, n);
    const bool can_split = n.depth < params.max_depth && std::min(n.w, n.h) >= 2 * params.min_node_px;
    if (can_split && st.max_var > params.color_var_threshold) {
        const int wl = n.w / 2;
        const int ht = n.h / 2;
        decompose(frame, params, {n.x0, n.y0, wl, ht, n.depth + 1}, out);
        decompose(frame, params, {n.x0 + wl, n.y0, n.w - wl, ht, n.depth + 1}, out);
        decompose(frame, params, {n.x0, n.y0 + ht, wl, n.h - ht, n.depth + 1}, out);
        decompose(frame, params, {n.x0 + wl, n.y0 + ht, n.w - wl, n.h - ht, n.depth + 1}, out);
        return;
    }
    Gaussian2D g;
    g.mu = Eigen::Vector2d(n.x0 + 0.5 * n.w, n.y0 + 0.5 * n.h);
    g.sigma = 0.5 * std::max(n.w, n.h);
    Rgb mean = st.mean;
    for (double& c : mean)
        c = std::clamp(c, 0.0, 1.0);
    g.color = rgb_to_hsv(mean);
    out.push_back(g);
}

} // namespace

ImageGaussianSet quadtree_decompose(const ImageFrame& frame, const QuadTreeParams& params)
{
    if (frame.width <= 0 || frame.height <= 0 || frame.pixels.size() != static_cast<size_t>(frame.width) * frame.height)
        throw InvalidInput("invalid image frame");
    if (params.max_depth < 1 || params.min_node_px < 1 || !(params.color_var_threshold >= 0.0))
        throw InvalidInput("invalid quad-tree parameters");

    ImageGaussianSet set;
    set.camera_id = frame.camera_id;
    set.frame_id = frame.frame_id;
    decompose(frame, params, {0, 0, frame.width, frame.height, 0}, set.gaussians);
    return set;
}

} // namespace capture
