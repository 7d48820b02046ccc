#include "parquetry/raster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "parquetry/error.hpp"

namespace parquetry {

Image::Image(int w, int h, int c, float fill, double dpi_)
    : width(w), height(h), channels(c), dpi(dpi_), data(static_cast<size_t>(w) * h * c, fill) {}

BinaryMask::BinaryMask(int w, int h, bool fill)
    : width(w), height(h), bits(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

size_t BinaryMask::count() const {
    return static_cast<size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

ScalarField::ScalarField(int w, int h, double fill) : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

double ScalarField::clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y);
}

double ScalarField::sample(double x, double y) const {
    const double fx = std::floor(x), fy = std::floor(y);
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    const double ax = x - fx, ay = y - fy;
    const double v00 = clamped(x0, y0), v10 = clamped(x0 + 1, y0);
    const double v01 = clamped(x0, y0 + 1), v11 = clamped(x0 + 1, y0 + 1);
    return (1 - ay) * ((1 - ax) * v00 + ax * v10) + ay * ((1 - ax) * v01 + ax * v11);
}

double ScalarField::max_value() const {
    if (values.empty()) return 0.0;
    return *std::max_element(values.begin(), values.end());
}

ScalarField to_field(const Image& gray) {
    ScalarField f(gray.width, gray.height);
    for (size_t i = 0; i < gray.pixel_count(); ++i) f.values[i] = gray.data[i * gray.channels];
    return f;
}

Image to_image(const ScalarField& f, double dpi) {
    Image img(f.width, f.height, 1, 0.0f, dpi);
    for (size_t i = 0; i < f.values.size(); ++i) img.data[i] = static_cast<float>(std::clamp(f.values[i], 0.0, 1.0));
    return img;
}

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) throw InputError("to_grayscale expects 1 or 3 channels");
    Image out(img.width, img.height, 1, 0.0f, img.dpi);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        const float* p = &img.data[i * 3];
        const double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        out.data[i] = static_cast<float>(std::clamp(luma, 0.0, 1.0));
    }
    return out;
}

ScalarField sobel_magnitude(const ScalarField& g) {
    static const double kScale = 1.0 / (4.0 * std::sqrt(2.0));
    ScalarField out(g.width, g.height);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const double a = g.clamped(x - 1, y - 1), b = g.clamped(x, y - 1), c = g.clamped(x + 1, y - 1);
            const double d = g.clamped(x - 1, y), f = g.clamped(x + 1, y);
            const double h = g.clamped(x - 1, y + 1), i = g.clamped(x, y + 1), j = g.clamped(x + 1, y + 1);
            const double gx = (c + 2 * f + j) - (a + 2 * d + h);
            const double gy = (h + 2 * i + j) - (a + 2 * b + c);
            out.at(x, y) = std::sqrt(gx * gx + gy * gy) * kScale;
        }
    }
    return out;
}

ScalarField sobel_magnitude(const Image& gray) {
    if (gray.channels != 1) throw InputError("sobel_magnitude expects a 1-channel image");
    return sobel_magnitude(to_field(gray));
}

namespace {

// 1-D squared distance transform of a sampled function (lower envelope of parabolas).
void dt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    const double inf = std::numeric_limits<double>::infinity();
    int k = 0;
    v[0] = 0;
    z[0] = -inf;
    z[1] = inf;
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

double no_seed_distance(const BinaryMask& mask) { return 2.0 * std::max(mask.width, mask.height) + 1.0; }

ScalarField distance_transform(const BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    ScalarField out(w, h);
    if (!mask.any()) {
        std::fill(out.values.begin(), out.values.end(), no_seed_distance(mask));
        return out;
    }
    // Large but finite so the parabola intersections stay well defined.
    const double big = 1e20;
    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    std::vector<double> sq(static_cast<size_t>(w) * h);
    for (int x = 0; x < w; ++x) {
        f.resize(h);
        d.resize(h);
        for (int y = 0; y < h; ++y) f[y] = mask.get(x, y) ? 0.0 : big;
        dt_1d(f, d, v, z);
        for (int y = 0; y < h; ++y) sq[static_cast<size_t>(y) * w + x] = d[y];
    }
    for (int y = 0; y < h; ++y) {
        f.resize(w);
        d.resize(w);
        for (int x = 0; x < w; ++x) f[x] = sq[static_cast<size_t>(y) * w + x];
        dt_1d(f, d, v, z);
        for (int x = 0; x < w; ++x) out.at(x, y) = std::sqrt(d[x]);
    }
    return out;
}

int gaussian_radius(double sigma) { return std::max(1, static_cast<int>(std::ceil(3.0 * sigma))); }

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int r = gaussian_radius(sigma);
    std::vector<double> k(2 * r + 1);
    double sum = 0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + r];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable convolution of one channel with a symmetric kernel, replicate border.
ScalarField convolve_separable(const ScalarField& f, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size() / 2);
    ScalarField tmp(f.width, f.height), out(f.width, f.height);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double s = 0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * f.clamped(x + i, y);
            tmp.at(x, y) = s;
        }
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double s = 0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * tmp.clamped(x, y + i);
            out.at(x, y) = s;
        }
    return out;
}

ScalarField channel(const Image& img, int c) {
    ScalarField f(img.width, img.height);
    for (size_t i = 0; i < img.pixel_count(); ++i) f.values[i] = img.data[i * img.channels + c];
    return f;
}

void set_channel(Image& img, int c, const ScalarField& f) {
    for (size_t i = 0; i < img.pixel_count(); ++i) img.data[i * img.channels + c] = static_cast<float>(f.values[i]);
}

}  // namespace

ScalarField gaussian_blur(const ScalarField& f, double sigma) {
    if (!(sigma > 0)) throw InputError("gaussian sigma must be positive");
    return convolve_separable(f, gaussian_kernel(sigma));
}

Image gaussian_blur(const Image& img, double sigma) {
    Image out(img.width, img.height, img.channels, 0.0f, img.dpi);
    for (int c = 0; c < img.channels; ++c) set_channel(out, c, gaussian_blur(channel(img, c), sigma));
    return out;
}

ScalarField box_blur(const ScalarField& f, int size) {
    if (size < 1 || size % 2 == 0) throw InputError("box size must be odd and positive");
    return convolve_separable(f, std::vector<double>(size, 1.0 / size));
}

namespace {

// Drops corner pixels of 4-connected staircases: a pixel whose two set
// 4-neighbours are perpendicular and already touch diagonally, provided its
// other neighbours stay connected without it.
void skeletonize(BinaryMask& m) {
    static const int dx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    static const int dy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (!m.get(x, y)) continue;
            bool n[8];
            for (int k = 0; k < 8; ++k) n[k] = m.get_or_false(x + dx[k], y + dy[k]);
            const int four = n[0] + n[2] + n[4] + n[6];
            if (four != 2 || (n[0] && n[4]) || (n[2] && n[6])) continue;
            // The diagonal between the two 4-neighbours must be empty.
            int corner = -1;
            for (int k = 1; k < 8; k += 2)
                if (n[k - 1] && n[(k + 1) % 8]) corner = k;
            if (corner < 0 || n[corner]) continue;
            // Neighbours must form one 8-connected group once the pixel is gone.
            int seen = 0, groups = 0;
            for (int k = 0; k < 8; ++k) {
                if (!n[k] || (seen >> k & 1)) continue;
                ++groups;
                std::vector<int> stack{k};
                seen |= 1 << k;
                while (!stack.empty()) {
                    const int c = stack.back();
                    stack.pop_back();
                    for (int j = 0; j < 8; ++j)
                        if (n[j] && !(seen >> j & 1) && std::abs(dx[j] - dx[c]) <= 1 && std::abs(dy[j] - dy[c]) <= 1) {
                            seen |= 1 << j;
                            stack.push_back(j);
                        }
                }
            }
            if (groups == 1) m.set(x, y, false);
        }
}

}  // namespace

BinaryMask canny(const Image& gray, double lo, double hi) {
    if (!(lo >= 0 && lo <= hi && hi <= 1)) throw InputError("canny thresholds must satisfy 0 <= lo <= hi <= 1");
    if (gray.channels != 1) throw InputError("canny expects a 1-channel image");
    const int w = gray.width, h = gray.height;
    const ScalarField g = gaussian_blur(to_field(gray), 1.4);
    static const double kScale = 1.0 / (4.0 * std::sqrt(2.0));
    ScalarField gx(w, h), gy(w, h), mag(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double a = g.clamped(x - 1, y - 1), b = g.clamped(x, y - 1), c = g.clamped(x + 1, y - 1);
            const double d = g.clamped(x - 1, y), f = g.clamped(x + 1, y);
            const double p = g.clamped(x - 1, y + 1), i = g.clamped(x, y + 1), j = g.clamped(x + 1, y + 1);
            gx.at(x, y) = (c + 2 * f + j) - (a + 2 * d + p);
            gy.at(x, y) = (p + 2 * i + j) - (a + 2 * b + c);
            mag.at(x, y) = std::sqrt(gx.at(x, y) * gx.at(x, y) + gy.at(x, y) * gy.at(x, y)) * kScale;
        }
    auto mag_or_zero = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag.at(x, y); };

    // Non-maximum suppression; strict against the neighbor behind, non-strict
    // ahead, so plateaus two pixels wide thin to one.
    BinaryMask thin(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double m = mag.at(x, y);
            if (m <= 0) continue;
            double angle = std::atan2(gy.at(x, y), gx.at(x, y)) * 180.0 / M_PI;
            if (angle < 0) angle += 180.0;
            int dx, dy;
            if (angle < 22.5 || angle >= 157.5) { dx = 1; dy = 0; }
            else if (angle < 67.5) { dx = 1; dy = 1; }
            else if (angle < 112.5) { dx = 0; dy = 1; }
            else { dx = -1; dy = 1; }
            if (m > mag_or_zero(x - dx, y - dy) && m >= mag_or_zero(x + dx, y + dy)) thin.set(x, y, true);
        }

    BinaryMask out(w, h);
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (thin.get(x, y) && mag.at(x, y) >= hi) {
                out.set(x, y, true);
                queue.emplace_back(x, y);
            }
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (!out.inside(nx, ny) || out.get(nx, ny)) continue;
                if (thin.get(nx, ny) && mag.at(nx, ny) >= lo) {
                    out.set(nx, ny, true);
                    queue.emplace_back(nx, ny);
                }
            }
    }
    skeletonize(out);
    return out;
}

namespace {

double range_weight(double dist2, double sigma_range) {
    if (std::isinf(sigma_range)) return 1.0;
    return std::exp(-dist2 / (2.0 * sigma_range * sigma_range));
}

Image joint_bilateral_direct(const Image& img, const Image& guide, double ss, double sr) {
    const int r = gaussian_radius(ss);
    const int w = img.width, h = img.height, nc = img.channels, gc = guide.channels;
    std::vector<double> spatial(static_cast<size_t>(2 * r + 1) * (2 * r + 1));
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            spatial[(dy + r) * (2 * r + 1) + dx + r] = std::exp(-(dx * dx + dy * dy) / (2.0 * ss * ss));
    Image out(w, h, nc, 0.0f, img.dpi);
    std::vector<double> acc(nc);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            double norm = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const int qy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int qx = std::clamp(x + dx, 0, w - 1);
                    double d2 = 0;
                    for (int c = 0; c < gc; ++c) {
                        const double d = guide.at(qx, qy, c) - guide.at(x, y, c);
                        d2 += d * d;
                    }
                    const double wgt = spatial[(dy + r) * (2 * r + 1) + dx + r] * range_weight(d2, sr);
                    norm += wgt;
                    for (int c = 0; c < nc; ++c) acc[c] += wgt * img.at(qx, qy, c);
                }
            }
            for (int c = 0; c < nc; ++c) out.at(x, y, c) = static_cast<float>(acc[c] / norm);
        }
    return out;
}

// One 1-D bilateral pass along x (horizontal) or y.
Image bilateral_pass(const Image& img, const Image& guide, double ss, double sr, bool horizontal) {
    const int r = gaussian_radius(ss);
    const int w = img.width, h = img.height, nc = img.channels, gc = guide.channels;
    std::vector<double> spatial(2 * r + 1);
    for (int i = -r; i <= r; ++i) spatial[i + r] = std::exp(-(i * i) / (2.0 * ss * ss));
    Image out(w, h, nc, 0.0f, img.dpi);
    std::vector<double> acc(nc);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            double norm = 0;
            for (int i = -r; i <= r; ++i) {
                const int qx = horizontal ? std::clamp(x + i, 0, w - 1) : x;
                const int qy = horizontal ? y : std::clamp(y + i, 0, h - 1);
                double d2 = 0;
                for (int c = 0; c < gc; ++c) {
                    const double d = guide.at(qx, qy, c) - guide.at(x, y, c);
                    d2 += d * d;
                }
                const double wgt = spatial[i + r] * range_weight(d2, sr);
                norm += wgt;
                for (int c = 0; c < nc; ++c) acc[c] += wgt * img.at(qx, qy, c);
            }
            for (int c = 0; c < nc; ++c) out.at(x, y, c) = static_cast<float>(acc[c] / norm);
        }
    return out;
}

}  // namespace

Image joint_bilateral(const Image& img, const Image& guide, double sigma_space, double sigma_range,
                      BilateralMethod method) {
    if (!(sigma_space > 0) || !(sigma_range > 0)) throw InputError("bilateral sigmas must be positive");
    if (img.width != guide.width || img.height != guide.height) throw InputError("guide size mismatch");
    if (method == BilateralMethod::Auto)
        method = img.pixel_count() <= kDirectBilateralLimit ? BilateralMethod::Direct : BilateralMethod::Separable;
    if (method == BilateralMethod::Direct) return joint_bilateral_direct(img, guide, sigma_space, sigma_range);
    // Separable approximation, both pass orders averaged so neither axis is
    // favoured.
    const Image xy = bilateral_pass(bilateral_pass(img, guide, sigma_space, sigma_range, true), guide, sigma_space,
                                    sigma_range, false);
    Image out = bilateral_pass(bilateral_pass(img, guide, sigma_space, sigma_range, false), guide, sigma_space,
                               sigma_range, true);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = 0.5f * (out.data[i] + xy.data[i]);
    return out;
}

Image smooth_bilateral(const Image& img, double sigma_space, double sigma_range, BilateralMethod method) {
    return joint_bilateral(img, img, sigma_space, sigma_range, method);
}

Image smooth_rolling_guidance(const Image& img, double sigma_space, double sigma_range, int n_iter,
                              BilateralMethod method) {
    if (n_iter < 1) throw InputError("rolling guidance needs at least one iteration");
    Image guide = gaussian_blur(img, sigma_space);
    for (int i = 0; i < n_iter; ++i) guide = joint_bilateral(img, guide, sigma_space, sigma_range, method);
    return guide;
}

BinaryMask dilate(const BinaryMask& m, int radius) {
    if (radius <= 0) return m;
    const int w = m.width, h = m.height;
    BinaryMask tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool v = false;
            for (int i = std::max(0, x - radius); i <= std::min(w - 1, x + radius) && !v; ++i) v = m.get(i, y);
            tmp.set(x, y, v);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool v = false;
            for (int i = std::max(0, y - radius); i <= std::min(h - 1, y + radius) && !v; ++i) v = tmp.get(x, i);
            out.set(x, y, v);
        }
    return out;
}

BinaryMask erode(const BinaryMask& m, int radius) {
    if (radius <= 0) return m;
    const int w = m.width, h = m.height;
    BinaryMask tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool v = true;
            for (int i = x - radius; i <= x + radius && v; ++i) v = m.get_or_false(i, y);
            tmp.set(x, y, v);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool v = true;
            for (int i = y - radius; i <= y + radius && v; ++i) v = tmp.get_or_false(x, i);
            out.set(x, y, v);
        }
    return out;
}

namespace {

Image from_mat(const cv::Mat& raw, double dpi) {
    if (raw.empty()) throw InputError("could not decode image");
    cv::Mat m = raw;
    double scale = 1.0;
    switch (m.depth()) {
        case CV_8U: scale = 1.0 / 255.0; break;
        case CV_16U: scale = 1.0 / 65535.0; break;
        case CV_32F: case CV_64F: scale = 1.0; break;
        default: throw InputError("unsupported image bit depth");
    }
    if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
    if (m.channels() == 2) throw InputError("two-channel images are not supported");
    if (m.channels() == 3) cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
    cv::Mat f;
    m.convertTo(f, CV_MAKETYPE(CV_32F, m.channels()), scale);
    Image img(f.cols, f.rows, f.channels(), 0.0f, dpi);
    for (int y = 0; y < f.rows; ++y) {
        const float* row = f.ptr<float>(y);
        for (int x = 0; x < f.cols * f.channels(); ++x)
            img.data[static_cast<size_t>(y) * f.cols * f.channels() + x] = std::clamp(row[x], 0.0f, 1.0f);
    }
    return img;
}

cv::Mat to_mat8(const Image& img) {
    cv::Mat m(img.height, img.width, CV_MAKETYPE(CV_8U, img.channels));
    for (int y = 0; y < img.height; ++y) {
        auto* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < img.width * img.channels; ++x) {
            const float v = img.data[static_cast<size_t>(y) * img.width * img.channels + x];
            row[x] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        }
    }
    if (img.channels == 3) cv::cvtColor(m, m, cv::COLOR_RGB2BGR);
    return m;
}

cv::Mat mask_to_mat(const BinaryMask& mask) {
    cv::Mat m(mask.height, mask.width, CV_8U);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) m.at<unsigned char>(y, x) = mask.get(x, y) ? 255 : 0;
    return m;
}

BinaryMask mask_from_mat(const cv::Mat& raw) {
    if (raw.empty()) throw InputError("could not decode mask");
    cv::Mat m = raw;
    if (m.channels() > 1) cv::extractChannel(m, m, 0);
    BinaryMask out(m.cols, m.rows);
    cv::Mat u;
    m.convertTo(u, CV_32F);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) out.set(x, y, u.at<float>(y, x) != 0.0f);
    return out;
}

void ensure_parent(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

}  // namespace

Image load_image(const std::filesystem::path& path, double dpi) {
    const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw InputError("cannot read image: " + path.string());
    return from_mat(raw, dpi);
}

void save_image(const std::filesystem::path& path, const Image& img) {
    ensure_parent(path);
    if (!cv::imwrite(path.string(), to_mat8(img))) throw InputError("cannot write image: " + path.string());
}

BinaryMask load_mask(const std::filesystem::path& path) {
    const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw InputError("cannot read mask: " + path.string());
    return mask_from_mat(raw);
}

void save_mask(const std::filesystem::path& path, const BinaryMask& m) {
    ensure_parent(path);
    if (!cv::imwrite(path.string(), mask_to_mat(m))) throw InputError("cannot write mask: " + path.string());
}

std::vector<unsigned char> encode_png(const Image& img) {
    std::vector<unsigned char> buf;
    cv::imencode(".png", to_mat8(img), buf);
    return buf;
}

std::vector<unsigned char> encode_png(const BinaryMask& m) {
    std::vector<unsigned char> buf;
    cv::imencode(".png", mask_to_mat(m), buf);
    return buf;
}

Image decode_image(std::span<const unsigned char> bytes, double dpi) {
    if (bytes.empty()) throw InputError("empty image payload");
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<unsigned char*>(bytes.data()));
    return from_mat(cv::imdecode(buf, cv::IMREAD_UNCHANGED), dpi);
}

BinaryMask decode_mask(std::span<const unsigned char> bytes) {
    if (bytes.empty()) throw InputError("empty mask payload");
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<unsigned char*>(bytes.data()));
    return mask_from_mat(cv::imdecode(buf, cv::IMREAD_UNCHANGED));
}

void save_float_tiff(const std::filesystem::path& path, const ScalarField& f) {
    ensure_parent(path);
    cv::Mat m(f.height, f.width, CV_32F);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) m.at<float>(y, x) = static_cast<float>(f.at(x, y));
    if (!cv::imwrite(path.string(), m)) throw InputError("cannot write tiff: " + path.string());
}

ScalarField load_float_tiff(const std::filesystem::path& path) {
    const cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty() || m.type() != CV_32F) throw InputError("cannot read float tiff: " + path.string());
    ScalarField f(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) f.at(x, y) = m.at<float>(y, x);
    return f;
}

Image resize_image(const Image& img, int w, int h) {
    if (w < 1 || h < 1) throw InputError("resize target must be at least 1x1");
    if (img.width == w && img.height == h) return img;
    cv::Mat src(img.height, img.width, CV_32FC(img.channels), const_cast<float*>(img.data.data()));
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(w, h), 0, 0, w < img.width ? cv::INTER_AREA : cv::INTER_CUBIC);
    Image out(w, h, img.channels, 0.0f, img.dpi * static_cast<double>(w) / img.width);
    const float* d = dst.ptr<float>(0);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::clamp(d[i], 0.0f, 1.0f);
    return out;
}

BinaryMask resize_mask(const BinaryMask& m, int w, int h) {
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.set(x, y, m.get(std::min(m.width - 1, static_cast<int>((x + 0.5) * m.width / w)),
                                std::min(m.height - 1, static_cast<int>((y + 0.5) * m.height / h))));
    return out;
}

}  // namespace parquetry
