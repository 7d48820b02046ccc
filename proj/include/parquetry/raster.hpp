#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace parquetry {

// Pixel values are normalized to [0,1]; multi-channel data is interleaved.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    double dpi = 300.0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.0f, double dpi_ = 300.0);

    float& at(int x, int y, int c = 0) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    float at(int x, int y, int c = 0) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
    bool same_size(int w, int h) const { return width == w && height == h; }
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false);

    bool get(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    // Out-of-bounds reads as false.
    bool get_or_false(int x, int y) const { return inside(x, y) && get(x, y); }
    size_t count() const;
    bool any() const { return count() > 0; }
};

struct ScalarField {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(int w, int h, double fill = 0.0);

    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    // Replicate-border read.
    double clamped(int x, int y) const;
    // Bilinear sample with pixel centers at integer coordinates, replicate border.
    double sample(double x, double y) const;
    double max_value() const;
};

ScalarField to_field(const Image& gray);
Image to_image(const ScalarField& f, double dpi = 300.0);

// Rec.601 luma, clamped to [0,1]. A 1-channel input is returned unchanged.
Image to_grayscale(const Image& img);

// Gradient magnitude of the 3x3 Sobel pair, replicate border, scaled by
// 1/(4*sqrt(2)) so a [0,1] image yields responses in [0,1].
ScalarField sobel_magnitude(const Image& gray);
ScalarField sobel_magnitude(const ScalarField& gray);

// Exact Euclidean distance to the nearest true pixel (lower-envelope method).
// An all-false mask yields no_seed_distance(mask) everywhere.
ScalarField distance_transform(const BinaryMask& mask);
double no_seed_distance(const BinaryMask& mask);

// Gaussian pre-smoothing (sigma 1.4), Sobel, non-maximum suppression and
// hysteresis. Thresholds are on the normalized Sobel magnitude.
BinaryMask canny(const Image& gray, double lo, double hi);

int gaussian_radius(double sigma);
Image gaussian_blur(const Image& img, double sigma);
ScalarField gaussian_blur(const ScalarField& f, double sigma);
// Mean over a size x size window (size odd), replicate border.
ScalarField box_blur(const ScalarField& f, int size);

enum class BilateralMethod { Auto, Direct, Separable };

// Images at or below this pixel count take the direct path under Auto.
inline constexpr size_t kDirectBilateralLimit = 64 * 64;

Image smooth_bilateral(const Image& img, double sigma_space, double sigma_range,
                       BilateralMethod method = BilateralMethod::Auto);
// Bilateral weights taken from `guide`, values averaged from `img`.
Image joint_bilateral(const Image& img, const Image& guide, double sigma_space, double sigma_range,
                      BilateralMethod method = BilateralMethod::Auto);
Image smooth_rolling_guidance(const Image& img, double sigma_space, double sigma_range, int n_iter,
                              BilateralMethod method = BilateralMethod::Auto);

// Morphology with a (2r+1)x(2r+1) square structuring element. Erosion treats
// pixels outside the mask as false.
BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);

// Area averaging when shrinking, bicubic when enlarging; dpi scales along.
Image resize_image(const Image& img, int width, int height);
// Nearest pixel-centre sampling.
BinaryMask resize_mask(const BinaryMask& m, int width, int height);

// PNG/JPEG/TIFF input, 8 or 16 bit, scaled to [0,1]. Alpha is dropped.
Image load_image(const std::filesystem::path& path, double dpi = 300.0);
// 8-bit PNG output (values rounded).
void save_image(const std::filesystem::path& path, const Image& img);
// Masks use 0/255 semantics; any nonzero value is true.
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const BinaryMask& m);
// Encodes to/decodes from an in-memory PNG byte buffer.
std::vector<unsigned char> encode_png(const Image& img);
std::vector<unsigned char> encode_png(const BinaryMask& m);
Image decode_image(std::span<const unsigned char> bytes, double dpi = 300.0);
BinaryMask decode_mask(std::span<const unsigned char> bytes);
// 32-bit float TIFF, single channel.
void save_float_tiff(const std::filesystem::path& path, const ScalarField& f);
ScalarField load_float_tiff(const std::filesystem::path& path);

}  // namespace parquetry
