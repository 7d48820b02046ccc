#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "parquetry/raster.hpp"

namespace testing_support {

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("parquetry_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline parquetry::Image random_gray(int w, int h, std::mt19937& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    parquetry::Image img(w, h, 1);
    for (auto& v : img.data) v = u(rng);
    return img;
}

inline parquetry::Image vertical_step(int w, int h, int step_col, float lo = 0.0f, float hi = 1.0f) {
    parquetry::Image img(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = x < step_col ? lo : hi;
    return img;
}

}  // namespace testing_support
