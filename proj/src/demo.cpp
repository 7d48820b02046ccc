#include "parquetry/demo.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace parquetry {

Config demo_config(const DemoOptions& opt) {
    Config c;
    c.dpi = 50.8;  // 2 px per mm
    c.s_image = opt.target_size / 2.0;
    c.s_patch = 5.0;
    c.n_rot = 4;
    return c;
}

Image demo_target(int size) {
    Image img(size, size, 3);
    const double c = size / 2.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double r = std::hypot(x + 0.5 - c, y + 0.5 - c) / c;
            double v = 0.35 + 0.45 * (x + 0.5) / size;
            if (r < 0.45) v = 0.2 + 0.1 * r;
            if (((x + y) / 6) % 2 == 0 && r > 0.7) v += 0.15;
            v = std::clamp(v, 0.0, 1.0);
            img.at(x, y, 0) = static_cast<float>(v);
            img.at(x, y, 1) = static_cast<float>(0.85 * v);
            img.at(x, y, 2) = static_cast<float>(0.65 * v);
        }
    return img;
}

Image demo_panel(int width, int height, int index, unsigned seed) {
    std::mt19937 rng(seed + 977u * static_cast<unsigned>(index));
    Image img(width, height, 3);
    const double angle = 0.35 + 0.9 * index;
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double tone = 0.3 + 0.45 * ((index * 37) % 10) / 9.0;
    const double period = 5.0 + index % 3;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double u = x * ca + y * sa;
            const double w = -x * sa + y * ca;
            const double noise = (rng() % 2001) / 2000.0 - 0.5;
            double v = tone + 0.18 * std::sin(2 * std::numbers::pi * (u + 2.5 * std::sin(w / 9.0)) / period) +
                       0.1 * (w / std::max(width, height) - 0.5) + 0.04 * noise;
            v = std::clamp(v, 0.0, 1.0);
            img.at(x, y, 0) = static_cast<float>(v);
            img.at(x, y, 1) = static_cast<float>(0.8 * v);
            img.at(x, y, 2) = static_cast<float>(0.55 * v);
        }
    return img;
}

BinaryMask demo_panel_mask(int width, int height, int index) {
    BinaryMask m(width, height, true);
    if (index % 2 == 1) {
        const double cx = width * 0.6, cy = height * 0.4, r = std::min(width, height) * 0.08;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) < r) m.set(x, y, false);
    }
    return m;
}

void write_demo_project(const std::filesystem::path& dir, const DemoOptions& opt) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "targets");
    save_image(dir / "targets" / "demo.png", demo_target(opt.target_size));
    for (int k = 0; k < opt.panels; ++k) {
        const fs::path p = dir / "sources" / ("panel" + std::to_string(k + 1));
        fs::create_directories(p);
        save_image(p / "image.png", demo_panel(opt.panel_size, opt.panel_size, k, opt.seed));
        save_mask(p / "mask.png", demo_panel_mask(opt.panel_size, opt.panel_size, k));
    }
    save_config(demo_config(opt), dir / "config.txt");
}

}  // namespace parquetry
