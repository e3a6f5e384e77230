#include "medit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace medit {

namespace {

struct Rgb {
    unsigned char r, g, b;
};

Rgb label_color(int label, int classes) {
    // low similarity (label 0) red, high similarity (label K-1) blue
    const double t = classes > 1 ? static_cast<double>(label) / (classes - 1) : 1.0;
    return Rgb{static_cast<unsigned char>(220 - 170 * t), static_cast<unsigned char>(60 + 40 * t),
               static_cast<unsigned char>(60 + 170 * t)};
}

}  // namespace

void write_curve_plot(const SimilarityCurve& curve, int classes, const std::string& path) {
    const int frames = static_cast<int>(curve.normalized.size());
    if (frames < 1) throw InputError("plot: empty curve");
    const int px_per_frame = std::clamp(480 / frames, 2, 16);
    const int width = frames * px_per_frame;
    const int plot_h = 120;
    const int strip_h = 14;
    const int height = plot_h + strip_h;

    std::vector<Rgb> img(static_cast<std::size_t>(width * height));
    auto at = [&](int x, int y) -> Rgb& { return img[static_cast<std::size_t>(y * width + x)]; };

    // class bands as alternating background shades
    for (int y = 0; y < plot_h; ++y) {
        const double value = 1.0 - static_cast<double>(y) / (plot_h - 1);
        const int band = std::min(static_cast<int>(value * classes), classes - 1);
        const unsigned char shade = band % 2 == 0 ? 245 : 232;
        for (int x = 0; x < width; ++x) at(x, y) = Rgb{shade, shade, shade};
    }

    auto y_of = [&](double value) {
        return std::clamp(static_cast<int>(std::lround((1.0 - value) * (plot_h - 1))), 0,
                          plot_h - 1);
    };

    // normalized curve as connected vertical segments
    for (int i = 0; i < frames; ++i) {
        const int x0 = i * px_per_frame;
        const int y0 = y_of(curve.normalized[i]);
        const int y1 = i + 1 < frames ? y_of(curve.normalized[i + 1]) : y0;
        for (int x = x0; x < x0 + px_per_frame && x < width; ++x) {
            const double f = px_per_frame > 1
                                 ? static_cast<double>(x - x0) / px_per_frame
                                 : 0.0;
            const int y = static_cast<int>(std::lround(y0 + f * (y1 - y0)));
            for (int dy = -1; dy <= 1; ++dy) {
                const int yy = std::clamp(y + dy, 0, plot_h - 1);
                at(x, yy) = Rgb{30, 30, 30};
            }
        }
    }

    // label strip
    for (int i = 0; i < frames; ++i) {
        const Rgb c = label_color(curve.labels[static_cast<std::size_t>(i)], classes);
        for (int x = i * px_per_frame; x < (i + 1) * px_per_frame && x < width; ++x)
            for (int y = plot_h; y < height; ++y) at(x, y) = c;
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("plot: cannot open '" + path + "' for writing");
    out << "P6\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data()),
              static_cast<std::streamsize>(img.size() * sizeof(Rgb)));
    if (!out) throw IoError("plot: write failed for '" + path + "'");
}

}  // namespace medit
