#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>

#include "wdncnn/image_io.hpp"
#include "wdncnn/tensor.hpp"

// Generates the deterministic sample images under data/images. Smooth,
// photographic-looking content (gradients, blobs, low-frequency rings) so
// the wavelet energy concentrates in the LL band the way it does for
// natural photos.

namespace {

using wdncnn::Tensor;

double bump(double y, double x, double cy, double cx, double s) {
    const double dy = y - cy, dx = x - cx;
    return std::exp(-(dy * dy + dx * dx) / (2.0 * s * s));
}

// Affine map of arbitrary real values into [0.1, 0.9].
void normalize(Tensor& t) {
    double lo = t[0], hi = t[0];
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        lo = std::min(lo, t[i]);
        hi = std::max(hi, t[i]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::int64_t i = 0; i < t.numel(); ++i)
        t[i] = 0.1 + 0.8 * (t[i] - lo) / span;
}

Tensor blobs(int h, int w) {
    Tensor t({1, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double fy = static_cast<double>(y) / h;
            const double fx = static_cast<double>(x) / w;
            t.at(0, y, x) = 1.2 * bump(fy, fx, 0.30, 0.25, 0.16) +
                            0.9 * bump(fy, fx, 0.65, 0.70, 0.22) +
                            0.5 * bump(fy, fx, 0.75, 0.20, 0.10) +
                            0.25 * fx;
        }
    normalize(t);
    return t;
}

Tensor gradient_waves(int h, int w) {
    Tensor t({1, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double fy = static_cast<double>(y) / h;
            const double fx = static_cast<double>(x) / w;
            t.at(0, y, x) = 0.6 * (fx + fy) +
                            0.22 * std::sin(2.0 * M_PI * 1.5 * fx) +
                            0.18 * std::cos(2.0 * M_PI * 2.0 * fy);
        }
    normalize(t);
    return t;
}

Tensor rings(int h, int w) {
    Tensor t({1, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dy = (y - 0.5 * h) / h;
            const double dx = (x - 0.5 * w) / w;
            const double r = std::sqrt(dy * dy + dx * dx);
            t.at(0, y, x) = std::cos(2.0 * M_PI * 2.5 * r) * (1.0 - r);
        }
    normalize(t);
    return t;
}

Tensor color_blobs(int h, int w) {
    Tensor t({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double fy = static_cast<double>(y) / h;
            const double fx = static_cast<double>(x) / w;
            t.at(0, y, x) = bump(fy, fx, 0.35, 0.35, 0.20) + 0.3 * fx;
            t.at(1, y, x) = bump(fy, fx, 0.60, 0.55, 0.25) + 0.2 * fy;
            t.at(2, y, x) = bump(fy, fx, 0.45, 0.70, 0.18) +
                            0.15 * (fx + fy);
        }
    normalize(t);
    return t;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <output-dir>\n";
        return 1;
    }
    const std::filesystem::path dir(argv[1]);
    std::filesystem::create_directories(dir);

    wdncnn::write_image((dir / "blobs.pgm").string(), blobs(128, 128));
    wdncnn::write_image((dir / "gradient.pgm").string(),
                        gradient_waves(128, 128));
    wdncnn::write_image((dir / "rings.pgm").string(), rings(128, 128));
    wdncnn::write_image((dir / "odd_blobs.pgm").string(), blobs(97, 111));
    wdncnn::write_image((dir / "color_blobs.ppm").string(),
                        color_blobs(64, 64));
    std::cout << "wrote 5 images to " << dir.string() << "\n";
    return 0;
}
