#include "wdncnn/dataset.hpp"

#include <iostream>

#include "wdncnn/errors.hpp"
#include "wdncnn/rng.hpp"

namespace wdncnn {

std::vector<Tensor> sample_patches(const std::vector<Tensor>& images,
                                   int count, int size, std::uint64_t seed) {
    if (images.empty())
        throw DomainError("sample_patches: empty dataset");
    if (count < 0) throw DomainError("sample_patches: negative count");
    if (size < 1) throw DomainError("sample_patches: patch size must be >= 1");

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].dim(1) >= size && images[i].dim(2) >= size) {
            eligible.push_back(i);
        } else {
            std::cerr << "warning: source image " << i << " ("
                      << images[i].dim(1) << "x" << images[i].dim(2)
                      << ") smaller than patch size " << size
                      << ", skipping\n";
        }
    }
    if (eligible.empty())
        throw DomainError("sample_patches: no source image is at least " +
                          std::to_string(size) + "x" + std::to_string(size));

    Rng rng(seed);
    std::vector<Tensor> patches;
    patches.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
        const Tensor& src = eligible.size() == 1
                                ? images[eligible[0]]
                                : images[eligible[static_cast<std::size_t>(
                                      rng.uniform_int(
                                          0, static_cast<std::int64_t>(
                                                 eligible.size()) -
                                                 1))]];
        const int c = src.dim(0);
        const int y0 = static_cast<int>(
            rng.uniform_int(0, src.dim(1) - size));
        const int x0 = static_cast<int>(
            rng.uniform_int(0, src.dim(2) - size));
        Tensor patch({c, size, size});
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    patch.at(ch, y, x) = src.at(ch, y0 + y, x0 + x);
        patches.push_back(std::move(patch));
    }
    return patches;
}

Tensor add_awgn(const Tensor& patch, double sigma_n, std::uint64_t seed) {
    if (!(sigma_n >= 0.0 && sigma_n <= 75.0))
        throw DomainError("add_awgn: sigma " + std::to_string(sigma_n) +
                          " outside [0, 75]");
    if (sigma_n == 0.0) return patch;
    Rng rng(seed);
    const double s = sigma_n / 255.0;
    Tensor out(patch.shape());
    for (std::int64_t i = 0; i < patch.numel(); ++i)
        out[i] = patch[i] + s * rng.normal();
    return out;
}

Tensor augment(const Tensor& patch, int op_id) {
    if (op_id < 0 || op_id > 7)
        throw DomainError("augment: op_id " + std::to_string(op_id) +
                          " outside 0..7");
    if (patch.rank() != 3)
        throw ShapeError("augment: patch must be [C,H,W]");
    const bool flip = (op_id & 4) != 0;
    const int rot = op_id & 3;
    const int c = patch.dim(0), h = patch.dim(1), w = patch.dim(2);

    Tensor cur = patch;
    if (flip) {
        Tensor t({c, h, w});
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    t.at(ch, y, x) = cur.at(ch, y, w - 1 - x);
        cur = std::move(t);
    }
    for (int r = 0; r < rot; ++r) {
        // One counter-clockwise quarter turn: (y, x) <- (x, W-1-y).
        const int ch_ = cur.dim(0), hh = cur.dim(1), ww = cur.dim(2);
        Tensor t({ch_, ww, hh});
        for (int ch = 0; ch < ch_; ++ch)
            for (int y = 0; y < ww; ++y)
                for (int x = 0; x < hh; ++x)
                    t.at(ch, y, x) = cur.at(ch, x, ww - 1 - y);
        cur = std::move(t);
    }
    return cur;
}

TrainingPair make_training_pair(const Tensor& clean_patch, double sigma_n,
                                const FilterBank& bank,
                                std::uint64_t noise_seed) {
    const Tensor noisy = add_awgn(clean_patch, sigma_n, noise_seed);
    TrainingPair pair;
    pair.input = dwt2(noisy, bank);
    pair.target_residual = subband_sub(pair.input, dwt2(clean_patch, bank));
    pair.sigma_n = sigma_n;
    return pair;
}

}  // namespace wdncnn
