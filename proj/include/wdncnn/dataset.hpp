#pragma once

#include <cstdint>
#include <vector>

#include "wdncnn/tensor.hpp"
#include "wdncnn/wavelet.hpp"

namespace wdncnn {

// Uniformly random size x size crops from the eligible source images.
// Images smaller than the patch size are skipped with a warning on stderr;
// an empty (or fully ineligible) dataset is a domain error. The sequence is
// a pure function of the seed.
std::vector<Tensor> sample_patches(const std::vector<Tensor>& images,
                                   int count, int size, std::uint64_t seed);

// y = x + n with n ~ N(0, (sigma_n/255)^2) i.i.d.; sigma_n in 8-bit units.
// Values are intentionally not clipped to [0,1].
Tensor add_awgn(const Tensor& patch, double sigma_n, std::uint64_t seed);

// Dihedral-group augmentation: bit 2 flips horizontally (before rotating),
// bits 0-1 count quarter-turn rotations. op_id 0 is the identity.
Tensor augment(const Tensor& patch, int op_id);

struct TrainingPair {
    SubbandSet input;            // u = dwt2(clean + noise)
    SubbandSet target_residual;  // u - dwt2(clean), the per-band noise
    double sigma_n = 0.0;        // 8-bit units, for the noise map
};

TrainingPair make_training_pair(const Tensor& clean_patch, double sigma_n,
                                const FilterBank& bank,
                                std::uint64_t noise_seed);

}  // namespace wdncnn
