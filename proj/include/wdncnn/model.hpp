#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wdncnn/autograd.hpp"
#include "wdncnn/optim.hpp"
#include "wdncnn/wavelet.hpp"

namespace wdncnn {

// Band order used everywhere: 0=LL, 1=LH, 2=HL, 3=HH.
inline constexpr std::array<const char*, 4> kBandNames{"ll", "lh", "hl", "hh"};

struct WDnCNNConfig {
    int channels_c = 1;
    std::array<int, 4> bnm_depths{3, 2, 2, 1};
    int mapping_depth = 16;
    int feature_width = 72;

    // Grayscale: mapping depth 16, width 72; color: 13 and 108.
    static WDnCNNConfig defaults_for(int channels);
    void validate() const;
    bool operator==(const WDnCNNConfig&) const = default;
};

// Closed-form total of weight and bias elements for a config.
std::int64_t expected_parameter_count(const WDnCNNConfig& config);

// Constant plane carrying the normalized noise level, concatenated to each
// band before its branch.
struct NoiseLevelMap {
    double sigma = 0.0;  // sigma_n / 255
    Tensor plane;        // [1, H0, W0], every element equal to sigma

    static NoiseLevelMap make(double sigma_norm, int h0, int w0);
};

// All trainable state. Branch k processes band k; the mapping module sees
// the concatenated branch outputs. There is no normalization-layer state.
struct ModelParameters {
    WDnCNNConfig config;
    std::uint64_t init_seed = 0;
    std::array<std::vector<Parameter>, 4> branches;  // conv0.weight/bias, ...
    std::vector<Parameter> mapping;

    // Deterministic flat order: branches ll,lh,hl,hh then mapping, each
    // layer's weight before its bias. Checkpoints and ADAM use this order.
    std::vector<Parameter*> all_parameters();
    std::vector<const Parameter*> all_parameters() const;
    std::int64_t parameter_count() const;
};

// Kaiming-initialized weights (seed-deterministic), zero biases.
ModelParameters build_model(const WDnCNNConfig& config, std::uint64_t seed);

// Hash of every parameter name and value byte, in the canonical flat order.
// Equal digests mean bit-identical weights.
std::uint64_t parameters_digest(const ModelParameters& params);

// Per-band branches: concat(band, noise plane) -> depth_k times
// (conv3x3 + ReLU). Returns four [feature_width, H0, W0] features.
std::array<Var, 4> bnm_forward(Tape& tape, const SubbandSet& subbands,
                               const NoiseLevelMap& noise_map,
                               ModelParameters& params);

// Shared mapping module: concat features (4W channels) -> conv to W + ReLU
// -> repeated conv+ReLU -> final conv to 4C with no activation, split into
// per-band residuals.
std::array<Var, 4> mapping_forward(Tape& tape,
                                   const std::array<Var, 4>& band_features,
                                   ModelParameters& params);

// Full network: predicted per-band noise v-hat.
std::array<Var, 4> model_forward(Tape& tape, const SubbandSet& noisy_subbands,
                                 double sigma_norm, ModelParameters& params);

// End-to-end pipeline: idwt2(dwt2(u) - forward(...)). sigma_n is in 8-bit
// units, [0, 75]. The emitted image is clamped to [0, 1] unless the caller
// asks for raw values (pre-clamp metrics).
Tensor denoise(const Tensor& image, double sigma_n, ModelParameters& params,
               const FilterBank& bank, bool clamp_output = true);

}  // namespace wdncnn
