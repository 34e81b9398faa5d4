#include "wdncnn/model.hpp"

#include <string>

#include "wdncnn/errors.hpp"
#include "wdncnn/rng.hpp"

namespace wdncnn {

namespace {

constexpr double kMaxSigmaNorm = 75.0 / 255.0;

Parameter make_conv(const std::string& name, int cout, int cin,
                    std::uint64_t model_seed, bool bias) {
    if (bias) return Parameter(name + ".bias", Tensor({cout}));
    const std::uint64_t seed = mix_seed(model_seed, fnv1a64(name + ".weight"));
    return Parameter(name + ".weight",
                     kaiming_normal_init({cout, cin, 3, 3}, seed));
}

}  // namespace

WDnCNNConfig WDnCNNConfig::defaults_for(int channels) {
    WDnCNNConfig c;
    c.channels_c = channels;
    if (channels == 3) {
        c.mapping_depth = 13;
        c.feature_width = 108;
    }
    c.validate();
    return c;
}

void WDnCNNConfig::validate() const {
    if (channels_c != 1 && channels_c != 3)
        throw ConfigError("model.channels must be 1 (grayscale) or 3 (color)");
    for (int d : bnm_depths)
        if (d < 1) throw ConfigError("model.bnm_depths entries must be >= 1");
    if (mapping_depth < 1)
        throw ConfigError("model.mapping_depth must be >= 1");
    if (feature_width < 1)
        throw ConfigError("model.feature_width must be >= 1");
}

std::int64_t expected_parameter_count(const WDnCNNConfig& config) {
    const std::int64_t c = config.channels_c;
    const std::int64_t w = config.feature_width;
    const std::int64_t conv = 9;
    std::int64_t total = 0;
    for (int d : config.bnm_depths) {
        total += w * (c + 1) * conv + w;            // first conv, C+1 inputs
        total += (d - 1) * (w * w * conv + w);      // remaining convs
    }
    if (config.mapping_depth == 1) {
        total += 4 * c * (4 * w) * conv + 4 * c;    // single degenerate conv
    } else {
        total += w * (4 * w) * conv + w;            // 4W -> W
        total += (config.mapping_depth - 2) * (w * w * conv + w);
        total += 4 * c * w * conv + 4 * c;          // W -> 4C, no activation
    }
    return total;
}

NoiseLevelMap NoiseLevelMap::make(double sigma_norm, int h0, int w0) {
    if (!(sigma_norm >= 0.0 && sigma_norm <= kMaxSigmaNorm))
        throw DomainError("noise level " + std::to_string(sigma_norm * 255.0) +
                          " outside [0, 75]");
    NoiseLevelMap m;
    m.sigma = sigma_norm;
    m.plane = Tensor::full({1, h0, w0}, sigma_norm);
    return m;
}

std::vector<Parameter*> ModelParameters::all_parameters() {
    std::vector<Parameter*> out;
    for (auto& branch : branches)
        for (Parameter& p : branch) out.push_back(&p);
    for (Parameter& p : mapping) out.push_back(&p);
    return out;
}

std::vector<const Parameter*> ModelParameters::all_parameters() const {
    std::vector<const Parameter*> out;
    for (const auto& branch : branches)
        for (const Parameter& p : branch) out.push_back(&p);
    for (const Parameter& p : mapping) out.push_back(&p);
    return out;
}

std::int64_t ModelParameters::parameter_count() const {
    std::int64_t n = 0;
    for (const Parameter* p : all_parameters()) n += p->value.numel();
    return n;
}

ModelParameters build_model(const WDnCNNConfig& config, std::uint64_t seed) {
    config.validate();
    ModelParameters m;
    m.config = config;
    m.init_seed = seed;
    const int c = config.channels_c;
    const int w = config.feature_width;

    for (int band = 0; band < 4; ++band) {
        const std::string prefix = std::string("branch_") + kBandNames[band];
        auto& layers = m.branches[static_cast<std::size_t>(band)];
        int cin = c + 1;  // band channels plus the noise plane
        for (int layer = 0; layer < config.bnm_depths[band]; ++layer) {
            const std::string name =
                prefix + ".conv" + std::to_string(layer);
            layers.push_back(make_conv(name, w, cin, seed, false));
            layers.push_back(make_conv(name, w, cin, seed, true));
            cin = w;
        }
    }

    int cin = 4 * w;
    for (int layer = 0; layer < config.mapping_depth; ++layer) {
        const bool last = layer == config.mapping_depth - 1;
        const int cout = last ? 4 * c : w;
        const std::string name = "mapping.conv" + std::to_string(layer);
        m.mapping.push_back(make_conv(name, cout, cin, seed, false));
        m.mapping.push_back(make_conv(name, cout, cin, seed, true));
        cin = w;
    }
    return m;
}

std::array<Var, 4> bnm_forward(Tape& tape, const SubbandSet& subbands,
                               const NoiseLevelMap& noise_map,
                               ModelParameters& params) {
    if (noise_map.plane.dim(1) != subbands.band_height() ||
        noise_map.plane.dim(2) != subbands.band_width())
        throw ShapeError("noise map " + shape_str(noise_map.plane.shape()) +
                         " does not match band size " +
                         shape_str(subbands.ll.shape()));
    std::array<Var, 4> out;
    Var plane = tape.constant(noise_map.plane);
    for (int band = 0; band < 4; ++band) {
        auto& layers = params.branches[static_cast<std::size_t>(band)];
        Var h = tape.concat_channels(
            {tape.constant(subbands.band(band)), plane});
        for (std::size_t i = 0; i < layers.size(); i += 2) {
            h = tape.relu(tape.conv2d(h, tape.param(layers[i]),
                                      tape.param(layers[i + 1])));
        }
        out[static_cast<std::size_t>(band)] = h;
    }
    return out;
}

std::array<Var, 4> mapping_forward(Tape& tape,
                                   const std::array<Var, 4>& band_features,
                                   ModelParameters& params) {
    const Tensor& first = band_features[0].value();
    for (const Var& f : band_features)
        if (!f.value().same_shape(first))
            throw ShapeError("mapping_forward: band features differ in shape");

    Var h = tape.concat_channels({band_features[0], band_features[1],
                                  band_features[2], band_features[3]});
    auto& layers = params.mapping;
    const std::size_t n_layers = layers.size() / 2;
    for (std::size_t layer = 0; layer < n_layers; ++layer) {
        h = tape.conv2d(h, tape.param(layers[2 * layer]),
                        tape.param(layers[2 * layer + 1]));
        if (layer + 1 < n_layers) h = tape.relu(h);
    }
    const int c = params.config.channels_c;
    auto parts = tape.split_channels(h, {c, c, c, c});
    return {parts[0], parts[1], parts[2], parts[3]};
}

std::uint64_t parameters_digest(const ModelParameters& params) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const Parameter* p : params.all_parameters()) {
        h = fnv1a64(p->name, h);
        h = fnv1a64(p->value.data(),
                    static_cast<std::size_t>(p->value.numel()) *
                        sizeof(double),
                    h);
    }
    return h;
}

std::array<Var, 4> model_forward(Tape& tape, const SubbandSet& noisy_subbands,
                                 double sigma_norm, ModelParameters& params) {
    const NoiseLevelMap map = NoiseLevelMap::make(
        sigma_norm, noisy_subbands.band_height(), noisy_subbands.band_width());
    return mapping_forward(
        tape, bnm_forward(tape, noisy_subbands, map, params), params);
}

Tensor denoise(const Tensor& image, double sigma_n, ModelParameters& params,
               const FilterBank& bank, bool clamp_output) {
    if (!(sigma_n >= 0.0 && sigma_n <= 75.0))
        throw DomainError("denoise: sigma " + std::to_string(sigma_n) +
                          " outside [0, 75]");
    const SubbandSet u = dwt2(image, bank);
    Tape tape;
    const std::array<Var, 4> vhat =
        model_forward(tape, u, sigma_n / 255.0, params);
    SubbandSet cleaned;
    cleaned.ll = sub(u.ll, vhat[0].value());
    cleaned.lh = sub(u.lh, vhat[1].value());
    cleaned.hl = sub(u.hl, vhat[2].value());
    cleaned.hh = sub(u.hh, vhat[3].value());
    cleaned.original_height = u.original_height;
    cleaned.original_width = u.original_width;
    cleaned.filter_name = u.filter_name;
    Tensor out = idwt2(cleaned, bank);
    return clamp_output ? clamp01(out) : out;
}

}  // namespace wdncnn
