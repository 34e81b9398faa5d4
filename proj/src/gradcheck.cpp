#include "wdncnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "wdncnn/errors.hpp"
#include "wdncnn/rng.hpp"

namespace wdncnn {

namespace testing {

bool& gradcheck_fault_injection() {
    static bool enabled = false;
    return enabled;
}

}  // namespace testing

namespace {

double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
    return std::abs(a - b) / denom;
}

}  // namespace

GradCheckReport model_gradcheck(const WDnCNNConfig& config,
                                std::uint64_t seed, int image_size,
                                double eps, const std::string& bank_name) {
    config.validate();
    const FilterBank bank = load_filterbank(bank_name);
    if (image_size < bank.length())
        throw DomainError("gradcheck: image size must be >= filter length");

    // Deterministic probe: a noisy image and its true per-band noise as the
    // regression target, under the pretraining band weights.
    Rng rng(mix_seed(seed, fnv1a64("gradcheck-probe")));
    const double sigma = 25.0;
    Tensor clean({config.channels_c, image_size, image_size});
    for (std::int64_t i = 0; i < clean.numel(); ++i)
        clean[i] = rng.uniform();
    Tensor noisy = clean;
    for (std::int64_t i = 0; i < noisy.numel(); ++i)
        noisy[i] += sigma / 255.0 * rng.normal();

    const SubbandSet u = dwt2(noisy, bank);
    const SubbandSet w = dwt2(clean, bank);
    const SubbandSet noise_bands = subband_sub(u, w);
    const std::vector<Tensor> targets{noise_bands.ll, noise_bands.lh,
                                      noise_bands.hl, noise_bands.hh};
    const std::vector<double> mu{1.5, 2.5, 2.5, 5.0};

    ModelParameters model =
        build_model(config, mix_seed(seed, fnv1a64("gradcheck-init")));

    auto loss_value = [&]() {
        Tape tape;
        const auto pred = model_forward(tape, u, sigma / 255.0, model);
        return tape
            .weighted_band_mse({pred[0], pred[1], pred[2], pred[3]}, targets,
                               mu, 1)
            .value()[0];
    };

    for (Parameter* p : model.all_parameters()) p->zero_grad();
    {
        Tape tape;
        const auto pred = model_forward(tape, u, sigma / 255.0, model);
        Var loss = tape.weighted_band_mse(
            {pred[0], pred[1], pred[2], pred[3]}, targets, mu, 1);
        tape.backward(loss);
    }
    if (testing::gradcheck_fault_injection()) {
        Parameter* victim = model.all_parameters().front();
        victim->grad[0] += 1.0;
    }

    GradCheckReport report;
    for (Parameter* p : model.all_parameters()) {
        GradCheckEntry entry;
        entry.parameter = p->name;
        for (std::int64_t i = 0; i < p->value.numel(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + eps;
            const double up = loss_value();
            p->value[i] = saved - eps;
            const double down = loss_value();
            p->value[i] = saved;
            const double fd = (up - down) / (2.0 * eps);
            entry.max_rel_err =
                std::max(entry.max_rel_err, rel_err(p->grad[i], fd));
            ++report.checked_elements;
        }
        report.worst_rel_err =
            std::max(report.worst_rel_err, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace wdncnn
