#include "wdncnn/training.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "wdncnn/dataset.hpp"
#include "wdncnn/errors.hpp"
#include "wdncnn/rng.hpp"

namespace wdncnn {

namespace {

// Shortest decimal form that parses back to the same double.
std::string fmt_g(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

bool pretrain_converged(const std::vector<double>& losses) {
    const int w = kPretrainWindow;
    if (static_cast<int>(losses.size()) < 2 * w) return false;
    const std::size_t n = losses.size();
    double prev = 0.0;
    double cur = 0.0;
    for (int i = 0; i < w; ++i) {
        prev += losses[n - static_cast<std::size_t>(2 * w - i)];
        cur += losses[n - static_cast<std::size_t>(w - i)];
    }
    prev /= w;
    cur /= w;
    const double rel = (prev - cur) / std::max(std::abs(prev), 1e-300);
    return rel < kPretrainTol;
}

bool pretrain_finished(const TrainerState& state) {
    return state.train.pretrain_epoch_cap == 0 ||
           state.epochs_done_in_phase >= state.train.pretrain_epoch_cap ||
           pretrain_converged(state.recent_pretrain_losses);
}

}  // namespace

const char* phase_name(TrainPhase phase) {
    return phase == TrainPhase::pretrain ? "pretrain" : "finetune";
}

void TrainConfig::validate(int filter_length) const {
    if (patch_size < filter_length)
        throw ConfigError("train.patch_size " + std::to_string(patch_size) +
                          " is below the filter length " +
                          std::to_string(filter_length));
    if (patches_per_epoch < 1)
        throw ConfigError("train.patches_per_epoch must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(0.0 <= sigma_min && sigma_min <= sigma_max && sigma_max <= 75.0))
        throw ConfigError(
            "train.sigma_range must satisfy 0 <= min <= max <= 75");
    if (!(lr_initial > 0.0) || !(lr_final > 0.0))
        throw ConfigError("train.lr_initial and train.lr_final must be > 0");
    if (lr_final > lr_initial)
        throw ConfigError("train.lr_final must not exceed train.lr_initial");
    if (epochs_per_bdt_block < 0)
        throw ConfigError("train.epochs_per_bdt_block must be >= 0");
    if (pretrain_epoch_cap < 0)
        throw ConfigError("train.pretrain_epoch_cap must be >= 0");
    if (epochs_per_bdt_block == 0 && pretrain_epoch_cap == 0)
        throw ConfigError(
            "training needs at least one phase: raise "
            "train.epochs_per_bdt_block or train.pretrain_epoch_cap");
}

BDTSchedule BDTSchedule::standard(int block_length) {
    BDTSchedule s;
    s.block_length = block_length;
    s.blocks = {
        {2.0, 2.5, 2.5, 4.5}, {3.5, 2.5, 2.5, 3.0}, {4.5, 2.5, 2.5, 2.0},
        {5.5, 1.5, 1.5, 1.0}, {6.0, 2.0, 2.0, 1.5}, {6.5, 2.5, 2.5, 2.0},
        {7.0, 3.0, 3.0, 2.5}, {7.5, 3.5, 3.5, 3.0}, {8.0, 4.0, 4.0, 3.5},
        {8.5, 4.5, 4.5, 4.0},
    };
    return s;
}

void BDTSchedule::validate() const {
    if (block_length < 0)
        throw DomainError("BDTSchedule: block_length must be >= 0");
    auto check = [](const std::array<double, 4>& mu, const std::string& where) {
        for (double m : mu)
            if (!(m > 0.0))
                throw DomainError("BDTSchedule: non-positive weight in " +
                                  where);
        if (mu[1] != mu[2])
            throw DomainError("BDTSchedule: LH and HL weights differ in " +
                              where);
    };
    check(phase0_weights, "phase0");
    for (std::size_t b = 0; b < blocks.size(); ++b)
        check(blocks[b], "block " + std::to_string(b));
}

std::array<double, 4> bdt_weights(int epoch, const BDTSchedule& schedule,
                                  TrainPhase phase) {
    if (phase == TrainPhase::pretrain) return schedule.phase0_weights;
    if (epoch < 1) throw DomainError("bdt_weights: finetune epoch is 1-based");
    if (schedule.blocks.empty() || schedule.block_length < 1)
        throw DomainError("bdt_weights: schedule has no fine-tune blocks");
    const int nb = static_cast<int>(schedule.blocks.size());
    int idx = epoch / schedule.block_length;
    if (idx >= nb) {
        if (epoch > nb * schedule.block_length)
            std::cerr << "notice: finetune epoch " << epoch
                      << " is past the schedule; using the last block\n";
        idx = nb - 1;
    }
    return schedule.blocks[static_cast<std::size_t>(idx)];
}

double finetune_lr(int block_index, int block_count,
                   const TrainConfig& config) {
    if (block_count < 1 || block_index < 0 || block_index >= block_count)
        throw DomainError("finetune_lr: block index out of range");
    if (block_count == 1) return config.lr_initial;
    const double t =
        static_cast<double>(block_index) / static_cast<double>(block_count - 1);
    return config.lr_initial *
           std::pow(config.lr_final / config.lr_initial, t);
}

std::string training_log_header(const TrainConfig& config) {
    std::ostringstream os;
    os << "# wdncnn-training-log label="
       << (config.use_bdt ? "bdt" : "uniform") << " seed=" << config.seed
       << " patch_size=" << config.patch_size
       << " patches_per_epoch=" << config.patches_per_epoch
       << " batch_size=" << config.batch_size
       << " sigma_min=" << fmt_g(config.sigma_min)
       << " sigma_max=" << fmt_g(config.sigma_max)
       << " lr_initial=" << fmt_g(config.lr_initial)
       << " lr_final=" << fmt_g(config.lr_final)
       << " epochs_per_bdt_block=" << config.epochs_per_bdt_block
       << " pretrain_epoch_cap=" << config.pretrain_epoch_cap << "\n";
    os << "epoch,phase,lr,mu_ll,mu_lh,mu_hl,mu_hh,loss_total,loss_ll,loss_lh,"
          "loss_hl,loss_hh,seconds\n";
    return os.str();
}

std::string training_log_row(const EpochStats& stats) {
    std::ostringstream os;
    os << stats.epoch << ',' << phase_name(stats.phase) << ','
       << fmt_g(stats.lr);
    for (double m : stats.mu) os << ',' << fmt_g(m);
    os << ',' << fmt_g(stats.loss_total);
    for (double l : stats.loss_band) os << ',' << fmt_g(l);
    char sec[32];
    std::snprintf(sec, sizeof sec, "%.3f", stats.seconds);
    os << ',' << sec << "\n";
    return os.str();
}

EpochStats train_epoch(ModelParameters& model,
                       const std::vector<Tensor>& source_images,
                       const TrainConfig& config, const BDTSchedule& schedule,
                       const FilterBank& bank, int epoch, TrainPhase phase,
                       double lr) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate(static_cast<int>(bank.lo_dec.size()));
    schedule.validate();
    if (epoch < 1) throw DomainError("train_epoch: epoch is 1-based");
    if (lr < 0.0) throw DomainError("train_epoch: negative learning rate");

    const std::array<double, 4> mu =
        config.use_bdt ? bdt_weights(epoch, schedule, phase)
                       : std::array<double, 4>{1.0, 1.0, 1.0, 1.0};

    // Everything random is derived from (seed, phase, epoch) through
    // independent sub-streams, so an epoch replays identically regardless of
    // how the run was interrupted or parallelized.
    const std::uint64_t epoch_seed =
        mix_seed(mix_seed(config.seed, fnv1a64(phase_name(phase))),
                 static_cast<std::uint64_t>(epoch));
    const std::vector<Tensor> patches =
        sample_patches(source_images, config.patches_per_epoch,
                       config.patch_size, mix_seed(epoch_seed,
                                                   fnv1a64("patches")));

    struct Draw {
        double sigma;
        int op;
        std::uint64_t noise_seed;
    };
    Rng assign(mix_seed(epoch_seed, fnv1a64("assign")));
    std::vector<Draw> draws(patches.size());
    for (Draw& d : draws) {
        d.sigma = assign.uniform(config.sigma_min, config.sigma_max);
        d.op = static_cast<int>(assign.uniform_int(0, 7));
        d.noise_seed = assign.next_u64();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.phase = phase;
    stats.lr = lr;
    stats.mu = mu;

    const std::vector<Parameter*> params = model.all_parameters();
    const std::vector<double> mu_vec(mu.begin(), mu.end());
    const int total = static_cast<int>(patches.size());
    std::array<double, 4> weighted_sq{};

    int batch_index = 0;
    for (int start = 0; start < total; start += config.batch_size) {
        const int n = std::min(config.batch_size, total - start);
        for (Parameter* p : params) p->zero_grad();

        Tape tape;
        Var batch_loss;
        for (int j = 0; j < n; ++j) {
            const Draw& d = draws[static_cast<std::size_t>(start + j)];
            const Tensor patch =
                augment(patches[static_cast<std::size_t>(start + j)], d.op);
            const TrainingPair pair =
                make_training_pair(patch, d.sigma, bank, d.noise_seed);

            const std::array<Var, 4> pred =
                model_forward(tape, pair.input, d.sigma / 255.0, model);
            std::vector<Var> pred_vec(pred.begin(), pred.end());
            std::vector<Tensor> targets;
            targets.reserve(4);
            for (int k = 0; k < 4; ++k)
                targets.push_back(pair.target_residual.band(k));

            for (int k = 0; k < 4; ++k)
                weighted_sq[static_cast<std::size_t>(k)] +=
                    mu[static_cast<std::size_t>(k)] *
                    sum_squares(sub(pred[static_cast<std::size_t>(k)].value(),
                                    targets[static_cast<std::size_t>(k)]));

            const Var sample_loss =
                tape.weighted_band_mse(pred_vec, targets, mu_vec, n);
            batch_loss = j == 0 ? sample_loss : tape.add(batch_loss,
                                                         sample_loss);
        }

        const double loss_value = batch_loss.value()[0];
        if (!std::isfinite(loss_value))
            throw NumericError("train_epoch: non-finite loss in batch " +
                               std::to_string(batch_index) + " of " +
                               phase_name(phase) + " epoch " +
                               std::to_string(epoch));
        tape.backward(batch_loss);
        if (lr > 0.0) adam_step(params, lr);
        ++batch_index;
    }

    for (int k = 0; k < 4; ++k)
        stats.loss_band[static_cast<std::size_t>(k)] =
            weighted_sq[static_cast<std::size_t>(k)] / (2.0 * 4.0 * total);
    stats.loss_total = stats.loss_band[0] + stats.loss_band[1] +
                       stats.loss_band[2] + stats.loss_band[3];
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return stats;
}

EpochStats advance_one_epoch(TrainerState& state,
                             const std::vector<Tensor>& source_images,
                             const BDTSchedule& schedule,
                             const FilterBank& bank) {
    if (state.phase == TrainPhase::pretrain && pretrain_finished(state)) {
        state.phase = TrainPhase::finetune;
        state.epochs_done_in_phase = 0;
        state.recent_pretrain_losses.clear();
    }
    if (training_done(state, schedule))
        throw DomainError("advance_one_epoch: training already complete");

    const int epoch = state.epochs_done_in_phase + 1;
    double lr = state.train.lr_initial;
    if (state.phase == TrainPhase::finetune) {
        const int nb = static_cast<int>(schedule.blocks.size());
        const int block = std::min(nb - 1, epoch / schedule.block_length);
        lr = finetune_lr(block, nb, state.train);
    }

    EpochStats stats = train_epoch(state.model, source_images, state.train,
                                   schedule, bank, epoch, state.phase, lr);
    state.epochs_done_in_phase = epoch;
    if (state.phase == TrainPhase::pretrain) {
        state.recent_pretrain_losses.push_back(stats.loss_total);
        while (state.recent_pretrain_losses.size() >
               static_cast<std::size_t>(2 * kPretrainWindow))
            state.recent_pretrain_losses.erase(
                state.recent_pretrain_losses.begin());
    }
    return stats;
}

bool training_done(const TrainerState& state, const BDTSchedule& schedule) {
    if (state.phase == TrainPhase::finetune)
        return state.epochs_done_in_phase >= schedule.total_finetune_epochs();
    return pretrain_finished(state) && schedule.total_finetune_epochs() == 0;
}

}  // namespace wdncnn
