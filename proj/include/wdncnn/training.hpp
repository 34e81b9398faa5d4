#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wdncnn/model.hpp"
#include "wdncnn/wavelet.hpp"

namespace wdncnn {

enum class TrainPhase { pretrain, finetune };

const char* phase_name(TrainPhase phase);

struct TrainConfig {
    int patch_size = 50;
    int patches_per_epoch = 256000;  // 2000 batches of 128 at full scale
    int batch_size = 128;
    double sigma_min = 0.0;
    double sigma_max = 75.0;
    double lr_initial = 1e-4;
    double lr_final = 1e-7;
    int epochs_per_bdt_block = 50;  // 0 skips fine-tuning (desk scale)
    int pretrain_epoch_cap = 100;   // 0 skips pretraining
    bool use_bdt = true;            // false trains with uniform band weights
    std::uint64_t seed = 0;

    void validate(int filter_length) const;
    bool operator==(const TrainConfig&) const = default;
};

// Pretraining stop rule: relative improvement of the windowed mean loss
// below the tolerance ends the phase (or the epoch cap does).
inline constexpr int kPretrainWindow = 5;
inline constexpr double kPretrainTol = 1e-3;

// The published fine-tuning weight table plus the pretraining weights. Block
// b covers epochs (b*block_length, (b+1)*block_length], so a boundary epoch
// belongs to the later block.
struct BDTSchedule {
    std::array<double, 4> phase0_weights{1.5, 2.5, 2.5, 5.0};
    std::vector<std::array<double, 4>> blocks;
    int block_length = 50;

    static BDTSchedule standard(int block_length = 50);
    void validate() const;
    int total_finetune_epochs() const {
        return block_length * static_cast<int>(blocks.size());
    }
};

std::array<double, 4> bdt_weights(int epoch, const BDTSchedule& schedule,
                                  TrainPhase phase);

// Per-block constant learning rate, log-spaced from lr_initial to lr_final
// across the fine-tune blocks.
double finetune_lr(int block_index, int block_count,
                   const TrainConfig& config);

struct EpochStats {
    int epoch = 0;  // 1-based within its phase
    TrainPhase phase = TrainPhase::pretrain;
    double lr = 0.0;
    std::array<double, 4> mu{};
    double loss_total = 0.0;
    std::array<double, 4> loss_band{};
    double seconds = 0.0;
};

std::string training_log_header(const TrainConfig& config);
std::string training_log_row(const EpochStats& stats);

// One full pass: sample patches, assign (sigma, augmentation, noise) per
// patch, then batched forward/backward/ADAM. Everything except wall time is
// a pure function of (config.seed, phase, epoch). lr = 0 skips the
// optimizer update but still reports the loss.
EpochStats train_epoch(ModelParameters& model,
                       const std::vector<Tensor>& source_images,
                       const TrainConfig& config, const BDTSchedule& schedule,
                       const FilterBank& bank, int epoch, TrainPhase phase,
                       double lr);

// Everything a resumable training run needs. The RNG is counter-derived
// from (seed, phase, epoch), so no engine state is stored.
struct TrainerState {
    ModelParameters model;
    TrainConfig train;
    std::string bank_name = "dmey";
    TrainPhase phase = TrainPhase::pretrain;
    int epochs_done_in_phase = 0;
    std::vector<double> recent_pretrain_losses;  // sliding, newest last
};

// Advances the state by one epoch, handling the pretrain-to-finetune
// transition. Call training_done first; advancing a finished run is a
// domain error.
EpochStats advance_one_epoch(TrainerState& state,
                             const std::vector<Tensor>& source_images,
                             const BDTSchedule& schedule,
                             const FilterBank& bank);

bool training_done(const TrainerState& state, const BDTSchedule& schedule);

}  // namespace wdncnn
