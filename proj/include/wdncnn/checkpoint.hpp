#pragma once

#include <cstdint>
#include <string>

#include "wdncnn/training.hpp"

namespace wdncnn {

// Versioned little-endian binary snapshot of a TrainerState: model and train
// configs (as JSON), bank name, phase progress, the recent-loss window for
// the pretrain stopping rule, and per-parameter value/ADAM arrays behind a
// (name, shape, step_count) manifest. A whole-file checksum trails the
// payload. Writes go to a temp file and are renamed into place, so a crash
// never leaves a half-written checkpoint at the target path.
inline constexpr char kCheckpointMagic[8] = {'W', 'D', 'N', 'C',
                                             'K', 'P', 'T', '\n'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const TrainerState& state);

// Rebuilds the model from the embedded configs, then restores parameter and
// optimizer arrays. Magic/version/checksum/manifest mismatches raise an
// integrity error before any state is constructed.
TrainerState load_checkpoint(const std::string& path);

// Digest of the raw file bytes; equal digests mean bit-identical states.
std::uint64_t checkpoint_file_digest(const std::string& path);

// Digest of the config content a checkpoint pins (model + train + bank).
std::uint64_t training_setup_digest(const TrainerState& state);

}  // namespace wdncnn
