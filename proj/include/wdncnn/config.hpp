#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wdncnn/model.hpp"
#include "wdncnn/training.hpp"

namespace wdncnn {

struct EvalSettings {
    std::vector<double> sigmas{25.0, 50.0, 75.0};
    bool operator==(const EvalSettings&) const = default;
};

struct IoSettings {
    std::string image_dir;
    bool operator==(const IoSettings&) const = default;
};

// The JSON run configuration: sections model / train / eval / wavelet / io.
// Parsing is strict: unknown keys are rejected with their full path, and the
// model section's width/depth defaults follow the channel count unless given
// explicitly.
struct RunConfig {
    WDnCNNConfig model;
    TrainConfig train;
    EvalSettings eval;
    std::string bank = "sym8";
    IoSettings io;
    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Canonical defaults-merged form: every effective field spelled out, keys
// sorted. Echoed by the CLI and hashed for provenance.
std::string effective_config_json(const RunConfig& config);
std::uint64_t run_config_digest(const RunConfig& config);

// Single-section serializers shared with the checkpoint format.
std::string model_config_json(const WDnCNNConfig& config);
WDnCNNConfig model_config_from_json(const std::string& text);
std::string train_config_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace wdncnn
