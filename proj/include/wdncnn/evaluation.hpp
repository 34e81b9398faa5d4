#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wdncnn/model.hpp"
#include "wdncnn/wavelet.hpp"

namespace wdncnn {

// 10 * log10(peak^2 / MSE) in dB; identical images report +infinity.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Noise seed for one (image, sigma) cell: a stable hash of the image name
// and sigma mixed with the run seed, so reports reproduce across runs and
// machines regardless of evaluation order.
std::uint64_t eval_noise_seed(std::uint64_t seed, const std::string& name,
                              double sigma);

struct EvalRow {
    std::string name;
    double sigma = 0.0;
    double psnr_noisy = 0.0;
    double psnr_denoised = 0.0;
};

struct EvalAverage {
    double sigma = 0.0;
    double psnr_noisy = 0.0;
    double psnr_denoised = 0.0;
    int images = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;          // sorted by image name, then sigma
    std::vector<EvalAverage> averages;  // one per sigma, input order
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;  // model config + bank
    std::uint64_t model_digest = 0;   // parameter values
};

// For every readable .pgm/.ppm in image_dir and every sigma: synthesize
// noise, denoise, and record PSNR before and after. Unreadable images are
// skipped with a warning; an empty or fully unreadable directory is a
// domain error. Model parameters are read-only throughout.
EvalReport evaluate_dataset(ModelParameters& model,
                            const std::string& image_dir,
                            const std::vector<double>& sigmas,
                            const FilterBank& bank, std::uint64_t seed);

// CSV columns: name,sigma,psnr_noisy_db,psnr_denoised_db. Per-sigma average
// rows follow the per-image rows under the name "average". A leading
// comment line carries the digests and seed.
std::string eval_report_csv(const EvalReport& report);
std::string eval_report_table(const EvalReport& report);

struct CurveSummary {
    std::string label_a;
    std::string label_b;
    int epochs = 0;
    double final_loss_a = 0.0;
    double final_loss_b = 0.0;
    // Population variance of loss_total over the last 20% of epochs
    // (at least one).
    double tail_variance_a = 0.0;
    double tail_variance_b = 0.0;
};

// Aligns two training logs epoch by epoch and writes a per-epoch series CSV
// (epoch, phase, loss_a, loss_b, difference) for external plotting. Logs
// must cover identical (phase, epoch) sequences. Labels come from the log
// metadata lines.
CurveSummary compare_training_curves(const std::string& log_a_path,
                                     const std::string& log_b_path,
                                     const std::string& out_csv_path);

}  // namespace wdncnn
