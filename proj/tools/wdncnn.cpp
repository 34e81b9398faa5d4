#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wdncnn/checkpoint.hpp"
#include "wdncnn/config.hpp"
#include "wdncnn/dataset.hpp"
#include "wdncnn/errors.hpp"
#include "wdncnn/evaluation.hpp"
#include "wdncnn/gradcheck.hpp"
#include "wdncnn/image_io.hpp"
#include "wdncnn/model.hpp"
#include "wdncnn/rng.hpp"
#include "wdncnn/training.hpp"
#include "wdncnn/wavelet.hpp"

namespace fs = std::filesystem;
using namespace wdncnn;

namespace {

// Exit codes: 0 success, 1 usage/config, 2 data/integrity, 3 numeric.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string fmt_g(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct Options {
    std::string config_path;
    std::string out;
    std::string checkpoint;
    std::string reference;
    std::string input;
    std::string output;
    std::string dataset_dir;
    std::string bank = "haar";
    std::optional<std::uint64_t> seed;
    double sigma = 25.0;
    int max_epochs_this_run = 0;
    bool resume = false;
    bool synth_noise = false;
    bool inject_fault = false;
};

RunConfig load_config_or_defaults(const std::string& path) {
    if (path.empty()) return parse_run_config("{}");
    return load_run_config(path);
}

std::vector<std::string> list_images(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw DomainError("'" + dir + "' is not a directory");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm")
            names.push_back(entry.path().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

std::vector<Tensor> load_training_images(const std::string& dir,
                                         int channels) {
    std::vector<Tensor> images;
    for (const std::string& path : list_images(dir)) {
        Tensor img;
        try {
            img = read_image(path);
        } catch (const IoError& e) {
            std::cerr << "warning: skipping unreadable image: " << e.what()
                      << "\n";
            continue;
        }
        if (img.dim(0) != channels) {
            std::cerr << "warning: skipping '" << path << "' with "
                      << img.dim(0) << " channel(s); the model expects "
                      << channels << "\n";
            continue;
        }
        images.push_back(std::move(img));
    }
    if (images.empty())
        throw DomainError("no usable training images in '" + dir + "'");
    return images;
}

void check_checkpoint_against_config(const TrainerState& state,
                                     const RunConfig& config) {
    if (!(state.model.config == config.model))
        throw IntegrityError(
            "checkpoint model configuration does not match the config file");
    if (state.bank_name != config.bank)
        throw IntegrityError("checkpoint bank '" + state.bank_name +
                             "' does not match configured bank '" +
                             config.bank + "'");
}

int cmd_train(const Options& opt) {
    RunConfig config = load_config_or_defaults(opt.config_path);
    if (opt.seed) config.train.seed = *opt.seed;
    if (config.io.image_dir.empty())
        throw ConfigError("config: 'io.image_dir' is required for training");
    if (opt.out.empty())
        throw ConfigError("train: --out directory is required");

    std::cout << "effective config:\n" << effective_config_json(config);

    const FilterBank bank = load_filterbank(config.bank);
    const BDTSchedule schedule =
        BDTSchedule::standard(config.train.epochs_per_bdt_block);
    const std::vector<Tensor> images =
        load_training_images(config.io.image_dir, config.model.channels_c);

    const fs::path out_dir(opt.out);
    const std::string last_path = (out_dir / "last.ckpt").string();
    const std::string log_path = (out_dir / "training_log.csv").string();

    TrainerState state;
    bool fresh = true;
    if (opt.resume && fs::exists(last_path)) {
        state = load_checkpoint(last_path);
        check_checkpoint_against_config(state, config);
        if (!(state.train == config.train))
            throw IntegrityError(
                "checkpoint training configuration does not match the "
                "config file");
        fresh = false;
        std::cout << "resuming from " << last_path << " ("
                  << phase_name(state.phase) << ", "
                  << state.epochs_done_in_phase << " epochs done)\n";
    } else {
        state.model = build_model(
            config.model, mix_seed(config.train.seed,
                                   fnv1a64("model-init")));
        state.train = config.train;
        state.bank_name = config.bank;
    }

    fs::create_directories(out_dir);
    if (fresh || !fs::exists(log_path))
        write_text_file(log_path, training_log_header(state.train));

    std::ofstream log(log_path, std::ios::app);
    if (!log) throw IoError("cannot open '" + log_path + "' for appending");

    int epochs_this_run = 0;
    while (!training_done(state, schedule)) {
        if (opt.max_epochs_this_run > 0 &&
            epochs_this_run >= opt.max_epochs_this_run) {
            std::cout << "stopping after " << epochs_this_run
                      << " epoch(s); resume with --resume\n";
            return kExitOk;
        }
        const EpochStats stats =
            advance_one_epoch(state, images, schedule, bank);
        ++epochs_this_run;
        log << training_log_row(stats);
        log.flush();
        save_checkpoint(last_path, state);
        std::cout << phase_name(stats.phase) << " epoch " << stats.epoch
                  << "  loss " << fmt_g(stats.loss_total) << "  lr "
                  << fmt_g(stats.lr) << "\n";
        if (stats.phase == TrainPhase::finetune &&
            schedule.block_length > 0 &&
            state.epochs_done_in_phase % schedule.block_length == 0) {
            const int block =
                state.epochs_done_in_phase / schedule.block_length;
            char name[32];
            std::snprintf(name, sizeof name, "block_%03d.ckpt", block);
            save_checkpoint((out_dir / name).string(), state);
        }
    }
    save_checkpoint((out_dir / "final.ckpt").string(), state);
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(checkpoint_file_digest(
                      (out_dir / "final.ckpt").string())));
    std::cout << "training complete; final checkpoint digest " << digest
              << "\n";
    return kExitOk;
}

int cmd_denoise(const Options& opt) {
    if (!(opt.sigma >= 0.0 && opt.sigma <= 75.0))
        throw ConfigError("denoise: --sigma must lie in [0, 75]");
    if (opt.checkpoint.empty())
        throw ConfigError("denoise: --checkpoint is required");

    TrainerState state = load_checkpoint(opt.checkpoint);
    if (!opt.config_path.empty())
        check_checkpoint_against_config(state,
                                        load_run_config(opt.config_path));
    const FilterBank bank = load_filterbank(state.bank_name);

    const Tensor source = read_image(opt.input);
    if (source.dim(0) != state.model.config.channels_c)
        throw IntegrityError("input image has " +
                             std::to_string(source.dim(0)) +
                             " channel(s); the checkpointed model expects " +
                             std::to_string(state.model.config.channels_c));

    const std::uint64_t seed = opt.seed.value_or(0);
    Tensor noisy = source;
    if (opt.synth_noise) {
        const std::string name = fs::path(opt.input).filename().string();
        noisy = add_awgn(source, opt.sigma,
                         eval_noise_seed(seed, name, opt.sigma));
    }

    const Tensor denoised = denoise(noisy, opt.sigma, state.model, bank);
    write_image(opt.output, denoised);
    std::cout << "wrote " << opt.output << " (" << denoised.dim(2) << "x"
              << denoised.dim(1) << ")\n";

    if (!opt.reference.empty()) {
        const Tensor reference = read_image(opt.reference);
        if (opt.synth_noise)
            std::cout << "psnr_noisy_db " << fmt_g(psnr(noisy, reference))
                      << "\n";
        std::cout << "psnr_denoised_db " << fmt_g(psnr(denoised, reference))
                  << "\n";
    }
    return kExitOk;
}

int cmd_eval(const Options& opt) {
    if (opt.checkpoint.empty())
        throw ConfigError("eval: --checkpoint is required");
    RunConfig config = load_config_or_defaults(opt.config_path);

    TrainerState state = load_checkpoint(opt.checkpoint);
    if (!opt.config_path.empty())
        check_checkpoint_against_config(state, config);
    const FilterBank bank = load_filterbank(state.bank_name);

    std::string dir = opt.dataset_dir;
    if (dir.empty()) dir = config.io.image_dir;
    if (dir.empty())
        throw ConfigError(
            "eval: pass an image directory or set 'io.image_dir'");

    const EvalReport report =
        evaluate_dataset(state.model, dir, config.eval.sigmas, bank,
                         opt.seed.value_or(0));
    std::cout << eval_report_table(report);
    if (!opt.out.empty()) {
        fs::create_directories(opt.out);
        write_text_file((fs::path(opt.out) / "report.csv").string(),
                        eval_report_csv(report));
        write_text_file((fs::path(opt.out) / "report.txt").string(),
                        eval_report_table(report));
        std::cout << "wrote " << (fs::path(opt.out) / "report.csv").string()
                  << "\n";
    }
    return kExitOk;
}

int cmd_gradcheck(const Options& opt) {
    WDnCNNConfig model_cfg;
    if (!opt.config_path.empty()) {
        model_cfg = load_run_config(opt.config_path).model;
    } else {
        // Miniature default: full layer structure at desk width.
        model_cfg.feature_width = 8;
        model_cfg.mapping_depth = 3;
    }
    testing::gradcheck_fault_injection() = opt.inject_fault;
    const GradCheckReport report =
        model_gradcheck(model_cfg, opt.seed.value_or(17));
    testing::gradcheck_fault_injection() = false;

    for (const GradCheckEntry& entry : report.entries)
        std::cout << entry.parameter << "  max_rel_err "
                  << fmt_g(entry.max_rel_err) << "\n";
    std::cout << "checked " << report.checked_elements
              << " elements; worst " << fmt_g(report.worst_rel_err) << "\n";
    if (!report.passed()) {
        for (const GradCheckEntry& entry : report.entries)
            if (entry.max_rel_err >= 1e-4)
                std::cerr << "gradient check failed at " << entry.parameter
                          << " (max_rel_err " << fmt_g(entry.max_rel_err)
                          << ")\n";
        return kExitNumeric;
    }
    std::cout << "gradient check passed\n";
    return kExitOk;
}

int cmd_dwt(const Options& opt) {
    const FilterBank bank = load_filterbank(opt.bank);
    const Tensor image = read_image(opt.input);
    const SubbandSet subbands = dwt2(image, bank);
    const Tensor recon = idwt2(subbands, bank);
    const EnergyReport energy = subband_energy_ratio(image, bank);

    std::cout << "roundtrip_max_abs_error " << fmt_g(max_abs_diff(image,
                                                                  recon))
              << "\n";
    std::cout << "energy_ratio " << fmt_g(energy.coeff_to_pixel_ratio)
              << "\n";
    std::cout << "ll_share " << fmt_g(energy.ll_share) << "\n";

    if (!opt.out.empty()) {
        fs::create_directories(opt.out);
        const std::string stem = fs::path(opt.input).stem().string();
        const std::string ext = image.dim(0) == 3 ? ".ppm" : ".pgm";
        for (int k = 0; k < 4; ++k) {
            const Tensor& band = subbands.band(k);
            double lo = band[0], hi = band[0];
            for (std::int64_t i = 0; i < band.numel(); ++i) {
                lo = std::min(lo, band[i]);
                hi = std::max(hi, band[i]);
            }
            Tensor plane(band.shape());
            if (hi > lo)
                for (std::int64_t i = 0; i < band.numel(); ++i)
                    plane[i] = (band[i] - lo) / (hi - lo);
            const std::string path =
                (fs::path(opt.out) / (stem + "_" + kBandNames[static_cast<std::size_t>(k)] + ext))
                    .string();
            write_image(path, plane);
            std::cout << "band_" << kBandNames[static_cast<std::size_t>(k)]
                      << " " << path << " scale_min " << fmt_g(lo)
                      << " scale_max " << fmt_g(hi) << "\n";
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavelet-domain CNN image denoiser"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* train = app.add_subcommand("train", "train a model");
    train->add_option("--config", opt.config_path, "run configuration JSON");
    train->add_option("--out", opt.out, "output directory")->required();
    train->add_option("--seed", opt.seed, "override the training seed");
    train->add_flag("--resume", opt.resume,
                    "continue from <out>/last.ckpt when present");
    train->add_option("--max-epochs-this-run", opt.max_epochs_this_run,
                      "stop after this many epochs in this invocation");

    CLI::App* denoise_cmd =
        app.add_subcommand("denoise", "denoise a single image");
    denoise_cmd->add_option("input", opt.input, "input image (PGM/PPM)")
        ->required();
    denoise_cmd->add_option("output", opt.output, "output image")
        ->required();
    denoise_cmd->add_option("--checkpoint", opt.checkpoint,
                            "model checkpoint")
        ->required();
    denoise_cmd->add_option("--sigma", opt.sigma, "noise level in [0,75]")
        ->required();
    denoise_cmd->add_option("--reference", opt.reference,
                            "clean reference image; prints PSNR");
    denoise_cmd->add_option("--config", opt.config_path,
                            "verify the checkpoint against this config");
    denoise_cmd->add_option("--seed", opt.seed, "noise seed base");
    denoise_cmd->add_flag(
        "--synth-noise", opt.synth_noise,
        "treat the input as clean and add seeded noise before denoising");

    CLI::App* eval_cmd =
        app.add_subcommand("eval", "evaluate a model over a directory");
    eval_cmd->add_option("images", opt.dataset_dir,
                         "directory of clean images");
    eval_cmd->add_option("--checkpoint", opt.checkpoint, "model checkpoint")
        ->required();
    eval_cmd->add_option("--config", opt.config_path,
                         "run configuration JSON (sigmas, image_dir)");
    eval_cmd->add_option("--out", opt.out, "report output directory");
    eval_cmd->add_option("--seed", opt.seed, "evaluation noise seed");

    CLI::App* gradcheck_cmd = app.add_subcommand(
        "gradcheck", "finite-difference check of every parameter");
    gradcheck_cmd->add_option("--config", opt.config_path,
                              "run configuration JSON (model section)");
    gradcheck_cmd->add_option("--seed", opt.seed, "probe seed");
    gradcheck_cmd
        ->add_flag("--inject-fault", opt.inject_fault,
                   "corrupt one gradient to exercise the failure path")
        ->group("");

    CLI::App* dwt_cmd =
        app.add_subcommand("dwt", "wavelet round-trip diagnostics");
    dwt_cmd->add_option("input", opt.input, "input image")->required();
    dwt_cmd->add_option("--bank", opt.bank, "filter bank name");
    dwt_cmd->add_option("--out", opt.out,
                        "directory for the rescaled band images");
    dwt_cmd->add_option("--seed", opt.seed, "unused; accepted for symmetry");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(train)) return cmd_train(opt);
        if (app.got_subcommand(denoise_cmd)) return cmd_denoise(opt);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(opt);
        if (app.got_subcommand(gradcheck_cmd)) return cmd_gradcheck(opt);
        if (app.got_subcommand(dwt_cmd)) return cmd_dwt(opt);
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
