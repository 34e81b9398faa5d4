#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "testutil.hpp"
#include "wdncnn/checkpoint.hpp"
#include "wdncnn/config.hpp"
#include "wdncnn/image_io.hpp"
#include "wdncnn/model.hpp"
#include "wdncnn/training.hpp"

using namespace wdncnn;
using testutil::TempDir;
namespace fs = std::filesystem;

// End-to-end tests that drive the installed binary through std::system and
// assert on exit codes, captured streams, and the files it leaves behind.

TEST_SUITE_BEGIN("cli");

namespace {

constexpr const char* kImagesDir = WDNCNN_DATA_DIR "/images";

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
    static int counter = 0;
    const std::string out_path =
        dir.file("stream_" + std::to_string(counter) + ".out");
    const std::string err_path =
        dir.file("stream_" + std::to_string(counter) + ".err");
    ++counter;
    const std::string cmd = std::string(WDNCNN_CLI_PATH) + " " + args +
                            " >" + out_path + " 2>" + err_path;
    const int raw = std::system(cmd.c_str());
    CliResult result;
    result.code = WEXITSTATUS(raw);
    result.out = read_text_file(out_path);
    result.err = read_text_file(err_path);
    return result;
}

// Tiny model and a short schedule so a whole run finishes in well under a
// second: 2 pretrain epochs (the cap) plus 10 one-epoch fine-tuning blocks.
std::string desk_config_json(const std::string& image_dir) {
    return std::string(R"({
  "model": {"channels": 1, "bnm_depths": [1, 1, 1, 1],
            "mapping_depth": 2, "feature_width": 4},
  "train": {"patch_size": 16, "patches_per_epoch": 16, "batch_size": 8,
            "sigma_min": 5, "sigma_max": 50,
            "lr_initial": 1e-3, "lr_final": 1e-5,
            "epochs_per_bdt_block": 1, "pretrain_epoch_cap": 2,
            "use_bdt": true, "seed": 11},
  "eval": {"sigmas": [25, 50]},
  "wavelet": {"bank": "haar"},
  "io": {"image_dir": ")") +
           image_dir + "\"}\n}\n";
}

std::string write_desk_config(const TempDir& dir) {
    const std::string path = dir.file("config.json");
    write_text_file(path, desk_config_json(kImagesDir));
    return path;
}

// A checkpoint whose parameters are all zero, so denoising subtracts a zero
// residual and reduces to the wavelet round trip.
std::string write_zero_checkpoint(const TempDir& dir,
                                  const std::string& bank) {
    WDnCNNConfig model_cfg;
    model_cfg.bnm_depths = {1, 1, 1, 1};
    model_cfg.mapping_depth = 2;
    model_cfg.feature_width = 4;
    TrainerState state;
    state.model = build_model(model_cfg, 99);
    for (Parameter* p : state.model.all_parameters())
        for (std::int64_t i = 0; i < p->value.numel(); ++i)
            p->value[i] = 0.0;
    state.train.seed = 11;
    state.bank_name = bank;
    const std::string path = dir.file("zero_" + bank + ".ckpt");
    save_checkpoint(path, state);
    return path;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

double value_after(const std::string& text, const std::string& key) {
    const std::size_t pos = text.find(key);
    REQUIRE_MESSAGE(pos != std::string::npos, "missing '" << key << "'");
    return std::stod(text.substr(pos + key.size()));
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

// Log rows minus the wall-clock column, which legitimately differs between
// runs.
std::vector<std::string> log_without_seconds(const std::string& text) {
    std::vector<std::string> rows;
    for (const std::string& line : split_lines(text)) {
        if (line.empty()) continue;
        const std::size_t comma = line.rfind(',');
        rows.push_back(line[0] == '#' || line[0] == 'e'
                           ? line
                           : line.substr(0, comma));
    }
    return rows;
}

}  // namespace

TEST_CASE("train rejects broken configurations before touching outputs") {
    TempDir dir;
    const std::string out = dir.file("run");

    CliResult missing = run_cli(
        dir, "train --config " + dir.file("nope.json") + " --out " + out);
    CHECK(missing.code == 2);

    const std::string no_images = dir.file("no_images.json");
    write_text_file(no_images, "{}\n");
    CliResult unconfigured =
        run_cli(dir, "train --config " + no_images + " --out " + out);
    CHECK(unconfigured.code == 1);
    CHECK(unconfigured.err.find("io.image_dir") != std::string::npos);

    const std::string typo = dir.file("typo.json");
    write_text_file(typo, R"({"train":{"patchsize":16}})");
    CliResult unknown =
        run_cli(dir, "train --config " + typo + " --out " + out);
    CHECK(unknown.code == 1);
    CHECK(unknown.err.find("train.patchsize") != std::string::npos);

    CHECK(!fs::exists(fs::path(out) / "last.ckpt"));
    CHECK(!fs::exists(fs::path(out) / "training_log.csv"));
}

TEST_CASE("a desk-scale training run writes the log and checkpoints") {
    TempDir dir;
    const std::string config = write_desk_config(dir);
    const std::string out = dir.file("run");

    CliResult r = run_cli(dir, "train --config " + config + " --out " + out);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("effective config:") != std::string::npos);
    CHECK(r.out.find("\"bank\": \"haar\"") != std::string::npos);
    CHECK(r.out.find("training complete") != std::string::npos);
    // The gray model skips the shipped color image with a warning.
    CHECK(r.err.find("color_blobs.ppm") != std::string::npos);

    CHECK(fs::exists(fs::path(out) / "last.ckpt"));
    CHECK(fs::exists(fs::path(out) / "final.ckpt"));
    CHECK(fs::exists(fs::path(out) / "block_001.ckpt"));
    CHECK(fs::exists(fs::path(out) / "block_010.ckpt"));

    const std::string log =
        read_text_file((fs::path(out) / "training_log.csv").string());
    const std::vector<std::string> lines = split_lines(log);
    // Metadata comment, column header, 2 pretrain + 10 finetune rows.
    REQUIRE(lines.size() == 14);
    CHECK(lines[0].find("# wdncnn-training-log label=bdt") == 0);
    CHECK(lines[2].find("1,pretrain,") == 0);
    CHECK(lines[3].find("2,pretrain,") == 0);
    CHECK(lines[4].find("1,finetune,") == 0);
    CHECK(lines[13].find("10,finetune,") == 0);

    // last.ckpt was rewritten after the final epoch, so it matches final.
    CHECK(checkpoint_file_digest((fs::path(out) / "last.ckpt").string()) ==
          checkpoint_file_digest((fs::path(out) / "final.ckpt").string()));
}

TEST_CASE("an interrupted run resumes to the uninterrupted result") {
    TempDir dir;
    const std::string config = write_desk_config(dir);
    const std::string straight = dir.file("straight");
    const std::string split = dir.file("split");

    CliResult a =
        run_cli(dir, "train --config " + config + " --out " + straight);
    REQUIRE_MESSAGE(a.code == 0, a.err);

    CliResult b1 = run_cli(dir, "train --config " + config + " --out " +
                                    split + " --max-epochs-this-run 5");
    REQUIRE_MESSAGE(b1.code == 0, b1.err);
    CHECK(b1.out.find("stopping after 5 epoch(s)") != std::string::npos);
    CHECK(!fs::exists(fs::path(split) / "final.ckpt"));

    CliResult b2 = run_cli(dir, "train --config " + config + " --out " +
                                    split + " --resume");
    REQUIRE_MESSAGE(b2.code == 0, b2.err);
    CHECK(b2.out.find("resuming from") != std::string::npos);

    CHECK(checkpoint_file_digest(
              (fs::path(straight) / "final.ckpt").string()) ==
          checkpoint_file_digest((fs::path(split) / "final.ckpt").string()));

    const std::string log_a =
        read_text_file((fs::path(straight) / "training_log.csv").string());
    const std::string log_b =
        read_text_file((fs::path(split) / "training_log.csv").string());
    CHECK(log_without_seconds(log_a) == log_without_seconds(log_b));
}

TEST_CASE("denoising with a zero model at sigma zero returns the input") {
    TempDir dir;
    const std::string ckpt = write_zero_checkpoint(dir, "haar");
    const std::string input = std::string(kImagesDir) + "/blobs.pgm";
    const std::string output = dir.file("denoised.pgm");

    CliResult r = run_cli(dir, "denoise " + input + " " + output +
                                   " --checkpoint " + ckpt + " --sigma 0");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(read_bytes(output) == read_bytes(input));
}

TEST_CASE("denoise validates sigma, checkpoint, and config consistency") {
    TempDir dir;
    const std::string ckpt = write_zero_checkpoint(dir, "haar");
    const std::string input = std::string(kImagesDir) + "/blobs.pgm";
    const std::string output = dir.file("out.pgm");

    CliResult bad_sigma =
        run_cli(dir, "denoise " + input + " " + output + " --checkpoint " +
                         ckpt + " --sigma 80");
    CHECK(bad_sigma.code == 1);

    CliResult bad_ckpt =
        run_cli(dir, "denoise " + input + " " + output + " --checkpoint " +
                         dir.file("nope.ckpt") + " --sigma 25");
    CHECK(bad_ckpt.code == 2);

    // The checkpoint was built for haar; a sym8 config must be refused.
    std::string mismatched = desk_config_json(kImagesDir);
    const std::size_t pos = mismatched.find("haar");
    mismatched.replace(pos, 4, "sym8");
    const std::string config = dir.file("sym8.json");
    write_text_file(config, mismatched);
    CliResult bad_bank =
        run_cli(dir, "denoise " + input + " " + output + " --checkpoint " +
                         ckpt + " --sigma 25 --config " + config);
    CHECK(bad_bank.code == 2);
    CHECK(bad_bank.err.find("does not match") != std::string::npos);

    // A color input cannot feed a grayscale model.
    CliResult bad_channels = run_cli(
        dir, "denoise " + std::string(kImagesDir) + "/color_blobs.ppm " +
                 output + " --checkpoint " + ckpt + " --sigma 25");
    CHECK(bad_channels.code == 2);
    CHECK(!fs::exists(output));
}

TEST_CASE("synthetic-noise denoising agrees with the evaluation report") {
    TempDir dir;
    const std::string ckpt = write_zero_checkpoint(dir, "haar");
    const std::string input = std::string(kImagesDir) + "/blobs.pgm";
    const std::string report_dir = dir.file("report");

    CliResult eval = run_cli(
        dir, std::string("eval ") + kImagesDir + " --checkpoint " + ckpt +
                 " --seed 7 --out " + report_dir);
    REQUIRE_MESSAGE(eval.code == 0, eval.err);

    const std::string csv =
        read_text_file((fs::path(report_dir) / "report.csv").string());
    std::string eval_row;
    for (const std::string& line : split_lines(csv))
        if (line.rfind("blobs.pgm,25,", 0) == 0) eval_row = line;
    REQUIRE(!eval_row.empty());
    const std::size_t last_comma = eval_row.rfind(',');
    const double eval_noisy = value_after(eval_row, "blobs.pgm,25,");
    const double eval_denoised = std::stod(eval_row.substr(last_comma + 1));

    CliResult dn = run_cli(
        dir, "denoise " + input + " " + dir.file("d.pgm") +
                 " --checkpoint " + ckpt +
                 " --sigma 25 --seed 7 --synth-noise --reference " + input);
    REQUIRE_MESSAGE(dn.code == 0, dn.err);
    CHECK(value_after(dn.out, "psnr_noisy_db ") == eval_noisy);
    CHECK(value_after(dn.out, "psnr_denoised_db ") == eval_denoised);
}

TEST_CASE("eval reports are deterministic in the seed") {
    TempDir dir;
    const std::string ckpt = write_zero_checkpoint(dir, "haar");
    const std::string config = write_desk_config(dir);

    const std::string base = std::string("eval ") + kImagesDir +
                             " --checkpoint " + ckpt + " --config " +
                             config;
    CliResult first =
        run_cli(dir, base + " --seed 5 --out " + dir.file("r1"));
    REQUIRE_MESSAGE(first.code == 0, first.err);
    CHECK(first.err.find("color_blobs.ppm") != std::string::npos);

    CliResult second =
        run_cli(dir, base + " --seed 5 --out " + dir.file("r2"));
    REQUIRE(second.code == 0);
    CliResult third =
        run_cli(dir, base + " --seed 6 --out " + dir.file("r3"));
    REQUIRE(third.code == 0);

    const std::string csv1 =
        read_text_file(dir.file("r1") + "/report.csv");
    CHECK(csv1 == read_text_file(dir.file("r2") + "/report.csv"));
    CHECK(csv1 != read_text_file(dir.file("r3") + "/report.csv"));

    // 4 usable gray images x 2 sigmas, plus 2 average rows, the metadata
    // comment, and the column header.
    std::size_t nonempty = 0;
    for (const std::string& line : split_lines(csv1))
        if (!line.empty()) ++nonempty;
    CHECK(nonempty == 12);

    CliResult missing = run_cli(
        dir, std::string("eval ") + dir.file("empty_dir") +
                 " --checkpoint " + ckpt);
    CHECK(missing.code == 2);
    fs::create_directories(dir.file("empty_dir"));
    CliResult empty = run_cli(
        dir, std::string("eval ") + dir.file("empty_dir") +
                 " --checkpoint " + ckpt);
    CHECK(empty.code == 2);

    CliResult nowhere = run_cli(dir, "eval --checkpoint " + ckpt);
    CHECK(nowhere.code == 1);
}

TEST_CASE("gradcheck covers every tensor and honors fault injection") {
    TempDir dir;
    CliResult pass = run_cli(dir, "gradcheck");
    REQUIRE_MESSAGE(pass.code == 0, pass.err);
    CHECK(pass.out.find("gradient check passed") != std::string::npos);

    WDnCNNConfig miniature;
    miniature.feature_width = 8;
    miniature.mapping_depth = 3;
    ModelParameters model = build_model(miniature, 1);
    std::size_t reported = 0;
    for (const std::string& line : split_lines(pass.out))
        if (line.find(" max_rel_err ") != std::string::npos) ++reported;
    CHECK(reported == model.all_parameters().size());

    CliResult fail = run_cli(dir, "gradcheck --inject-fault");
    CHECK(fail.code == 3);
    CHECK(fail.err.find("gradient check failed") != std::string::npos);
}

TEST_CASE("dwt diagnostics writes the four rescaled bands") {
    TempDir dir;
    const std::string input = std::string(kImagesDir) + "/blobs.pgm";
    const std::string out = dir.file("bands");

    CliResult r =
        run_cli(dir, "dwt " + input + " --bank haar --out " + out);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(value_after(r.out, "roundtrip_max_abs_error ") < 1e-12);
    CHECK(value_after(r.out, "energy_ratio ") ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(value_after(r.out, "ll_share ") > 0.9);
    for (const char* band : {"ll", "lh", "hl", "hh"})
        CHECK(fs::exists(fs::path(out) /
                         ("blobs_" + std::string(band) + ".pgm")));

    CliResult unknown = run_cli(dir, "dwt " + input + " --bank db4");
    CHECK(unknown.code == 2);

    // dmey needs 62 pixels on each side; hand it a 32x32 image.
    Tensor small({1, 32, 32});
    for (std::int64_t i = 0; i < small.numel(); ++i)
        small[i] = static_cast<double>(i % 97) / 97.0;
    write_image(dir.file("small.pgm"), small);
    CliResult too_small =
        run_cli(dir, "dwt " + dir.file("small.pgm") + " --bank dmey");
    CHECK(too_small.code == 2);
}

TEST_SUITE_END();
