#include "wdncnn/evaluation.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

#include "wdncnn/config.hpp"
#include "wdncnn/dataset.hpp"
#include "wdncnn/errors.hpp"
#include "wdncnn/image_io.hpp"
#include "wdncnn/rng.hpp"

namespace wdncnn {

namespace {

// Shortest decimal form that parses back to the same double.
std::string fmt_g(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_db(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct LogData {
    std::string label;
    std::vector<std::string> phases;
    std::vector<int> epochs;
    std::vector<double> losses;
};

LogData parse_training_log(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    LogData data;
    data.label = "unlabeled";
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "label=";
            const std::size_t at = line.find(key);
            if (at != std::string::npos) {
                std::size_t end = line.find(' ', at);
                if (end == std::string::npos) end = line.size();
                data.label = line.substr(at + key.size(),
                                         end - at - key.size());
            }
            continue;
        }
        if (!header_seen) {
            if (line.rfind("epoch,phase,lr,", 0) != 0)
                throw IntegrityError("training log '" + path +
                                     "': unexpected header line");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 13)
            throw IntegrityError("training log '" + path +
                                 "': malformed row '" + line + "'");
        data.epochs.push_back(std::stoi(cells[0]));
        data.phases.push_back(cells[1]);
        data.losses.push_back(std::stod(cells[7]));
    }
    if (!header_seen || data.epochs.empty())
        throw IntegrityError("training log '" + path + "': no epoch rows");
    return data;
}

double tail_variance(const std::vector<double>& losses) {
    const std::size_t n = losses.size();
    const std::size_t tail = std::max<std::size_t>(1, (n + 4) / 5);
    double mean = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) mean += losses[i];
    mean /= static_cast<double>(tail);
    double var = 0.0;
    for (std::size_t i = n - tail; i < n; ++i)
        var += (losses[i] - mean) * (losses[i] - mean);
    return var / static_cast<double>(tail);
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, double peak) {
    if (a.shape() != b.shape())
        throw ShapeError("psnr: shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    if (!(peak > 0.0)) throw DomainError("psnr: peak must be positive");
    double mse = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

std::uint64_t eval_noise_seed(std::uint64_t seed, const std::string& name,
                              double sigma) {
    return mix_seed(seed, mix_seed(fnv1a64(name),
                                   std::bit_cast<std::uint64_t>(sigma)));
}

EvalReport evaluate_dataset(ModelParameters& model,
                            const std::string& image_dir,
                            const std::vector<double>& sigmas,
                            const FilterBank& bank, std::uint64_t seed) {
    namespace fs = std::filesystem;
    if (sigmas.empty())
        throw DomainError("evaluate_dataset: empty sigma list");
    if (!fs::is_directory(image_dir))
        throw DomainError("evaluate_dataset: '" + image_dir +
                          "' is not a directory");

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm")
            names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    if (names.empty())
        throw DomainError("evaluate_dataset: no .pgm/.ppm images in '" +
                          image_dir + "'");

    EvalReport report;
    report.seed = seed;
    report.config_digest =
        fnv1a64(bank.name, fnv1a64(model_config_json(model.config)));
    report.model_digest = parameters_digest(model);

    for (const std::string& name : names) {
        Tensor clean;
        try {
            clean = read_image((fs::path(image_dir) / name).string());
        } catch (const IoError& e) {
            std::cerr << "warning: skipping unreadable image '" << name
                      << "': " << e.what() << "\n";
            continue;
        }
        if (clean.dim(0) != model.config.channels_c) {
            std::cerr << "warning: skipping image '" << name << "' with "
                      << clean.dim(0) << " channel(s); the model expects "
                      << model.config.channels_c << "\n";
            continue;
        }
        for (double sigma : sigmas) {
            const Tensor noisy =
                add_awgn(clean, sigma, eval_noise_seed(seed, name, sigma));
            const Tensor denoised = denoise(noisy, sigma, model, bank);
            report.rows.push_back({name, sigma, psnr(noisy, clean),
                                   psnr(denoised, clean)});
        }
    }
    if (report.rows.empty())
        throw DomainError("evaluate_dataset: no readable images in '" +
                          image_dir + "'");

    for (double sigma : sigmas) {
        EvalAverage avg;
        avg.sigma = sigma;
        for (const EvalRow& row : report.rows) {
            if (row.sigma != sigma) continue;
            avg.psnr_noisy += row.psnr_noisy;
            avg.psnr_denoised += row.psnr_denoised;
            ++avg.images;
        }
        if (avg.images > 0) {
            avg.psnr_noisy /= avg.images;
            avg.psnr_denoised /= avg.images;
        }
        report.averages.push_back(avg);
    }
    if (parameters_digest(model) != report.model_digest)
        throw IntegrityError(
            "evaluate_dataset: model parameters changed during evaluation");
    return report;
}

std::string eval_report_csv(const EvalReport& report) {
    std::ostringstream os;
    char head[160];
    std::snprintf(head, sizeof head,
                  "# wdncnn-eval-report seed=%llu config_digest=%016llx "
                  "model_digest=%016llx\n",
                  static_cast<unsigned long long>(report.seed),
                  static_cast<unsigned long long>(report.config_digest),
                  static_cast<unsigned long long>(report.model_digest));
    os << head << "name,sigma,psnr_noisy_db,psnr_denoised_db\n";
    for (const EvalRow& row : report.rows)
        os << row.name << ',' << fmt_g(row.sigma) << ','
           << fmt_g(row.psnr_noisy) << ',' << fmt_g(row.psnr_denoised)
           << "\n";
    for (const EvalAverage& avg : report.averages)
        os << "average," << fmt_g(avg.sigma) << ',' << fmt_g(avg.psnr_noisy)
           << ',' << fmt_g(avg.psnr_denoised) << "\n";
    return os.str();
}

std::string eval_report_table(const EvalReport& report) {
    std::size_t width = 8;
    for (const EvalRow& row : report.rows)
        width = std::max(width, row.name.size());
    std::ostringstream os;
    os << "image";
    os << std::string(width - 4, ' ') << "sigma   noisy(dB)  denoised(dB)\n";
    char buf[96];
    for (const EvalRow& row : report.rows) {
        std::snprintf(buf, sizeof buf, "%-*s %5g %10s %13s\n",
                      static_cast<int>(width), row.name.c_str(), row.sigma,
                      fmt_db(row.psnr_noisy).c_str(),
                      fmt_db(row.psnr_denoised).c_str());
        os << buf;
    }
    for (const EvalAverage& avg : report.averages) {
        std::snprintf(buf, sizeof buf, "%-*s %5g %10s %13s  (%d images)\n",
                      static_cast<int>(width), "average", avg.sigma,
                      fmt_db(avg.psnr_noisy).c_str(),
                      fmt_db(avg.psnr_denoised).c_str(), avg.images);
        os << buf;
    }
    return os.str();
}

CurveSummary compare_training_curves(const std::string& log_a_path,
                                     const std::string& log_b_path,
                                     const std::string& out_csv_path) {
    const LogData a = parse_training_log(log_a_path);
    const LogData b = parse_training_log(log_b_path);
    if (a.epochs.size() != b.epochs.size())
        throw DomainError("compare_training_curves: logs cover " +
                          std::to_string(a.epochs.size()) + " vs " +
                          std::to_string(b.epochs.size()) + " epochs");
    for (std::size_t i = 0; i < a.epochs.size(); ++i)
        if (a.epochs[i] != b.epochs[i] || a.phases[i] != b.phases[i])
            throw DomainError(
                "compare_training_curves: epoch ranges diverge at row " +
                std::to_string(i));

    std::ostringstream os;
    os << "# wdncnn-curve-comparison label_a=" << a.label
       << " label_b=" << b.label << "\n";
    os << "epoch,phase,loss_a,loss_b,difference\n";
    for (std::size_t i = 0; i < a.epochs.size(); ++i)
        os << a.epochs[i] << ',' << a.phases[i] << ',' << fmt_g(a.losses[i])
           << ',' << fmt_g(b.losses[i]) << ','
           << fmt_g(a.losses[i] - b.losses[i]) << "\n";
    write_text_file(out_csv_path, os.str());

    CurveSummary summary;
    summary.label_a = a.label;
    summary.label_b = b.label;
    summary.epochs = static_cast<int>(a.epochs.size());
    summary.final_loss_a = a.losses.back();
    summary.final_loss_b = b.losses.back();
    summary.tail_variance_a = tail_variance(a.losses);
    summary.tail_variance_b = tail_variance(b.losses);
    return summary;
}

}  // namespace wdncnn
