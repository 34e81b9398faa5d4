#include "wdncnn/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "wdncnn/errors.hpp"
#include "wdncnn/rng.hpp"
#include "wdncnn/wavelet.hpp"

namespace wdncnn {

namespace {

using nlohmann::json;

std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object())
        throw ConfigError("config: '" + (path.empty() ? "<root>" : path) +
                          "' must be a JSON object");
    return j;
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("config: unknown key '" +
                              join_path(path, item.key()) + "'");
    }
}

int get_int(const json& j, const char* key, const std::string& path,
            int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer())
        throw ConfigError("config: '" + join_path(path, key) +
                          "' must be an integer");
    return v.get<int>();
}

double get_double(const json& j, const char* key, const std::string& path,
                  double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number())
        throw ConfigError("config: '" + join_path(path, key) +
                          "' must be a number");
    return v.get<double>();
}

bool get_bool(const json& j, const char* key, const std::string& path,
              bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean())
        throw ConfigError("config: '" + join_path(path, key) +
                          "' must be a boolean");
    return v.get<bool>();
}

std::uint64_t get_u64(const json& j, const char* key, const std::string& path,
                      std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError("config: '" + join_path(path, key) +
                          "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string get_string(const json& j, const char* key,
                       const std::string& path, std::string fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string())
        throw ConfigError("config: '" + join_path(path, key) +
                          "' must be a string");
    return v.get<std::string>();
}

WDnCNNConfig parse_model_section(const json& m, const std::string& path) {
    require_object(m, path);
    check_keys(m, path,
               {"channels", "bnm_depths", "mapping_depth", "feature_width"});
    const int channels = get_int(m, "channels", path, 1);
    if (channels != 1 && channels != 3)
        throw ConfigError("config: '" + join_path(path, "channels") +
                          "' must be 1 or 3");
    WDnCNNConfig cfg = WDnCNNConfig::defaults_for(channels);
    if (m.contains("bnm_depths")) {
        const json& d = m.at("bnm_depths");
        if (!d.is_array() || d.size() != 4)
            throw ConfigError("config: '" + join_path(path, "bnm_depths") +
                              "' must be an array of 4 integers");
        for (std::size_t k = 0; k < 4; ++k) {
            if (!d[k].is_number_integer())
                throw ConfigError("config: '" +
                                  join_path(path, "bnm_depths") +
                                  "' must be an array of 4 integers");
            cfg.bnm_depths[k] = d[k].get<int>();
        }
    }
    cfg.mapping_depth = get_int(m, "mapping_depth", path, cfg.mapping_depth);
    cfg.feature_width =
        get_int(m, "feature_width", path, cfg.feature_width);
    return cfg;
}

TrainConfig parse_train_section(const json& t, const std::string& path) {
    require_object(t, path);
    check_keys(t, path,
               {"patch_size", "patches_per_epoch", "batch_size", "sigma_min",
                "sigma_max", "lr_initial", "lr_final",
                "epochs_per_bdt_block", "pretrain_epoch_cap", "use_bdt",
                "seed"});
    TrainConfig cfg;
    cfg.patch_size = get_int(t, "patch_size", path, cfg.patch_size);
    cfg.patches_per_epoch =
        get_int(t, "patches_per_epoch", path, cfg.patches_per_epoch);
    cfg.batch_size = get_int(t, "batch_size", path, cfg.batch_size);
    cfg.sigma_min = get_double(t, "sigma_min", path, cfg.sigma_min);
    cfg.sigma_max = get_double(t, "sigma_max", path, cfg.sigma_max);
    cfg.lr_initial = get_double(t, "lr_initial", path, cfg.lr_initial);
    cfg.lr_final = get_double(t, "lr_final", path, cfg.lr_final);
    cfg.epochs_per_bdt_block =
        get_int(t, "epochs_per_bdt_block", path, cfg.epochs_per_bdt_block);
    cfg.pretrain_epoch_cap =
        get_int(t, "pretrain_epoch_cap", path, cfg.pretrain_epoch_cap);
    cfg.use_bdt = get_bool(t, "use_bdt", path, cfg.use_bdt);
    cfg.seed = get_u64(t, "seed", path, cfg.seed);
    return cfg;
}

json model_to_json(const WDnCNNConfig& cfg) {
    return json{{"channels", cfg.channels_c},
                {"bnm_depths", cfg.bnm_depths},
                {"mapping_depth", cfg.mapping_depth},
                {"feature_width", cfg.feature_width}};
}

json train_to_json(const TrainConfig& cfg) {
    return json{{"patch_size", cfg.patch_size},
                {"patches_per_epoch", cfg.patches_per_epoch},
                {"batch_size", cfg.batch_size},
                {"sigma_min", cfg.sigma_min},
                {"sigma_max", cfg.sigma_max},
                {"lr_initial", cfg.lr_initial},
                {"lr_final", cfg.lr_final},
                {"epochs_per_bdt_block", cfg.epochs_per_bdt_block},
                {"pretrain_epoch_cap", cfg.pretrain_epoch_cap},
                {"use_bdt", cfg.use_bdt},
                {"seed", cfg.seed}};
}

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    const json root = parse_text(json_text);
    require_object(root, "");
    check_keys(root, "", {"model", "train", "eval", "wavelet", "io"});

    RunConfig cfg;
    if (root.contains("model"))
        cfg.model = parse_model_section(root.at("model"), "model");
    if (root.contains("train"))
        cfg.train = parse_train_section(root.at("train"), "train");
    if (root.contains("eval")) {
        const json& e = require_object(root.at("eval"), "eval");
        check_keys(e, "eval", {"sigmas"});
        if (e.contains("sigmas")) {
            const json& s = e.at("sigmas");
            if (!s.is_array() || s.empty())
                throw ConfigError(
                    "config: 'eval.sigmas' must be a non-empty array");
            cfg.eval.sigmas.clear();
            for (const json& v : s) {
                if (!v.is_number())
                    throw ConfigError(
                        "config: 'eval.sigmas' entries must be numbers");
                cfg.eval.sigmas.push_back(v.get<double>());
            }
        }
    }
    if (root.contains("wavelet")) {
        const json& w = require_object(root.at("wavelet"), "wavelet");
        check_keys(w, "wavelet", {"bank"});
        cfg.bank = get_string(w, "bank", "wavelet", cfg.bank);
    }
    if (root.contains("io")) {
        const json& io = require_object(root.at("io"), "io");
        check_keys(io, "io", {"image_dir"});
        cfg.io.image_dir = get_string(io, "image_dir", "io",
                                      cfg.io.image_dir);
    }

    cfg.model.validate();
    int filter_length = 0;
    try {
        filter_length =
            static_cast<int>(load_filterbank(cfg.bank).lo_dec.size());
    } catch (const LookupError& e) {
        throw ConfigError(std::string("config: 'wavelet.bank': ") + e.what());
    }
    cfg.train.validate(filter_length);
    for (double s : cfg.eval.sigmas)
        if (!(s >= 0.0 && s <= 75.0))
            throw ConfigError("config: 'eval.sigmas' must lie in [0, 75]");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_text_file(path));
}

std::string effective_config_json(const RunConfig& config) {
    const json root{{"model", model_to_json(config.model)},
                    {"train", train_to_json(config.train)},
                    {"eval", json{{"sigmas", config.eval.sigmas}}},
                    {"wavelet", json{{"bank", config.bank}}},
                    {"io", json{{"image_dir", config.io.image_dir}}}};
    return root.dump(2) + "\n";
}

std::uint64_t run_config_digest(const RunConfig& config) {
    return fnv1a64(effective_config_json(config));
}

std::string model_config_json(const WDnCNNConfig& config) {
    return model_to_json(config).dump();
}

WDnCNNConfig model_config_from_json(const std::string& text) {
    const WDnCNNConfig cfg = parse_model_section(parse_text(text), "model");
    cfg.validate();
    return cfg;
}

std::string train_config_json(const TrainConfig& config) {
    return train_to_json(config).dump();
}

TrainConfig train_config_from_json(const std::string& text) {
    return parse_train_section(parse_text(text), "train");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace wdncnn
