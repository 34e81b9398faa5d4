#include "wdncnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "wdncnn/config.hpp"
#include "wdncnn/errors.hpp"
#include "wdncnn/rng.hpp"

namespace wdncnn {

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

void put_str(std::string& buf, const std::string& s) {
    put_u64(buf, s.size());
    buf.append(s);
}

struct Cursor {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw IntegrityError("checkpoint: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(
                     static_cast<unsigned char>(buf[pos + i]))
                 << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(
                     static_cast<unsigned char>(buf[pos + i]))
                 << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint64_t n = u64();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

std::string serialize(const TrainerState& state) {
    std::string buf;
    buf.append(kCheckpointMagic, sizeof kCheckpointMagic);
    put_u32(buf, kCheckpointVersion);
    put_u64(buf, training_setup_digest(state));
    put_str(buf, model_config_json(state.model.config));
    put_str(buf, train_config_json(state.train));
    put_str(buf, state.bank_name);
    put_u64(buf, state.model.init_seed);
    put_u32(buf, state.phase == TrainPhase::pretrain ? 0u : 1u);
    put_u32(buf, static_cast<std::uint32_t>(state.epochs_done_in_phase));
    put_u32(buf,
            static_cast<std::uint32_t>(state.recent_pretrain_losses.size()));
    for (double l : state.recent_pretrain_losses) put_f64(buf, l);

    const std::vector<const Parameter*> params =
        state.model.all_parameters();
    put_u64(buf, static_cast<std::uint64_t>(state.model.parameter_count()));
    put_u32(buf, static_cast<std::uint32_t>(params.size()));
    for (const Parameter* p : params) {
        put_str(buf, p->name);
        put_u32(buf, static_cast<std::uint32_t>(p->value.rank()));
        for (int d = 0; d < p->value.rank(); ++d)
            put_u32(buf, static_cast<std::uint32_t>(p->value.dim(d)));
        put_u64(buf, p->step_count);
    }
    for (const Parameter* p : params) {
        for (std::int64_t i = 0; i < p->value.numel(); ++i)
            put_f64(buf, p->value[i]);
        for (std::int64_t i = 0; i < p->adam_m.numel(); ++i)
            put_f64(buf, p->adam_m[i]);
        for (std::int64_t i = 0; i < p->adam_v.numel(); ++i)
            put_f64(buf, p->adam_v[i]);
    }
    put_u64(buf, fnv1a64(buf.data(), buf.size()));
    return buf;
}

}  // namespace

std::uint64_t training_setup_digest(const TrainerState& state) {
    std::uint64_t h = fnv1a64(model_config_json(state.model.config));
    h = fnv1a64(train_config_json(state.train), h);
    h = fnv1a64(state.bank_name, h);
    return h;
}

void save_checkpoint(const std::string& path, const TrainerState& state) {
    const std::string buf = serialize(state);
    const std::string tmp = path + ".tmp";
    write_text_file(tmp, buf);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot move checkpoint into place at '" + path +
                      "': " + ec.message());
}

TrainerState load_checkpoint(const std::string& path) {
    const std::string buf = read_text_file(path);
    if (buf.size() < sizeof kCheckpointMagic + 4 + 8)
        throw IntegrityError("checkpoint: truncated file");
    if (std::memcmp(buf.data(), kCheckpointMagic, sizeof kCheckpointMagic) !=
        0)
        throw IntegrityError("checkpoint: bad magic bytes");

    Cursor trailer{buf, buf.size() - 8};
    const std::uint64_t stored_sum = trailer.u64();
    if (fnv1a64(buf.data(), buf.size() - 8) != stored_sum)
        throw IntegrityError("checkpoint: checksum mismatch");

    Cursor c{buf, sizeof kCheckpointMagic};
    const std::uint32_t version = c.u32();
    if (version != kCheckpointVersion)
        throw IntegrityError("checkpoint: unsupported format version " +
                             std::to_string(version));
    const std::uint64_t stored_digest = c.u64();
    const std::string model_json = c.str();
    const std::string train_json = c.str();
    const std::string bank_name = c.str();
    const std::uint64_t init_seed = c.u64();
    const std::uint32_t phase_tag = c.u32();
    if (phase_tag > 1)
        throw IntegrityError("checkpoint: invalid phase tag");
    const std::uint32_t epochs_done = c.u32();
    const std::uint32_t n_recent = c.u32();
    std::vector<double> recent(n_recent);
    for (double& l : recent) l = c.f64();

    TrainerState state;
    state.model = build_model(model_config_from_json(model_json), init_seed);
    state.train = train_config_from_json(train_json);
    state.bank_name = bank_name;
    state.phase =
        phase_tag == 0 ? TrainPhase::pretrain : TrainPhase::finetune;
    state.epochs_done_in_phase = static_cast<int>(epochs_done);
    state.recent_pretrain_losses = std::move(recent);
    if (training_setup_digest(state) != stored_digest)
        throw IntegrityError("checkpoint: config digest mismatch");

    const std::uint64_t total_elems = c.u64();
    if (total_elems !=
        static_cast<std::uint64_t>(state.model.parameter_count()))
        throw IntegrityError(
            "checkpoint: parameter element count does not match the model");
    const std::uint32_t n_params = c.u32();
    std::vector<Parameter*> params = state.model.all_parameters();
    if (n_params != params.size())
        throw IntegrityError(
            "checkpoint: manifest size does not match the model");

    std::vector<std::uint64_t> steps(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string name = c.str();
        if (name != params[i]->name)
            throw IntegrityError("checkpoint: manifest entry '" + name +
                                 "' does not match model parameter '" +
                                 params[i]->name + "'");
        const std::uint32_t rank = c.u32();
        if (rank != static_cast<std::uint32_t>(params[i]->value.rank()))
            throw IntegrityError("checkpoint: shape mismatch for '" + name +
                                 "'");
        for (std::uint32_t d = 0; d < rank; ++d)
            if (c.u32() != static_cast<std::uint32_t>(
                               params[i]->value.dim(static_cast<int>(d))))
                throw IntegrityError("checkpoint: shape mismatch for '" +
                                     name + "'");
        steps[i] = c.u64();
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter* p = params[i];
        p->step_count = steps[i];
        for (std::int64_t k = 0; k < p->value.numel(); ++k)
            p->value[k] = c.f64();
        for (std::int64_t k = 0; k < p->adam_m.numel(); ++k)
            p->adam_m[k] = c.f64();
        for (std::int64_t k = 0; k < p->adam_v.numel(); ++k)
            p->adam_v[k] = c.f64();
    }
    if (c.pos != buf.size() - 8)
        throw IntegrityError("checkpoint: trailing bytes after payload");
    return state;
}

std::uint64_t checkpoint_file_digest(const std::string& path) {
    const std::string buf = read_text_file(path);
    return fnv1a64(buf.data(), buf.size());
}

}  // namespace wdncnn
