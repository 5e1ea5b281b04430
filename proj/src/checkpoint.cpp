#include "hdp/checkpoint.hpp"

#include "hdp/errors.hpp"
#include "hdp/rng.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace hdp {

namespace {
constexpr char kMagic[8] = {'H', 'D', 'P', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const DenoiserParams& params, const std::string& path) {
    if (!params.initialized()) throw ConfigError("save_checkpoint: uninitialized parameters");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::int32_t shape[5] = {params.data_dim, params.cond_dim, params.embed_dim,
                                   params.hidden_width, params.n_blocks};
    out.write(reinterpret_cast<const char*>(shape), sizeof(shape));
    const Eigen::VectorXd flat = params.flatten();
    const std::uint64_t count = static_cast<std::uint64_t>(flat.size());
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(sizeof(double) * flat.size()));
    if (!out) throw IoError("checkpoint: write failed: " + path);
}

DenoiserParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open for reading: " + path);
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("checkpoint: bad magic/version in " + path);
    std::int32_t shape[5];
    in.read(reinterpret_cast<char*>(shape), sizeof(shape));
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in) throw IoError("checkpoint: truncated header in " + path);

    Rng dummy(0);
    DenoiserParams params =
        DenoiserParams::init(shape[0], shape[1], shape[2], shape[3], shape[4], dummy);
    if (count != params.param_count())
        throw IoError("checkpoint: parameter count does not match architecture in " + path);
    Eigen::VectorXd flat(count);
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(sizeof(double) * count));
    if (!in) throw IoError("checkpoint: truncated body in " + path);
    params.unflatten(flat);
    return params;
}

void append_loss_csv(const std::vector<std::pair<int, double>>& log, const std::string& path) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("loss csv: cannot open for writing: " + path);
    if (fresh) out << "step,loss\n";
    char line[64];
    for (const auto& [step, loss] : log) {
        std::snprintf(line, sizeof(line), "%d,%.17g\n", step, loss);
        out << line;
    }
}

}  // namespace hdp
