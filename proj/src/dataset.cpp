#include "hdp/dataset.hpp"

#include "hdp/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hdp {

namespace {

constexpr double kDegenerateSpan = 1e-12;

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

NormStats compute_norm_stats(const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty()) throw ConfigError("compute_norm_stats: empty dataset");
    const Eigen::Index d = trajectories.front().cols();
    if (d % 2 != 0) throw ConfigError("compute_norm_stats: state must be [positions; velocities]");
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
    for (const Trajectory& traj : trajectories) {
        if (traj.cols() != d) throw ConfigError("compute_norm_stats: inconsistent state dims");
        lo = lo.cwiseMin(traj.colwise().minCoeff().transpose());
        hi = hi.cwiseMax(traj.colwise().maxCoeff().transpose());
    }

    const Eigen::Index half = d / 2;
    NormStats stats;
    stats.center = Eigen::VectorXd::Zero(d);
    stats.scale = Eigen::VectorXd::Ones(d);

    auto degenerate = [&](Eigen::Index j) { return hi[j] - lo[j] < kDegenerateSpan; };

    double pos_scale = 0.0, vel_scale = 0.0;
    for (Eigen::Index j = 0; j < half; ++j)
        if (!degenerate(j)) pos_scale = std::max(pos_scale, 0.5 * (hi[j] - lo[j]));
    for (Eigen::Index j = half; j < d; ++j)
        if (!degenerate(j)) vel_scale = std::max(vel_scale, std::max(std::abs(lo[j]), std::abs(hi[j])));
    if (pos_scale == 0.0) pos_scale = 1.0;
    if (vel_scale == 0.0) vel_scale = 1.0;

    for (Eigen::Index j = 0; j < half; ++j) {
        if (degenerate(j)) continue;  // identity map
        stats.center[j] = 0.5 * (hi[j] + lo[j]);
        stats.scale[j] = pos_scale;
    }
    for (Eigen::Index j = half; j < d; ++j) {
        if (degenerate(j)) continue;
        stats.center[j] = 0.0;
        stats.scale[j] = vel_scale;
    }
    return stats;
}

Trajectory normalize_trajectory(const Trajectory& traj, const NormStats& stats) {
    Trajectory out = traj;
    for (Eigen::Index j = 0; j < traj.cols(); ++j)
        out.col(j) = (traj.col(j).array() - stats.center[j]) / stats.scale[j];
    return out;
}

Trajectory denormalize_trajectory(const Trajectory& traj, const NormStats& stats) {
    Trajectory out = traj;
    for (Eigen::Index j = 0; j < traj.cols(); ++j)
        out.col(j) = traj.col(j).array() * stats.scale[j] + stats.center[j];
    return out;
}

double normalized_dt(const NormStats& stats, double dt) {
    const Eigen::Index half = stats.scale.size() / 2;
    return dt * stats.scale[half] / stats.scale[0];
}

void Dataset::validate() const {
    if (trajectories.empty()) throw ConfigError("Dataset: empty");
    if (trajectories.size() != tasks.size())
        throw ConfigError("Dataset: trajectory/task count mismatch");
    for (const Trajectory& traj : trajectories)
        if (traj.rows() != horizon || traj.cols() != 4)
            throw ConfigError("Dataset: trajectory shape mismatch");
}

Dataset normalize(const Dataset& dataset) {
    dataset.validate();
    Dataset out = dataset;
    out.stats = compute_norm_stats(dataset.trajectories);
    for (Trajectory& traj : out.trajectories) traj = normalize_trajectory(traj, out.stats);
    return out;
}

namespace {

constexpr char kBinaryMagic[8] = {'H', 'D', 'P', 'D', 'A', 'T', '0', '1'};
constexpr const char* kTextMagic = "HDP_DATASET v1";

void save_text(const Dataset& ds, std::ofstream& out) {
    out << kTextMagic << "\n";
    out << "count=" << ds.size() << " horizon=" << ds.horizon << " state_dim=4 dt="
        << format_double(ds.dt) << " maze=" << ds.maze_id << "\n";
    out << "center=";
    for (Eigen::Index j = 0; j < ds.stats.center.size(); ++j)
        out << (j ? " " : "") << format_double(ds.stats.center[j]);
    out << "\nscale=";
    for (Eigen::Index j = 0; j < ds.stats.scale.size(); ++j)
        out << (j ? " " : "") << format_double(ds.stats.scale[j]);
    out << "\n";
    for (std::size_t k = 0; k < ds.size(); ++k) {
        const TaskSpec& task = ds.tasks[k];
        out << "task";
        for (int j = 0; j < 4; ++j) out << ' ' << format_double(task.start[j]);
        out << ' ' << format_double(task.goal[0]) << ' ' << format_double(task.goal[1]) << "\n";
        const Trajectory& traj = ds.trajectories[k];
        for (Eigen::Index t = 0; t < traj.rows(); ++t) {
            for (Eigen::Index j = 0; j < traj.cols(); ++j)
                out << (j ? " " : "") << format_double(traj(t, j));
            out << "\n";
        }
    }
}

Dataset load_text(std::istream& in) {
    std::string line;
    std::getline(in, line);
    if (line != kTextMagic) throw IoError("dataset: bad text header");
    Dataset ds;
    std::size_t count = 0;
    {
        std::getline(in, line);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw IoError("dataset: bad meta line");
            const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
            if (key == "count") count = std::stoul(value);
            else if (key == "horizon") ds.horizon = std::stoi(value);
            else if (key == "dt") ds.dt = std::stod(value);
            else if (key == "maze") ds.maze_id = value;
            else if (key == "state_dim" && value != "4")
                throw IoError("dataset: unsupported state_dim");
        }
    }
    auto read_vec = [&](const char* prefix) {
        std::getline(in, line);
        const std::string p = std::string(prefix) + "=";
        if (line.rfind(p, 0) != 0) throw IoError("dataset: missing stats line");
        std::istringstream ls(line.substr(p.size()));
        std::vector<double> vals;
        double x;
        while (ls >> x) vals.push_back(x);
        return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size()).eval();
    };
    ds.stats.center = read_vec("center");
    ds.stats.scale = read_vec("scale");

    for (std::size_t k = 0; k < count; ++k) {
        std::getline(in, line);
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag != "task") throw IoError("dataset: expected task record");
        TaskSpec task;
        task.maze_id = ds.maze_id;
        for (int j = 0; j < 4; ++j) ls >> task.start[j];
        ls >> task.goal[0] >> task.goal[1];
        if (!ls) throw IoError("dataset: truncated task record");
        Trajectory traj(ds.horizon, 4);
        for (int t = 0; t < ds.horizon; ++t) {
            std::getline(in, line);
            std::istringstream rs(line);
            for (int j = 0; j < 4; ++j) rs >> traj(t, j);
            if (!rs) throw IoError("dataset: truncated trajectory row");
        }
        ds.tasks.push_back(task);
        ds.trajectories.push_back(std::move(traj));
    }
    ds.validate();
    return ds;
}

void save_binary(const Dataset& ds, std::ofstream& out) {
    out.write(kBinaryMagic, sizeof(kBinaryMagic));
    const std::uint32_t count = static_cast<std::uint32_t>(ds.size());
    const std::uint32_t horizon = static_cast<std::uint32_t>(ds.horizon);
    const std::uint32_t dim = 4;
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(&horizon), sizeof(horizon));
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(&ds.dt), sizeof(ds.dt));
    const std::uint32_t name_len = static_cast<std::uint32_t>(ds.maze_id.size());
    out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    out.write(ds.maze_id.data(), name_len);
    out.write(reinterpret_cast<const char*>(ds.stats.center.data()), sizeof(double) * 4);
    out.write(reinterpret_cast<const char*>(ds.stats.scale.data()), sizeof(double) * 4);
    for (std::size_t k = 0; k < ds.size(); ++k) {
        out.write(reinterpret_cast<const char*>(ds.tasks[k].start.data()), sizeof(double) * 4);
        out.write(reinterpret_cast<const char*>(ds.tasks[k].goal.data()), sizeof(double) * 2);
        // Row-major: states in time order.
        for (int t = 0; t < ds.horizon; ++t)
            for (int j = 0; j < 4; ++j) {
                const double v = ds.trajectories[k](t, j);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
    }
}

Dataset load_binary(std::ifstream& in) {
    char magic[sizeof(kBinaryMagic)];
    in.read(magic, sizeof(magic));
    std::uint32_t count = 0, horizon = 0, dim = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    in.read(reinterpret_cast<char*>(&horizon), sizeof(horizon));
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    Dataset ds;
    in.read(reinterpret_cast<char*>(&ds.dt), sizeof(ds.dt));
    if (!in || dim != 4) throw IoError("dataset: bad binary header");
    ds.horizon = static_cast<int>(horizon);
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    ds.maze_id.resize(name_len);
    in.read(ds.maze_id.data(), name_len);
    ds.stats.center.resize(4);
    ds.stats.scale.resize(4);
    in.read(reinterpret_cast<char*>(ds.stats.center.data()), sizeof(double) * 4);
    in.read(reinterpret_cast<char*>(ds.stats.scale.data()), sizeof(double) * 4);
    for (std::uint32_t k = 0; k < count; ++k) {
        TaskSpec task;
        task.maze_id = ds.maze_id;
        in.read(reinterpret_cast<char*>(task.start.data()), sizeof(double) * 4);
        in.read(reinterpret_cast<char*>(task.goal.data()), sizeof(double) * 2);
        Trajectory traj(ds.horizon, 4);
        for (int t = 0; t < ds.horizon; ++t)
            for (int j = 0; j < 4; ++j) in.read(reinterpret_cast<char*>(&traj(t, j)), sizeof(double));
        if (!in) throw IoError("dataset: truncated binary record");
        ds.tasks.push_back(task);
        ds.trajectories.push_back(std::move(traj));
    }
    ds.validate();
    return ds;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path, bool binary) {
    dataset.validate();
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw IoError("dataset: cannot open for writing: " + path);
    if (binary)
        save_binary(dataset, out);
    else
        save_text(dataset, out);
    if (!out) throw IoError("dataset: write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("dataset: cannot open for reading: " + path);
    char magic[8] = {};
    probe.read(magic, sizeof(magic));
    probe.close();
    if (std::memcmp(magic, kBinaryMagic, sizeof(kBinaryMagic)) == 0) {
        std::ifstream in(path, std::ios::binary);
        return load_binary(in);
    }
    std::ifstream in(path);
    return load_text(in);
}

}  // namespace hdp
