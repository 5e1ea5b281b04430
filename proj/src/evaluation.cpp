#include "hdp/evaluation.hpp"

#include "hdp/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace hdp {

bool success(const MazeMap& map, const Trajectory& traj, const TaskSpec& task, double tolerance) {
    if (traj.rows() == 0) return false;
    const Eigen::Vector2d final_pos = traj.row(traj.rows() - 1).head<2>();
    if ((final_pos - task.goal).norm() > tolerance) return false;
    return collision_free(map, traj);
}

double velocity_mae(const Trajectory& traj, double dt) {
    if (traj.rows() < 2) throw ConfigError("velocity_mae: need at least 2 steps");
    if (!(dt > 0.0)) throw ConfigError("velocity_mae: dt must be positive");
    double acc = 0.0;
    int count = 0;
    for (Eigen::Index t = 0; t + 1 < traj.rows(); ++t) {
        for (int j = 0; j < 2; ++j) {
            const double fd = (traj(t + 1, j) - traj(t, j)) / dt;
            acc += std::abs(traj(t, 2 + j) - fd);
            ++count;
        }
    }
    return acc / count;
}

ReferenceStats reference_stats(VariantKind kind) {
    switch (kind) {
        case VariantKind::iso_plain: return {36, 0.22};
        case VariantKind::iso_cond: return {42, 0.21};
        case VariantKind::gp_plain: return {14, 0.08};
        case VariantKind::gp_keystates: return {75, 0.08};
    }
    throw ConfigError("unknown variant kind");
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %12s %14s %14s %14s\n", "variant", "success",
                  "ref_success", "velocity_mae", "ref_mae");
    out << "episodes=" << episodes << " seed=" << seed << " goal_tolerance=" << goal_tolerance
        << "\n"
        << line;
    for (const VariantResult& v : variants) {
        const ReferenceStats ref = reference_stats(v.kind);
        std::snprintf(line, sizeof(line), "%-14s %7d/%-4d %11d/100 %14.4f %14.2f\n",
                      to_string(v.kind).c_str(), v.success_count, episodes, ref.success_count,
                      v.mean_velocity_mae, ref.velocity_mae);
        out << line;
    }
    return out.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "variant,metric,value,paper_reference\n";
    char line[160];
    for (const VariantResult& v : variants) {
        const ReferenceStats ref = reference_stats(v.kind);
        std::snprintf(line, sizeof(line), "%s,success_count,%d,%d\n", to_string(v.kind).c_str(),
                      v.success_count, ref.success_count);
        out << line;
        std::snprintf(line, sizeof(line), "%s,velocity_mae,%.17g,%.2f\n",
                      to_string(v.kind).c_str(), v.mean_velocity_mae, ref.velocity_mae);
        out << line;
    }
    return out.str();
}

EvalReport run_ablation(const PlannerContext& ctx, const AblationModels& models, int episodes,
                        std::uint64_t seed, double goal_tolerance,
                        const std::vector<VariantKind>& kinds) {
    if (episodes < 1) throw ConfigError("run_ablation: episodes must be >= 1");
    if (ctx.map == nullptr) throw ConfigError("run_ablation: missing maze map");
    for (VariantKind kind : kinds) {
        const auto it = models.lower.find(kind);
        if (it == models.lower.end() || it->second == nullptr || !it->second->initialized())
            throw ConfigError("run_ablation: variant " + to_string(kind) + " is untrained");
        const VariantConfig variant = VariantConfig::make(kind);
        if (variant.use_keystates &&
            (models.upper == nullptr || !models.upper->initialized()))
            throw ConfigError("run_ablation: upper level is untrained");
    }

    // One task list for every variant.
    std::vector<TaskSpec> tasks;
    tasks.reserve(episodes);
    Rng task_root(seed);
    for (int e = 0; e < episodes; ++e) {
        Rng task_rng = task_root.derive(static_cast<std::uint64_t>(e));
        tasks.push_back(sample_task(*ctx.map, task_rng));
    }

    EvalReport report;
    report.episodes = episodes;
    report.seed = seed;
    report.goal_tolerance = goal_tolerance;

    static const DenoiserParams kNoUpper;
    for (VariantKind kind : kinds) {
        const VariantConfig variant = VariantConfig::make(kind);
        const DenoiserParams& upper =
            variant.use_keystates ? *models.upper : kNoUpper;
        const DenoiserParams& lower = *models.lower.at(kind);

        VariantResult result;
        result.kind = kind;
        double mae_acc = 0.0;
        for (int e = 0; e < episodes; ++e) {
            // Derived from (seed, episode) only: paired across variants.
            Rng plan_rng(Rng::mix_seed(seed ^ 0x9e3779b9ULL, static_cast<std::uint64_t>(e)));
            const Trajectory traj = plan(tasks[e], variant, upper, lower, ctx, plan_rng);

            EpisodeRecord rec;
            rec.task = tasks[e];
            rec.collision_free = collision_free(*ctx.map, traj);
            rec.goal_distance = (traj.row(traj.rows() - 1).head<2>().transpose() - tasks[e].goal).norm();
            rec.velocity_mae = velocity_mae(traj, ctx.dt);
            rec.succeeded = rec.collision_free && rec.goal_distance <= goal_tolerance;
            result.success_count += rec.succeeded ? 1 : 0;
            mae_acc += rec.velocity_mae;
            result.episodes.push_back(std::move(rec));
        }
        result.mean_velocity_mae = mae_acc / episodes;
        report.variants.push_back(std::move(result));
    }
    return report;
}

}  // namespace hdp
