#include "hdp/cli_app.hpp"

#include "hdp/checkpoint.hpp"
#include "hdp/config.hpp"
#include "hdp/dataset.hpp"
#include "hdp/errors.hpp"
#include "hdp/evaluation.hpp"
#include "hdp/hierarchy.hpp"
#include "hdp/svg.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace hdp {

namespace {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

MazeMap load_map_for(const Config& cfg) {
    if (!cfg.map_file.empty()) return MazeMap::load(cfg.map_file);
    return MazeMap::default_map(cfg.cell_size);
}

// Everything a trained-model command needs; the planner context points into
// this object, so keep it alive while planning.
struct Workspace {
    Config cfg;
    MazeMap map;
    Dataset dataset;     // world units, as stored on disk
    Dataset normalized;  // training/planning space
    NoiseSchedule sched;
    GpPrior gp;
    GainCache cache;
    PlannerContext ctx;

    explicit Workspace(const Config& config)
        : cfg(config),
          map(MazeMap::load(config.maze_path())),
          dataset(load_dataset(config.dataset_path())),
          normalized(normalize(dataset)),
          sched(make_schedule(config.schedule_kind, config.n_steps, config.beta_min,
                              config.beta_max)),
          gp(build_normalized_gp(normalized, config.q_c, config.sigma0)) {
        const std::string cache_file = cfg.effective_cache_file();
        if (!cache_file.empty() && std::filesystem::exists(cache_file)) cache.load(cache_file);

        ctx.map = &map;
        ctx.stats = normalized.stats;
        ctx.dt = dataset.dt;
        ctx.horizon = dataset.horizon;
        ctx.waypoints.n_waypoints = cfg.n_waypoints;
        ctx.waypoints.include_endpoints = cfg.include_endpoints;
        ctx.obs_cfg.endpoint_var = cfg.endpoint_var;
        ctx.obs_cfg.interior_var = cfg.interior_var;
        ctx.gp = &gp;
        ctx.cache = &cache;
        ctx.sched = &sched;
        ctx.parameterization = parameterization_from_string(cfg.parameterization);
    }

    void persist_cache() const {
        const std::string cache_file = cfg.effective_cache_file();
        if (!cache_file.empty()) cache.save(cache_file);
    }

    double goal_tolerance() const { return cfg.goal_tolerance_cells * map.cell_size; }
};

TrainConfig train_config_from(const Config& cfg, int steps) {
    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.momentum = cfg.momentum;
    tc.clip_norm = cfg.clip_norm;
    tc.batch_size = cfg.batch_size;
    tc.total_steps = steps;
    tc.log_every = cfg.log_every;
    tc.parameterization = parameterization_from_string(cfg.parameterization);
    return tc;
}

int cmd_gen_data(const Config& cfg) {
    if (cfg.data_count < 1) throw ConfigError("gen-data: data.count must be >= 1");
    MazeMap map = load_map_for(cfg);
    std::filesystem::create_directories(cfg.out_dir);

    Rng rng(cfg.seed_data);
    Dataset ds;
    ds.horizon = cfg.horizon;
    ds.dt = cfg.dt;
    ds.maze_id = map.name;

    const int retry_budget = 50;
    for (int k = 0; k < cfg.data_count; ++k) {
        bool done = false;
        for (int attempt = 0; attempt < retry_budget && !done; ++attempt) {
            TaskSpec task = sample_task(map, rng, cfg.min_cell_distance);
            try {
                Trajectory traj = generate_expert(map, task, cfg.horizon, cfg.dt, rng);
                ds.tasks.push_back(task);
                ds.trajectories.push_back(std::move(traj));
                done = true;
            } catch (const UnreachableError&) {
                // resample the task
            }
        }
        if (!done)
            throw UnreachableError("gen-data: exhausted the retry budget; the map appears "
                                   "disconnected");
    }
    ds.stats = compute_norm_stats(ds.trajectories);

    int collision_ok = 0;
    for (const Trajectory& traj : ds.trajectories) collision_ok += collision_free(map, traj);

    map.save(cfg.maze_path());
    save_dataset(ds, cfg.dataset_path());
    std::cout << "gen-data: wrote " << ds.size() << " trajectories (horizon " << ds.horizon
              << ", dt " << ds.dt << ") to " << cfg.dataset_path() << "\n"
              << "gen-data: collision-check pass rate "
              << (100.0 * collision_ok / static_cast<double>(ds.size())) << "%\n";
    return 0;
}

int cmd_train(const Config& cfg, const std::string& level, const std::string& variant_name) {
    Workspace ws(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    // Shared initialization across variants: identical backbones, so
    // performance differences come from the noise model and conditioning.
    Rng init_rng(Rng::mix_seed(cfg.seed_train, 0xA11CE));

    if (level == "upper") {
        DenoiserParams params = init_upper_params(ws.ctx.waypoints, cfg.upper_hidden_width,
                                                  cfg.upper_n_blocks, cfg.embed_dim, init_rng);
        TrainConfig tc = train_config_from(cfg, cfg.upper_train_steps);
        tc.cond_mode = CondMode::keystates;
        Rng train_rng(Rng::mix_seed(cfg.seed_train, 1));
        TrainResult result =
            train_upper(ws.normalized, ws.ctx.waypoints, tc, ws.sched, std::move(params),
                        train_rng);
        save_checkpoint(result.params, cfg.upper_checkpoint_path());
        append_loss_csv(result.loss_log, cfg.loss_csv_path("upper"));
        std::cout << "train: upper level done, final loss "
                  << result.loss_log.back().second << ", checkpoint "
                  << cfg.upper_checkpoint_path() << "\n";
        return 0;
    }
    if (level != "lower") throw ConfigError("train: level must be upper or lower");

    const VariantKind kind = variant_from_string(variant_name);
    const VariantConfig variant = VariantConfig::make(kind);
    DenoiserParams params = init_lower_params(ws.dataset.horizon, ws.ctx.waypoints,
                                              cfg.hidden_width, cfg.n_blocks, cfg.embed_dim,
                                              init_rng);
    TrainConfig tc = train_config_from(cfg, cfg.train_steps);
    tc.cond_mode = variant.cond_mode;
    Rng train_rng(Rng::mix_seed(cfg.seed_train, 2 + static_cast<std::uint64_t>(kind)));
    TrainResult result = train_lower(ws.normalized, variant, ws.ctx, tc, std::move(params),
                                     train_rng);
    save_checkpoint(result.params, cfg.lower_checkpoint_path(variant.name()));
    append_loss_csv(result.loss_log, cfg.loss_csv_path(variant.name()));
    ws.persist_cache();
    std::cout << "train: " << variant.name() << " done, final loss "
              << result.loss_log.back().second << ", checkpoint "
              << cfg.lower_checkpoint_path(variant.name()) << "\n"
              << "train: gain cache hits " << ws.cache.hits() << ", misses "
              << ws.cache.misses() << "\n";
    return 0;
}

DenoiserParams load_required_checkpoint(const std::string& path, const std::string& what) {
    if (!std::filesystem::exists(path))
        throw IoError("missing checkpoint for " + what + ": " + path + " (train it first)");
    return load_checkpoint(path);
}

int cmd_plan(const Config& cfg, const std::string& variant_name) {
    Workspace ws(cfg);
    const VariantKind kind = variant_from_string(variant_name);
    const VariantConfig variant = VariantConfig::make(kind);

    DenoiserParams upper;
    if (variant.use_keystates)
        upper = load_required_checkpoint(cfg.upper_checkpoint_path(), "upper level");
    DenoiserParams lower =
        load_required_checkpoint(cfg.lower_checkpoint_path(variant.name()), variant.name());

    Rng rng(cfg.seed_plan);
    Rng task_rng = rng.derive(0);
    TaskSpec task = sample_task(ws.map, task_rng, cfg.min_cell_distance);
    Rng plan_rng = rng.derive(1);
    Trajectory traj = plan(task, variant, upper, lower, ws.ctx, plan_rng);

    save_trajectory_file(traj, task, ws.dataset.dt, cfg.trajectory_path());
    const bool ok = success(ws.map, traj, task, ws.goal_tolerance());
    std::cout << "plan: variant " << variant.name() << ", success " << (ok ? "yes" : "no")
              << ", goal distance "
              << (traj.row(traj.rows() - 1).head<2>().transpose() - task.goal).norm()
              << ", velocity MAE " << velocity_mae(traj, ws.dataset.dt) << "\n"
              << "plan: wrote " << cfg.trajectory_path() << "\n";
    return 0;
}

int cmd_eval(const Config& cfg) {
    Workspace ws(cfg);
    DenoiserParams upper = load_required_checkpoint(cfg.upper_checkpoint_path(), "upper level");
    std::map<VariantKind, DenoiserParams> lower_store;
    AblationModels models;
    models.upper = &upper;
    for (VariantKind kind : all_variants()) {
        lower_store[kind] = load_required_checkpoint(
            cfg.lower_checkpoint_path(to_string(kind)), to_string(kind));
        models.lower[kind] = &lower_store[kind];
    }

    EvalReport report =
        run_ablation(ws.ctx, models, cfg.episodes, cfg.seed_eval, ws.goal_tolerance());

    std::ofstream text(cfg.report_text_path(), std::ios::trunc);
    if (!text) throw IoError("eval: cannot write " + cfg.report_text_path());
    text << report.to_table();
    std::ofstream csv(cfg.report_csv_path(), std::ios::trunc);
    if (!csv) throw IoError("eval: cannot write " + cfg.report_csv_path());
    csv << report.to_csv();

    std::cout << report.to_table() << "eval: wrote " << cfg.report_text_path() << " and "
              << cfg.report_csv_path() << "\n";
    return 0;
}

int cmd_plot(const Config& cfg, const std::string& variant_name, const std::string& traj_file) {
    if (!traj_file.empty()) {
        // Render an existing trajectory file on the configured maze.
        Config c = cfg;
        MazeMap map = MazeMap::load(c.maze_path());
        TrajectoryFile tf = load_trajectory_file(traj_file);
        PlotPanel panel;
        panel.title = "trajectory";
        panel.trajectory = &tf.trajectory;
        panel.start = tf.task.start.head<2>();
        panel.goal = tf.task.goal;
        panel.mark_endpoints = true;
        write_svg(render_svg(map, {panel}), c.plot_path());
        std::cout << "plot: wrote " << c.plot_path() << "\n";
        return 0;
    }

    Workspace ws(cfg);
    const VariantKind kind = variant_from_string(variant_name);
    const VariantConfig variant = VariantConfig::make(kind);
    DenoiserParams upper;
    if (variant.use_keystates)
        upper = load_required_checkpoint(cfg.upper_checkpoint_path(), "upper level");
    DenoiserParams lower =
        load_required_checkpoint(cfg.lower_checkpoint_path(variant.name()), variant.name());

    Rng rng(cfg.seed_plan);
    Rng task_rng = rng.derive(0);
    TaskSpec task = sample_task(ws.map, task_rng, cfg.min_cell_distance);

    const int n = ws.sched.n_steps();
    PlanTrace trace;
    trace.snapshot_steps = {n, 3 * n / 4, n / 2, n / 4, 1, 0};
    Rng plan_rng = rng.derive(1);
    Trajectory traj = plan(task, variant, upper, lower, ws.ctx, plan_rng, &trace);

    std::vector<Eigen::Vector2d> waypoints;
    if (trace.has_keystates) {
        for (Eigen::Index k = 0; k + 1 < trace.keystates.values.size(); k += 2) {
            const Eigen::Vector2d normalized(trace.keystates.values[k],
                                             trace.keystates.values[k + 1]);
            waypoints.emplace_back(
                normalized.x() * ws.ctx.stats.scale[0] + ws.ctx.stats.center[0],
                normalized.y() * ws.ctx.stats.scale[1] + ws.ctx.stats.center[1]);
        }
    }

    std::vector<PlotPanel> panels;
    for (const auto& [step, snapshot] : trace.snapshots) {
        PlotPanel panel;
        panel.title = step == 0 ? "final" : "step " + std::to_string(step);
        panel.trajectory = &snapshot;
        panel.waypoints = waypoints;
        panel.start = task.start.head<2>();
        panel.goal = task.goal;
        panel.mark_endpoints = true;
        panels.push_back(panel);
    }
    write_svg(render_svg(ws.map, panels), cfg.plot_path());
    std::cout << "plot: variant " << variant.name() << ", " << panels.size()
              << " panels, wrote " << cfg.plot_path() << "\n";
    return 0;
}

}  // namespace

void save_trajectory_file(const Trajectory& traj, const TaskSpec& task, double dt,
                          const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("trajectory: cannot open for writing: " + path);
    out << "HDP_TRAJ v1\n";
    out << "horizon=" << traj.rows() << " state_dim=" << traj.cols()
        << " dt=" << format_double(dt) << "\n";
    out << "task";
    for (int j = 0; j < 4; ++j) out << ' ' << format_double(task.start[j]);
    out << ' ' << format_double(task.goal[0]) << ' ' << format_double(task.goal[1]) << "\n";
    for (Eigen::Index t = 0; t < traj.rows(); ++t) {
        for (Eigen::Index j = 0; j < traj.cols(); ++j)
            out << (j ? " " : "") << format_double(traj(t, j));
        out << "\n";
    }
}

TrajectoryFile load_trajectory_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("trajectory: cannot open for reading: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "HDP_TRAJ v1") throw IoError("trajectory: bad header in " + path);
    TrajectoryFile tf;
    int horizon = 0, dim = 0;
    {
        std::getline(in, line);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw IoError("trajectory: bad meta line");
            const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
            if (key == "horizon") horizon = std::stoi(value);
            else if (key == "state_dim") dim = std::stoi(value);
            else if (key == "dt") tf.dt = std::stod(value);
        }
    }
    std::getline(in, line);
    {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag != "task") throw IoError("trajectory: missing task line");
        for (int j = 0; j < 4; ++j) ls >> tf.task.start[j];
        ls >> tf.task.goal[0] >> tf.task.goal[1];
    }
    tf.trajectory.resize(horizon, dim);
    for (int t = 0; t < horizon; ++t) {
        std::getline(in, line);
        std::istringstream rs(line);
        for (int j = 0; j < dim; ++j) rs >> tf.trajectory(t, j);
        if (!rs) throw IoError("trajectory: truncated row in " + path);
    }
    return tf;
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"hdplan: hierarchical diffusion motion planner on 2D mazes"};
    app.require_subcommand(1);
    app.fallthrough(true);

    std::string config_file;
    std::vector<std::string> overrides;
    app.add_option("--config", config_file, "configuration file (key=value with [sections])");
    app.add_option("--set", overrides, "override single keys, e.g. --set training.steps=500");

    auto* gen = app.add_subcommand("gen-data", "generate the maze and expert dataset");
    auto* tr = app.add_subcommand("train", "train the upper level or one lower-level variant");
    std::string level = "lower", variant = "gp_keystates";
    tr->add_option("--level", level, "upper or lower")->check(CLI::IsMember({"upper", "lower"}));
    tr->add_option("--variant", variant,
                   "iso_plain | iso_cond | gp_plain | gp_keystates (lower level only)");
    auto* pl = app.add_subcommand("plan", "plan one task and write the trajectory file");
    std::string plan_variant = "gp_keystates";
    pl->add_option("--variant", plan_variant, "planner variant");
    auto* ev = app.add_subcommand("eval", "run the paired ablation across all variants");
    auto* pt = app.add_subcommand("plot", "render a trajectory or denoising snapshots to SVG");
    std::string plot_variant = "gp_keystates", plot_traj;
    pt->add_option("--variant", plot_variant, "planner variant for a fresh plan");
    pt->add_option("--traj", plot_traj, "render an existing trajectory file instead");

    std::vector<const char*> argv;
    argv.push_back("hdplan");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        Config cfg;
        if (!config_file.empty()) cfg = parse_config_file(config_file);
        apply_overrides(cfg, overrides);
        cfg.validate();

        if (gen->parsed()) return cmd_gen_data(cfg);
        if (tr->parsed()) return cmd_train(cfg, level, variant);
        if (pl->parsed()) return cmd_plan(cfg, plan_variant);
        if (ev->parsed()) return cmd_eval(cfg);
        if (pt->parsed()) return cmd_plot(cfg, plot_variant, plot_traj);
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace hdp
