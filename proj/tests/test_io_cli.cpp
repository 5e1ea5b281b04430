#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hdp/checkpoint.hpp"
#include "hdp/cli_app.hpp"
#include "hdp/config.hpp"
#include "hdp/errors.hpp"
#include "hdp/evaluation.hpp"
#include "hdp/svg.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace hdp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

// Tiny-scale overrides so CLI round trips stay fast.
std::vector<std::string> tiny_args(const std::string& out_dir) {
    return {
        "--set", "paths.out_dir=" + out_dir,
        "--set", "data.count=24",
        "--set", "data.horizon=24",
        "--set", "schedule.n_steps=12",
        "--set", "network.hidden_width=24",
        "--set", "network.n_blocks=1",
        "--set", "network.embed_dim=8",
        "--set", "network.upper_hidden_width=16",
        "--set", "network.upper_n_blocks=1",
        "--set", "training.steps=60",
        "--set", "training.upper_steps=60",
        "--set", "training.batch_size=8",
        "--set", "evaluation.episodes=3",
        "--set", "waypoints.count=4",
    };
}

int run(const std::string& cmd, const std::vector<std::string>& extra) {
    std::vector<std::string> args{cmd};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
}

}  // namespace

TEST_CASE("config parsing, sections, and overrides") {
    const std::string text =
        "# experiment\n"
        "[schedule]\n"
        "kind = linear\n"
        "n_steps = 32\n"
        "[training]\n"
        "steps = 123\n"
        "learning_rate = 5e-4\n"
        "[seeds]\n"
        "data = 99\n";
    Config cfg = parse_config_text(text);
    CHECK(cfg.schedule_kind == ScheduleKind::linear);
    CHECK(cfg.n_steps == 32);
    CHECK(cfg.train_steps == 123);
    CHECK(cfg.learning_rate == 5e-4);
    CHECK(cfg.seed_data == 99);
    // Untouched keys keep defaults.
    CHECK(cfg.n_waypoints == 6);

    apply_overrides(cfg, {"training.steps=77", "waypoints.count=4"});
    CHECK(cfg.train_steps == 77);
    CHECK(cfg.n_waypoints == 4);
    cfg.validate();

    CHECK_THROWS_AS(parse_config_text("[schedule]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("key_without_section = 1\n"), ConfigError);
    CHECK_THROWS_AS(apply_overrides(cfg, {"no_equals_sign"}), ConfigError);
    Config bad = cfg;
    bad.n_steps = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    Rng rng(404);
    DenoiserParams params = DenoiserParams::init(6, 3, 4, 10, 2, rng);
    Eigen::VectorXd flat = params.flatten();
    for (Eigen::Index k = 0; k < flat.size(); ++k) flat[k] = rng.normal();
    params.unflatten(flat);

    TempDir dir("hdp_ckpt_test");
    const std::string path = dir.str() + "/params.bin";
    save_checkpoint(params, path);
    DenoiserParams loaded = load_checkpoint(path);
    CHECK(loaded.data_dim == params.data_dim);
    CHECK(loaded.cond_dim == params.cond_dim);
    CHECK(loaded.flatten() == params.flatten());

    CHECK_THROWS_AS(load_checkpoint(dir.str() + "/missing.bin"), IoError);
    std::ofstream bad(dir.str() + "/bad.bin", std::ios::binary);
    bad << "not a checkpoint";
    bad.close();
    CHECK_THROWS_AS(load_checkpoint(dir.str() + "/bad.bin"), IoError);
}

TEST_CASE("trajectory files round-trip") {
    TempDir dir("hdp_traj_test");
    Trajectory traj(5, 4);
    Rng rng(405);
    for (int t = 0; t < 5; ++t)
        for (int j = 0; j < 4; ++j) traj(t, j) = rng.normal();
    TaskSpec task;
    task.start << 1.5, 2.5, 0.0, 0.0;
    task.goal << 4.5, 3.5;
    const std::string path = dir.str() + "/traj.txt";
    save_trajectory_file(traj, task, 0.1, path);
    TrajectoryFile tf = load_trajectory_file(path);
    CHECK(tf.trajectory == traj);
    CHECK(tf.task.start == task.start);
    CHECK(tf.task.goal == task.goal);
    CHECK(tf.dt == 0.1);
}

TEST_CASE("gen-data is byte-reproducible and validates input") {
    TempDir dir("hdp_gen_test");
    REQUIRE(run("gen-data", tiny_args(dir.str())) == 0);
    const std::string first = slurp(dir.str() + "/dataset.txt");

    REQUIRE(run("gen-data", tiny_args(dir.str())) == 0);
    CHECK(slurp(dir.str() + "/dataset.txt") == first);

    auto args = tiny_args(dir.str());
    args.push_back("--set");
    args.push_back("data.count=0");
    CHECK(run("gen-data", args) == 1);
}

TEST_CASE("cli pipeline: train, plan, eval, plot") {
    TempDir dir("hdp_cli_test");
    const auto args = tiny_args(dir.str());
    REQUIRE(run("gen-data", args) == 0);

    // Missing checkpoints are runtime failures (exit 2).
    CHECK(run("eval", args) == 2);
    CHECK(run("plan", args) == 2);

    auto upper_args = args;
    upper_args.insert(upper_args.end(), {"--level", "upper"});
    REQUIRE(run("train", upper_args) == 0);

    for (const std::string variant : {"iso_plain", "iso_cond", "gp_plain", "gp_keystates"}) {
        auto train_args = args;
        train_args.insert(train_args.end(), {"--level", "lower", "--variant", variant});
        REQUIRE(run("train", train_args) == 0);
        CHECK(fs::exists(dir.str() + "/ckpt_" + variant + ".bin"));
        CHECK(fs::exists(dir.str() + "/loss_" + variant + ".csv"));
    }

    // Train determinism: same seed gives identical checkpoints.
    const std::string ckpt = dir.str() + "/ckpt_gp_keystates.bin";
    const std::string before = slurp(ckpt);
    auto retrain = args;
    retrain.insert(retrain.end(), {"--level", "lower", "--variant", "gp_keystates"});
    REQUIRE(run("train", retrain) == 0);
    CHECK(slurp(ckpt) == before);

    // Plan determinism.
    auto plan_args = args;
    plan_args.insert(plan_args.end(), {"--variant", "gp_keystates"});
    REQUIRE(run("plan", plan_args) == 0);
    const std::string traj_once = slurp(dir.str() + "/trajectory.txt");
    REQUIRE(run("plan", plan_args) == 0);
    CHECK(slurp(dir.str() + "/trajectory.txt") == traj_once);

    // Eval produces the report pair, deterministically.
    REQUIRE(run("eval", args) == 0);
    const std::string report_csv = slurp(dir.str() + "/report.csv");
    int lines = 0;
    for (char c : report_csv) lines += c == '\n';
    CHECK(lines == 9);
    REQUIRE(run("eval", args) == 0);
    CHECK(slurp(dir.str() + "/report.csv") == report_csv);

    // Plot an existing trajectory file and fresh snapshots.
    auto plot_args = args;
    plot_args.insert(plot_args.end(), {"--traj", dir.str() + "/trajectory.txt"});
    REQUIRE(run("plot", plot_args) == 0);
    CHECK(slurp(dir.str() + "/plot.svg").find("<svg") == 0);

    auto plot_fresh = args;
    plot_fresh.insert(plot_fresh.end(), {"--variant", "iso_plain"});
    REQUIRE(run("plot", plot_fresh) == 0);
    const std::string svg = slurp(dir.str() + "/plot.svg");
    CHECK(svg.find("polyline") != std::string::npos);

    // Usage errors exit with 1.
    CHECK(run("train", {"--level", "sideways"}) == 1);
    CHECK(run_cli({"no-such-command"}) == 1);
}

TEST_CASE("expert trajectories plot inside free space") {
    TempDir dir("hdp_plot_test");
    REQUIRE(run("gen-data", tiny_args(dir.str())) == 0);
    Dataset ds = load_dataset(dir.str() + "/dataset.txt");
    MazeMap map = MazeMap::load(dir.str() + "/maze.txt");
    // The rendered polyline points are the trajectory positions: every one
    // must be in free space for the expert data.
    for (std::size_t k = 0; k < 5; ++k) {
        const Trajectory& traj = ds.trajectories[k];
        for (Eigen::Index t = 0; t < traj.rows(); ++t)
            CHECK(map.free_world(traj(t, 0), traj(t, 1)));
        PlotPanel panel;
        panel.trajectory = &traj;
        const std::string svg = render_svg(map, {panel});
        CHECK(svg.find("polyline") != std::string::npos);
    }
}

TEST_CASE("loss curve decreases under block smoothing on a toy dataset") {
    TempDir dir("hdp_loss_test");
    auto args = tiny_args(dir.str());
    // Constant-trajectory dataset: the easiest possible target.
    std::vector<std::string> extra = {
        "--set", "data.count=8",
        "--set", "training.steps=600",
        "--set", "training.log_every=1",
        "--set", "data.min_cell_distance=0.5",
    };
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(run("gen-data", args) == 0);

    auto train_args = args;
    train_args.insert(train_args.end(), {"--level", "lower", "--variant", "iso_plain"});
    REQUIRE(run("train", train_args) == 0);

    std::ifstream csv(dir.str() + "/loss_iso_plain.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "step,loss");
    std::vector<double> losses;
    while (std::getline(csv, line)) {
        const auto comma = line.find(',');
        losses.push_back(std::stod(line.substr(comma + 1)));
    }
    REQUIRE(losses.size() >= 600);
    // Disjoint block means over a window of 100 must not increase.
    std::vector<double> blocks;
    for (std::size_t at = 0; at + 100 <= losses.size(); at += 100) {
        double acc = 0.0;
        for (std::size_t k = at; k < at + 100; ++k) acc += losses[k];
        blocks.push_back(acc / 100.0);
    }
    for (std::size_t k = 1; k < blocks.size(); ++k) CHECK(blocks[k] <= blocks[k - 1] * (1.0 + 1e-9));
}

TEST_CASE("cache file is an optimization only") {
    TempDir dir("hdp_cache_test");
    const auto base = tiny_args(dir.str());
    REQUIRE(run("gen-data", base) == 0);

    // Train once without a cache file.
    auto no_cache = base;
    no_cache.insert(no_cache.end(), {"--level", "lower", "--variant", "gp_keystates"});
    REQUIRE(run("train", no_cache) == 0);
    const std::string without = slurp(dir.str() + "/ckpt_gp_keystates.bin");

    // Same training with a persisted cache, twice (second run warm).
    const std::string cache_path = dir.str() + "/gains.bin";
    auto with_cache = no_cache;
    with_cache.insert(with_cache.end(), {"--set", "paths.cache_file=" + cache_path});
    REQUIRE(run("train", with_cache) == 0);
    CHECK(fs::exists(cache_path));
    CHECK(slurp(dir.str() + "/ckpt_gp_keystates.bin") == without);
    REQUIRE(run("train", with_cache) == 0);
    CHECK(slurp(dir.str() + "/ckpt_gp_keystates.bin") == without);

    // Environment variable overrides the configured location.
    const std::string env_path = dir.str() + "/gains_env.bin";
    setenv("HDP_CACHE_FILE", env_path.c_str(), 1);
    REQUIRE(run("train", with_cache) == 0);
    unsetenv("HDP_CACHE_FILE");
    CHECK(fs::exists(env_path));
    CHECK(slurp(dir.str() + "/ckpt_gp_keystates.bin") == without);
}
