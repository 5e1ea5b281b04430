#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hdp/dataset.hpp"
#include "hdp/errors.hpp"
#include "hdp/maze.hpp"

#include <cmath>
#include <filesystem>

using namespace hdp;

namespace {

// Dense reference collision check: 100x the implementation's sampling rate.
bool oversampled_collision_oracle(const MazeMap& map, const Eigen::Vector2d& a,
                                  const Eigen::Vector2d& b) {
    const double step = map.cell_size / 400.0;
    const double dist = (b - a).norm();
    const int substeps = std::max(1, static_cast<int>(std::ceil(dist / step)));
    for (int k = 0; k <= substeps; ++k) {
        const Eigen::Vector2d p = a + (static_cast<double>(k) / substeps) * (b - a);
        if (!map.free_world(p.x(), p.y())) return false;
    }
    return true;
}

Trajectory segment_traj(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    Trajectory traj = Trajectory::Zero(2, 4);
    traj(0, 0) = a.x();
    traj(0, 1) = a.y();
    traj(1, 0) = b.x();
    traj(1, 1) = b.y();
    return traj;
}

double velocity_consistency_mae(const Trajectory& traj, double dt) {
    double acc = 0.0;
    int n = 0;
    for (Eigen::Index t = 0; t + 1 < traj.rows(); ++t)
        for (int j = 0; j < 2; ++j) {
            acc += std::abs(traj(t, 2 + j) - (traj(t + 1, j) - traj(t, j)) / dt);
            ++n;
        }
    return acc / n;
}

}  // namespace

TEST_CASE("default map sanity") {
    MazeMap map = MazeMap::default_map();
    CHECK(map.width == 7);
    CHECK(map.height == 7);
    CHECK(map.free_cell_count() == 19);
    CHECK(map.occupied(-1, 3));
    CHECK(map.occupied(2, 2));
    CHECK_FALSE(map.occupied(1, 1));
    CHECK(map.free_world(1.5, 1.5));
    CHECK_FALSE(map.free_world(2.5, 2.5));
}

TEST_CASE("collision checks on simple segments") {
    MazeMap map = MazeMap::default_map();
    // Inside one free cell.
    Trajectory inside = segment_traj({1.2, 1.2}, {1.8, 1.8});
    CHECK(collision_free(map, inside));
    // Crossing an occupied cell center.
    Trajectory through = segment_traj({1.5, 1.5}, {3.5, 2.5});
    CHECK_FALSE(collision_free(map, through));
    // Out of bounds.
    Trajectory outside = segment_traj({1.5, 1.5}, {-0.5, 1.5});
    CHECK_FALSE(collision_free(map, outside));
}

TEST_CASE("segment corpus matches the oversampled oracle") {
    MazeMap map = MazeMap::default_map();
    // Corner-adjacent and wall-grazing segments; outcomes from the dense
    // reference check, which the cell/4 sampler must reproduce here.
    const std::pair<Eigen::Vector2d, Eigen::Vector2d> corpus[] = {
        {{1.5, 1.5}, {5.5, 1.5}},  // straight corridor
        {{1.5, 1.5}, {1.5, 5.5}},  // straight corridor, left side
        {{1.5, 1.5}, {5.5, 5.5}},  // diagonal through wall bars
        {{1.2, 1.8}, {2.2, 1.8}},  // hugging the wall bar from above
        {{1.5, 1.5}, {1.5, 3.5}},  // through the left gap
        {{5.5, 1.5}, {5.5, 3.5}},  // through the right gap
        {{1.9, 1.9}, {2.1, 2.1}},  // clipping the wall corner at (2,2)
        {{1.9, 1.5}, {2.4, 1.9}},  // near-corner pass staying free
        {{3.5, 3.5}, {3.5, 4.6}},  // poking into the lower wall bar
        {{2.5, 3.5}, {4.5, 3.4}},  // corridor between the bars
    };
    for (const auto& [a, b] : corpus) {
        const bool expected = oversampled_collision_oracle(map, a, b);
        CHECK(collision_free(map, segment_traj(a, b)) == expected);
    }
}

TEST_CASE("task sampling stays on free cells") {
    MazeMap map = MazeMap::default_map();
    Rng rng(71);
    for (int k = 0; k < 1000; ++k) {
        TaskSpec task = sample_task(map, rng);
        CHECK(map.free_world(task.start(0), task.start(1)));
        CHECK(map.free_world(task.goal(0), task.goal(1)));
        CHECK(task.start.tail<2>().isZero(0.0));
        const auto s = map.world_to_cell(task.start(0), task.start(1));
        const auto g = map.world_to_cell(task.goal(0), task.goal(1));
        const double dx = s.first - g.first, dy = s.second - g.second;
        CHECK(std::sqrt(dx * dx + dy * dy) >= 3.0);
    }
    Rng r1(5), r2(5);
    TaskSpec a = sample_task(map, r1), b = sample_task(map, r2);
    CHECK(a.start == b.start);
    CHECK(a.goal == b.goal);
}

TEST_CASE("expert trajectories are feasible by construction") {
    MazeMap map = MazeMap::default_map();
    Rng rng(72);
    for (int k = 0; k < 25; ++k) {
        TaskSpec task = sample_task(map, rng);
        Trajectory traj = generate_expert(map, task, 64, 0.1, rng);
        REQUIRE(traj.rows() == 64);
        CHECK(collision_free(map, traj));
        CHECK((traj.row(0).head<2>().transpose() - task.start.head<2>()).norm() < 1e-12);
        CHECK((traj.row(63).head<2>().transpose() - task.goal).norm() < 1e-12);
        CHECK(velocity_consistency_mae(traj, 0.1) < 1e-8);
    }
}

TEST_CASE("expert on a degenerate task is constant") {
    MazeMap map = MazeMap::default_map();
    TaskSpec task;
    task.start << 1.5, 1.5, 0.0, 0.0;
    task.goal << 1.5, 1.5;
    Rng rng(73);
    Trajectory traj = generate_expert(map, task, 32, 0.1, rng);
    for (int t = 0; t < 32; ++t) {
        CHECK(traj(t, 0) == 1.5);
        CHECK(traj(t, 1) == 1.5);
        CHECK(traj(t, 2) == 0.0);
        CHECK(traj(t, 3) == 0.0);
    }
}

TEST_CASE("straight corridor gives monotone positions and steady interior speed") {
    MazeMap map = MazeMap::default_map();
    TaskSpec task;
    task.start << 1.5, 1.5, 0.0, 0.0;
    task.goal << 5.5, 1.5;
    Rng rng(74);
    Trajectory traj = generate_expert(map, task, 48, 0.1, rng);
    for (int t = 0; t + 1 < 48; ++t) CHECK(traj(t + 1, 0) >= traj(t, 0) - 1e-9);
    // Smooth-step profile: interior speed stays within a modest band.
    double lo = 1e9, hi = 0.0;
    for (int t = 16; t < 32; ++t) {
        const double speed = traj.row(t).tail<2>().norm();
        lo = std::min(lo, speed);
        hi = std::max(hi, speed);
    }
    CHECK(hi / lo < 1.6);
}

TEST_CASE("unreachable goals are reported") {
    // A map with two free pockets separated by walls.
    MazeMap map;
    map.width = 5;
    map.height = 3;
    map.cell_size = 1.0;
    map.cells = {1, 1, 1, 1, 1,
                 1, 0, 1, 0, 1,
                 1, 1, 1, 1, 1};
    map.name = "pockets";
    TaskSpec task;
    task.start << 1.5, 1.5, 0.0, 0.0;
    task.goal << 3.5, 1.5;
    Rng rng(75);
    CHECK_THROWS_AS(generate_expert(map, task, 16, 0.1, rng), UnreachableError);
}

TEST_CASE("maze serialization round-trips") {
    MazeMap map = MazeMap::default_map(0.5);
    map.name = "roundtrip";
    const std::string path = "maze_roundtrip_test.txt";
    map.save(path);
    MazeMap loaded = MazeMap::load(path);
    CHECK(loaded.width == map.width);
    CHECK(loaded.height == map.height);
    CHECK(loaded.cell_size == map.cell_size);
    CHECK(loaded.name == map.name);
    CHECK(loaded.cells == map.cells);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(MazeMap::parse("garbage"), IoError);
}

TEST_CASE("normalization maps into the unit box and round-trips") {
    MazeMap map = MazeMap::default_map();
    Rng rng(76);
    Dataset ds;
    ds.horizon = 32;
    ds.dt = 0.1;
    for (int k = 0; k < 12; ++k) {
        TaskSpec task = sample_task(map, rng);
        ds.tasks.push_back(task);
        ds.trajectories.push_back(generate_expert(map, task, 32, 0.1, rng));
    }
    Dataset normalized = normalize(ds);
    for (const Trajectory& traj : normalized.trajectories)
        CHECK(traj.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);

    for (std::size_t k = 0; k < ds.size(); ++k) {
        Trajectory back = denormalize_trajectory(normalized.trajectories[k], normalized.stats);
        CHECK((back - ds.trajectories[k]).cwiseAbs().maxCoeff() < 1e-12);
    }

    // Position scales are shared across x/y, velocity ones too, so the
    // constant-velocity relation holds in normalized space at dt'.
    const double dtn = normalized_dt(normalized.stats, ds.dt);
    for (const Trajectory& traj : normalized.trajectories)
        for (Eigen::Index t = 0; t + 1 < traj.rows(); ++t)
            for (int j = 0; j < 2; ++j)
                CHECK(std::abs(traj(t + 1, j) - traj(t, j) - dtn * traj(t, 2 + j)) < 1e-9);
}

TEST_CASE("constant dimensions pass through normalization unchanged") {
    Dataset ds;
    ds.horizon = 4;
    ds.dt = 0.1;
    for (int k = 0; k < 3; ++k) {
        Trajectory traj(4, 4);
        for (int t = 0; t < 4; ++t) traj.row(t) << 0.3 * k + 0.1 * t, 3.5, 0.7, 0.0;
        ds.trajectories.push_back(traj);
        ds.tasks.emplace_back();
    }
    Dataset normalized = normalize(ds);
    for (std::size_t k = 0; k < ds.size(); ++k) {
        // py is constant across the dataset: unchanged values.
        CHECK(normalized.trajectories[k].col(1) == ds.trajectories[k].col(1));
        CHECK(normalized.trajectories[k].col(2) == ds.trajectories[k].col(2));
        CHECK(normalized.trajectories[k].col(3) == ds.trajectories[k].col(3));
    }
}

TEST_CASE("dataset files round-trip in both formats") {
    MazeMap map = MazeMap::default_map();
    Rng rng(77);
    Dataset ds;
    ds.horizon = 16;
    ds.dt = 0.1;
    ds.maze_id = map.name;
    for (int k = 0; k < 5; ++k) {
        TaskSpec task = sample_task(map, rng);
        ds.tasks.push_back(task);
        ds.trajectories.push_back(generate_expert(map, task, 16, 0.1, rng));
    }
    ds.stats = compute_norm_stats(ds.trajectories);

    for (bool binary : {false, true}) {
        const std::string path = binary ? "ds_roundtrip.bin" : "ds_roundtrip.txt";
        save_dataset(ds, path, binary);
        Dataset loaded = load_dataset(path);
        REQUIRE(loaded.size() == ds.size());
        CHECK(loaded.horizon == ds.horizon);
        CHECK(loaded.dt == ds.dt);
        CHECK(loaded.maze_id == ds.maze_id);
        CHECK(loaded.stats.center == ds.stats.center);
        CHECK(loaded.stats.scale == ds.stats.scale);
        for (std::size_t k = 0; k < ds.size(); ++k) {
            CHECK(loaded.trajectories[k] == ds.trajectories[k]);
            CHECK(loaded.tasks[k].start == ds.tasks[k].start);
            CHECK(loaded.tasks[k].goal == ds.tasks[k].goal);
        }
        std::filesystem::remove(path);
    }
}

TEST_CASE("empty datasets are rejected") {
    Dataset ds;
    ds.horizon = 8;
    CHECK_THROWS_AS(normalize(ds), ConfigError);
    CHECK_THROWS_AS(save_dataset(ds, "nope.txt"), ConfigError);
}
