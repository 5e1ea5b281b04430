#include "hdp/maze.hpp"

#include "hdp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

namespace hdp {

int MazeMap::free_cell_count() const {
    int n = 0;
    for (std::uint8_t c : cells) n += (c == 0);
    return n;
}

void MazeMap::validate() const {
    if (width < 3 || height < 3) throw ConfigError("MazeMap: grid must be at least 3x3");
    if (!(cell_size > 0.0)) throw ConfigError("MazeMap: cell_size must be positive");
    if (cells.size() != static_cast<std::size_t>(width) * height)
        throw ConfigError("MazeMap: cell count does not match dimensions");
    for (int x = 0; x < width; ++x)
        if (!occupied(x, 0) || !occupied(x, height - 1))
            throw ConfigError("MazeMap: border cells must be occupied");
    for (int y = 0; y < height; ++y)
        if (!occupied(0, y) || !occupied(width - 1, y))
            throw ConfigError("MazeMap: border cells must be occupied");
    if (free_cell_count() < 2) throw ConfigError("MazeMap: needs at least two free cells");
}

MazeMap MazeMap::default_map(double cell_size) {
    const char* rows[] = {
        "#######",
        "#.....#",
        "#.###.#",
        "#.....#",
        "#.###.#",
        "#.....#",
        "#######",
    };
    MazeMap map;
    map.width = 7;
    map.height = 7;
    map.cell_size = cell_size;
    map.cells.resize(49);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 7; ++x) map.cells[y * 7 + x] = rows[y][x] == '#' ? 1 : 0;
    map.validate();
    return map;
}

std::string MazeMap::serialize() const {
    std::ostringstream out;
    out << "HDP_MAZE v1\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "cell_size=%.17g\n", cell_size);
    out << buf << "name=" << name << "\n";
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) out << (occupied(x, y) ? '#' : '.');
        out << '\n';
    }
    return out.str();
}

MazeMap MazeMap::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "HDP_MAZE v1")
        throw IoError("maze: missing HDP_MAZE v1 header");
    MazeMap map;
    if (!std::getline(in, line) || line.rfind("cell_size=", 0) != 0)
        throw IoError("maze: missing cell_size line");
    map.cell_size = std::stod(line.substr(10));
    if (!std::getline(in, line) || line.rfind("name=", 0) != 0)
        throw IoError("maze: missing name line");
    map.name = line.substr(5);
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(line);
    }
    if (rows.empty()) throw IoError("maze: empty grid");
    map.height = static_cast<int>(rows.size());
    map.width = static_cast<int>(rows[0].size());
    map.cells.resize(static_cast<std::size_t>(map.width) * map.height);
    for (int y = 0; y < map.height; ++y) {
        if (static_cast<int>(rows[y].size()) != map.width)
            throw IoError("maze: ragged grid rows");
        for (int x = 0; x < map.width; ++x) {
            const char c = rows[y][x];
            if (c != '#' && c != '.') throw IoError("maze: grid characters must be '#' or '.'");
            map.cells[static_cast<std::size_t>(y) * map.width + x] = c == '#' ? 1 : 0;
        }
    }
    map.validate();
    return map;
}

void MazeMap::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("maze: cannot open for writing: " + path);
    out << serialize();
}

MazeMap MazeMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("maze: cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool collision_free(const MazeMap& map, const Trajectory& traj) {
    if (traj.rows() == 0) return true;
    const double step = map.cell_size / 4.0;
    if (!map.free_world(traj(0, 0), traj(0, 1))) return false;
    for (Eigen::Index t = 0; t + 1 < traj.rows(); ++t) {
        const Eigen::Vector2d a(traj(t, 0), traj(t, 1));
        const Eigen::Vector2d b(traj(t + 1, 0), traj(t + 1, 1));
        const double dist = (b - a).norm();
        const int substeps = std::max(1, static_cast<int>(std::ceil(dist / step)));
        for (int k = 1; k <= substeps; ++k) {
            const Eigen::Vector2d p = a + (static_cast<double>(k) / substeps) * (b - a);
            if (!map.free_world(p.x(), p.y())) return false;
        }
    }
    return true;
}

TaskSpec sample_task(const MazeMap& map, Rng& rng, double min_cell_distance) {
    map.validate();
    std::vector<std::pair<int, int>> free_cells;
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x)
            if (!map.occupied(x, y)) free_cells.emplace_back(x, y);

    for (int attempt = 0; attempt < 100000; ++attempt) {
        const auto& s = free_cells[rng.uniform_int(0, static_cast<int>(free_cells.size()) - 1)];
        const auto& g = free_cells[rng.uniform_int(0, static_cast<int>(free_cells.size()) - 1)];
        if (s == g) continue;
        const double dx = s.first - g.first, dy = s.second - g.second;
        if (std::sqrt(dx * dx + dy * dy) < min_cell_distance) continue;
        TaskSpec task;
        task.start.head<2>() = map.cell_center(s.first, s.second);
        task.start.tail<2>().setZero();
        task.goal = map.cell_center(g.first, g.second);
        task.maze_id = map.name;
        return task;
    }
    throw ConfigError("sample_task: no start/goal pair satisfies the distance constraint");
}

namespace {

// Deterministic 4-connected A* on free cells; returns the cell path
// including both endpoints, or empty if unreachable.
std::vector<std::pair<int, int>> astar(const MazeMap& map, std::pair<int, int> start,
                                       std::pair<int, int> goal) {
    const int w = map.width, h = map.height;
    auto idx = [w](int x, int y) { return y * w + x; };
    const int n = w * h;
    std::vector<int> g_cost(n, -1), parent(n, -1);

    // (f, -g, cell index): ties broken toward deeper nodes, then lower index.
    using Node = std::tuple<int, int, int>;
    std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
    auto heuristic = [&](int x, int y) {
        return std::abs(x - goal.first) + std::abs(y - goal.second);
    };
    g_cost[idx(start.first, start.second)] = 0;
    open.emplace(heuristic(start.first, start.second), 0, idx(start.first, start.second));

    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    while (!open.empty()) {
        const auto [f, neg_g, at] = open.top();
        open.pop();
        const int x = at % w, y = at / w;
        if (-neg_g > g_cost[at]) continue;
        if (x == goal.first && y == goal.second) break;
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (map.occupied(nx, ny)) continue;
            const int next = idx(nx, ny);
            const int cand = g_cost[at] + 1;
            if (g_cost[next] < 0 || cand < g_cost[next]) {
                g_cost[next] = cand;
                parent[next] = at;
                open.emplace(cand + heuristic(nx, ny), -cand, next);
            }
        }
    }

    std::vector<std::pair<int, int>> path;
    int at = idx(goal.first, goal.second);
    if (g_cost[at] < 0) return path;
    while (at >= 0) {
        path.emplace_back(at % w, at / w);
        at = parent[at];
    }
    std::reverse(path.begin(), path.end());
    return path;
}

double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }

// Positions along a polyline at a given arc length.
Eigen::Vector2d point_at_arclength(const std::vector<Eigen::Vector2d>& pts,
                                   const std::vector<double>& cum, double s) {
    if (s <= 0.0) return pts.front();
    if (s >= cum.back()) return pts.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const std::size_t seg = static_cast<std::size_t>(it - cum.begin()) - 1;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double u = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
    return pts[seg] + u * (pts[seg + 1] - pts[seg]);
}

Eigen::MatrixXd resample_path(const std::vector<Eigen::Vector2d>& waypoints, int horizon) {
    std::vector<double> cum{0.0};
    for (std::size_t k = 0; k + 1 < waypoints.size(); ++k)
        cum.push_back(cum.back() + (waypoints[k + 1] - waypoints[k]).norm());
    const double total = cum.back();
    Eigen::MatrixXd positions(horizon, 2);
    for (int t = 0; t < horizon; ++t) {
        const double u = static_cast<double>(t) / (horizon - 1);
        const Eigen::Vector2d p = point_at_arclength(waypoints, cum, total * smoothstep(u));
        positions.row(t) = p.transpose();
    }
    return positions;
}

Eigen::MatrixXd lowpass_positions(const Eigen::MatrixXd& positions, int passes, int half_window) {
    Eigen::MatrixXd smoothed = positions;
    const Eigen::Index n = positions.rows();
    for (int pass = 0; pass < passes; ++pass) {
        Eigen::MatrixXd next = smoothed;
        for (Eigen::Index t = 1; t + 1 < n; ++t) {
            Eigen::RowVector2d acc = Eigen::RowVector2d::Zero();
            int count = 0;
            for (Eigen::Index k = std::max<Eigen::Index>(0, t - half_window);
                 k <= std::min(n - 1, t + half_window); ++k) {
                acc += smoothed.row(k);
                ++count;
            }
            next.row(t) = acc / count;
        }
        smoothed = next;
    }
    return smoothed;
}

Trajectory finish_trajectory(const Eigen::MatrixXd& positions, double dt) {
    const Eigen::Index h = positions.rows();
    Trajectory traj(h, 4);
    traj.leftCols(2) = positions;
    for (Eigen::Index t = 0; t + 1 < h; ++t)
        traj.row(t).tail(2) = (positions.row(t + 1) - positions.row(t)) / dt;
    traj.row(h - 1).tail(2) = traj.row(h - 2).tail(2);
    return traj;
}

}  // namespace

Trajectory generate_expert(const MazeMap& map, const TaskSpec& task, int horizon, double dt,
                           Rng& rng) {
    if (horizon < 2) throw ConfigError("generate_expert: horizon must be >= 2");
    if (!(dt > 0.0)) throw ConfigError("generate_expert: dt must be positive");
    if (!map.free_world(task.start(0), task.start(1)) ||
        !map.free_world(task.goal(0), task.goal(1)))
        throw ConfigError("generate_expert: start or goal is not in free space");

    const auto start_cell = map.world_to_cell(task.start(0), task.start(1));
    const auto goal_cell = map.world_to_cell(task.goal(0), task.goal(1));

    if (start_cell == goal_cell) {
        Trajectory traj = Trajectory::Zero(horizon, 4);
        traj.leftCols(2).rowwise() = task.start.head<2>().transpose();
        return traj;
    }

    const auto path = astar(map, start_cell, goal_cell);
    if (path.empty())
        throw UnreachableError("generate_expert: goal cell unreachable from start cell");

    // Cell path to world waypoints; interior centers get a small jitter for
    // dataset diversity, dropped if the jittered path collides.
    auto build_waypoints = [&](double jitter) {
        std::vector<Eigen::Vector2d> pts;
        pts.emplace_back(task.start(0), task.start(1));
        for (std::size_t k = 1; k + 1 < path.size(); ++k) {
            Eigen::Vector2d c = map.cell_center(path[k].first, path[k].second);
            if (jitter > 0.0) {
                c.x() += rng.uniform_in(-jitter, jitter) * map.cell_size;
                c.y() += rng.uniform_in(-jitter, jitter) * map.cell_size;
            }
            pts.push_back(c);
        }
        pts.emplace_back(task.goal(0), task.goal(1));
        return pts;
    };

    Eigen::MatrixXd positions = resample_path(build_waypoints(0.15), horizon);
    {
        Trajectory probe = finish_trajectory(positions, dt);
        if (!collision_free(map, probe)) positions = resample_path(build_waypoints(0.0), horizon);
    }

    // Low-pass smoothing with collision re-check and fallback.
    Eigen::MatrixXd smoothed = lowpass_positions(positions, 2, 2);
    Trajectory candidate = finish_trajectory(smoothed, dt);
    if (collision_free(map, candidate)) return candidate;

    Trajectory fallback = finish_trajectory(positions, dt);
    if (!collision_free(map, fallback))
        throw UnreachableError("generate_expert: could not produce a collision-free trajectory");
    return fallback;
}

}  // namespace hdp
