#include "ce2/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ce2 {

namespace {

constexpr double kBoundaryEps = 1e-9;

// grid action set: Right, Up, Left, Down
constexpr int kGridDx[4] = {1, 0, -1, 0};
constexpr int kGridDy[4] = {0, 1, 0, -1};

// point action set: 8 compass directions, components in {-1, 0, 1}
constexpr double kPointDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr double kPointDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

}  // namespace

int GridLayout::free_cell_count() const {
    int n = 0;
    for (auto c : occ) n += (c == 0);
    return n;
}

GridLayout GridLayout::open(int width, int height) {
    GridLayout g;
    g.width = width;
    g.height = height;
    g.occ.assign(static_cast<std::size_t>(width) * height, 0);
    return g;
}

GridLayout GridLayout::four_rooms(int width, int height) {
    GridLayout g = open(width, height);
    const int mx = width / 2;
    const int my = height / 2;
    const int door_low_y = my / 2;
    const int door_high_y = my + (height - my) / 2;
    const int door_low_x = mx / 2;
    const int door_high_x = mx + (width - mx) / 2;
    for (int y = 0; y < height; ++y) {
        if (y == door_low_y || y == door_high_y) continue;
        g.occ[static_cast<std::size_t>(y) * width + mx] = 1;
    }
    for (int x = 0; x < width; ++x) {
        if (x == door_low_x || x == door_high_x) continue;
        g.occ[static_cast<std::size_t>(my) * width + x] = 1;
    }
    g.occ[static_cast<std::size_t>(my) * width + mx] = 1;
    return g;
}

GridLayout GridLayout::from_text(const std::string& text) {
    std::vector<std::string> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) rows.push_back(line);
    }
    if (rows.empty()) throw std::invalid_argument("map text: no rows");
    const std::size_t width = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != width) throw std::invalid_argument("map text: ragged rows");
    }
    GridLayout g;
    g.width = static_cast<int>(width);
    g.height = static_cast<int>(rows.size());
    g.occ.assign(static_cast<std::size_t>(g.width) * g.height, 1);
    bool have_start = false;
    for (int y = 0; y < g.height; ++y) {
        // first text line is the top row
        const std::string& r = rows[static_cast<std::size_t>(g.height - 1 - y)];
        for (int x = 0; x < g.width; ++x) {
            const char c = r[static_cast<std::size_t>(x)];
            switch (c) {
                case '#': break;
                case '.':
                    g.occ[static_cast<std::size_t>(y) * g.width + x] = 0;
                    break;
                case 'S':
                    g.occ[static_cast<std::size_t>(y) * g.width + x] = 0;
                    g.start_x = x;
                    g.start_y = y;
                    have_start = true;
                    break;
                default:
                    throw std::invalid_argument(std::string("map text: bad character '") + c + "'");
            }
        }
    }
    if (!have_start) {
        // lowest-left free cell
        for (int y = 0; y < g.height && !have_start; ++y) {
            for (int x = 0; x < g.width && !have_start; ++x) {
                if (g.free_cell(x, y)) {
                    g.start_x = x;
                    g.start_y = y;
                    have_start = true;
                }
            }
        }
        if (!have_start) throw std::invalid_argument("map text: no free cell");
    }
    return g;
}

Vec EnvSpec::start_state() const {
    if (kind == EnvKind::Grid) {
        return {static_cast<double>(walls.start_x), static_cast<double>(walls.start_y)};
    }
    return {walls.start_x + 0.5, walls.start_y + 0.5};
}

void EnvSpec::validate() const {
    if (success_radius <= 0.0) throw std::invalid_argument("EnvSpec: success_radius must be > 0");
    if (max_episode_len < 2) throw std::invalid_argument("EnvSpec: max_episode_len must be >= 2");
    if (walls.width <= 0 || walls.height <= 0) throw std::invalid_argument("EnvSpec: empty wall layout");
    if (!walls.free_cell(walls.start_x, walls.start_y)) {
        throw std::invalid_argument("EnvSpec: start cell is not free");
    }
    if (state_dim != 2) throw std::invalid_argument("EnvSpec: state_dim must be 2 for maze envs");
    if (kind == EnvKind::Point && step_scale <= 0.0) {
        throw std::invalid_argument("EnvSpec: step_scale must be > 0");
    }
}

EnvSpec make_grid_maze(std::string name, GridLayout layout, int max_episode_len,
                       double success_radius) {
    EnvSpec spec;
    spec.name = std::move(name);
    spec.kind = EnvKind::Grid;
    spec.state_dim = 2;
    spec.action_count = 4;
    spec.action_dim = 1;
    spec.max_episode_len = max_episode_len;
    spec.success_radius = success_radius;
    spec.walls = std::move(layout);
    spec.goal_distribution = {
        {static_cast<double>(spec.walls.width - 1), static_cast<double>(spec.walls.height - 1)}};
    spec.validate();
    return spec;
}

EnvSpec make_point_maze(std::string name, GridLayout layout, int max_episode_len,
                        double success_radius, double step_scale) {
    EnvSpec spec;
    spec.name = std::move(name);
    spec.kind = EnvKind::Point;
    spec.state_dim = 2;
    spec.action_count = 8;
    spec.action_dim = 2;
    spec.max_episode_len = max_episode_len;
    spec.success_radius = success_radius;
    spec.step_scale = step_scale;
    spec.walls = std::move(layout);
    spec.goal_distribution = {{spec.walls.width - 0.5, spec.walls.height - 0.5}};
    spec.validate();
    return spec;
}

EnvSpec builtin_spec(const std::string& name) {
    if (name == "grid5") return make_grid_maze(name, GridLayout::open(5, 5), 30);
    if (name == "grid8") return make_grid_maze(name, GridLayout::open(8, 8), 40);
    if (name == "grid10") return make_grid_maze(name, GridLayout::open(10, 10), 50);
    if (name == "grid10_four_rooms") {
        return make_grid_maze(name, GridLayout::four_rooms(10, 10), 50);
    }
    if (name == "point10") return make_point_maze(name, GridLayout::open(10, 10));
    throw std::invalid_argument("unknown environment name: " + name);
}

namespace {

// Move along one axis, stopping at the first wall border. Half-open cells:
// a point exactly on border k belongs to cell k, so leftward clips land on
// the border itself and rightward clips land just inside it.
double move_axis(const GridLayout& g, double pos, double delta, int other_cell, bool horizontal) {
    const double target = pos + delta;
    int cell = static_cast<int>(std::floor(pos));
    auto is_free = [&](int c) {
        return horizontal ? g.free_cell(c, other_cell) : g.free_cell(other_cell, c);
    };
    if (delta > 0.0) {
        while (static_cast<int>(std::floor(target)) > cell) {
            if (!is_free(cell + 1)) return cell + 1.0 - kBoundaryEps;
            ++cell;
        }
        return target;
    }
    if (delta < 0.0) {
        while (static_cast<int>(std::floor(target)) < cell) {
            if (!is_free(cell - 1)) return static_cast<double>(cell);
            --cell;
        }
        return target;
    }
    return pos;
}

}  // namespace

Vec transition(const EnvSpec& spec, const Vec& state, const ActionVec& action) {
    if (static_cast<int>(state.size()) != spec.state_dim) {
        throw std::invalid_argument("transition: state dimension mismatch");
    }
    if (spec.kind == EnvKind::Grid) {
        if (action.values.size() != 1) throw std::invalid_argument("transition: grid action must be 1-d");
        const int a = static_cast<int>(action.values[0]);
        if (a < 0 || a >= 4) throw std::invalid_argument("transition: grid action index out of range");
        const int x = static_cast<int>(std::llround(state[0]));
        const int y = static_cast<int>(std::llround(state[1]));
        const int nx = x + kGridDx[a];
        const int ny = y + kGridDy[a];
        if (!spec.walls.free_cell(nx, ny)) return state;  // blocked moves stay in place
        return {static_cast<double>(nx), static_cast<double>(ny)};
    }
    if (action.values.size() != 2) throw std::invalid_argument("transition: point action must be 2-d");
    const double ax = std::clamp(action.values[0], -1.0, 1.0);
    const double ay = std::clamp(action.values[1], -1.0, 1.0);
    Vec next = state;
    next[0] = move_axis(spec.walls, next[0], spec.step_scale * ax,
                        static_cast<int>(std::floor(next[1])), true);
    next[1] = move_axis(spec.walls, next[1], spec.step_scale * ay,
                        static_cast<int>(std::floor(next[0])), false);
    return next;
}

ActionVec action_vector(const EnvSpec& spec, int index) {
    if (index < 0 || index >= spec.action_count) {
        throw std::invalid_argument("action_vector: index out of range");
    }
    if (spec.kind == EnvKind::Grid) return {{static_cast<double>(index)}};
    return {{kPointDx[index], kPointDy[index]}};
}

int action_index(const EnvSpec& spec, const ActionVec& action) {
    if (spec.kind == EnvKind::Grid) {
        const int a = static_cast<int>(action.values.at(0));
        if (a < 0 || a >= spec.action_count) {
            throw std::invalid_argument("action_index: out of range");
        }
        return a;
    }
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.action_count; ++i) {
        const double dx = action.values.at(0) - kPointDx[i];
        const double dy = action.values.at(1) - kPointDy[i];
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

bool success(const Vec& state, const Vec& goal, const EnvSpec& spec) {
    if (state.size() != goal.size()) {
        throw std::invalid_argument("success: state/goal dimension mismatch");
    }
    return euclidean_distance(state, goal) < spec.success_radius;
}

Vec sample_env_goal(const EnvSpec& spec, Rng& rng) {
    if (spec.goal_distribution.empty()) {
        throw std::invalid_argument("sample_env_goal: empty goal distribution");
    }
    return spec.goal_distribution[static_cast<std::size_t>(
        uniform_index(rng, static_cast<int>(spec.goal_distribution.size())))];
}

int discretize(const Vec& state, const EnvSpec& spec) {
    if (static_cast<int>(state.size()) != spec.state_dim) {
        throw std::invalid_argument("discretize: state dimension mismatch");
    }
    const int x = static_cast<int>(std::floor(state[0]));
    const int y = static_cast<int>(std::floor(state[1]));
    if (!spec.walls.in_bounds(x, y)) throw std::out_of_range("discretize: state outside maze bounds");
    return spec.walls.cell_index(x, y);
}

Vec cell_center(const EnvSpec& spec, int cell) {
    if (cell < 0 || cell >= spec.walls.cell_count()) {
        throw std::out_of_range("cell_center: cell index out of range");
    }
    const int x = cell % spec.walls.width;
    const int y = cell / spec.walls.width;
    if (spec.kind == EnvKind::Grid) return {static_cast<double>(x), static_cast<double>(y)};
    return {x + 0.5, y + 0.5};
}

Vec sample_free_state(const EnvSpec& spec, Rng& rng) {
    if (spec.kind == EnvKind::Grid) {
        std::vector<int> free;
        free.reserve(static_cast<std::size_t>(spec.walls.cell_count()));
        for (int c = 0; c < spec.walls.cell_count(); ++c) {
            if (spec.walls.occ[static_cast<std::size_t>(c)] == 0) free.push_back(c);
        }
        if (free.empty()) throw std::runtime_error("sample_free_state: no free cells");
        return cell_center(spec, free[static_cast<std::size_t>(
                                     uniform_index(rng, static_cast<int>(free.size())))]);
    }
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double x = uniform01(rng) * spec.walls.width;
        const double y = uniform01(rng) * spec.walls.height;
        if (spec.walls.free_cell(static_cast<int>(std::floor(x)), static_cast<int>(std::floor(y)))) {
            return {x, y};
        }
    }
    throw std::runtime_error("sample_free_state: rejection sampling failed");
}

Vec clip_to_bounds(const EnvSpec& spec, Vec state) {
    state[0] = std::clamp(state[0], 0.0, spec.walls.width - kBoundaryEps);
    state[1] = std::clamp(state[1], 0.0, spec.walls.height - kBoundaryEps);
    return state;
}

Env::Env(EnvSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    state_ = spec_.start_state();
}

Vec Env::reset(std::uint64_t /*seed*/) {
    // both built-in mazes have a fixed start; the seed is part of the
    // contract so stochastic-start envs can slot in behind the same API
    state_ = spec_.start_state();
    steps_ = 0;
    return state_;
}

StepResult Env::step(const ActionVec& action) {
    if (steps_ >= spec_.max_episode_len) throw EpisodeExhausted();
    state_ = transition(spec_, state_, action);
    ++steps_;
    StepResult r;
    r.next_state = state_;
    r.reached = goal_.has_value() && success(state_, *goal_, spec_);
    return r;
}

StepResult Env::step(int index) { return step(action_vector(spec_, index)); }

}  // namespace ce2
