#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ce2/rng.hpp"
#include "ce2/vec.hpp"

namespace ce2 {

enum class EnvKind { Grid, Point };

// Occupancy grid shared by both maze kinds. Row-major, y up, (0,0) is the
// bottom-left cell.
struct GridLayout {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> occ;  // 1 = wall
    int start_x = 0;
    int start_y = 0;

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    bool free_cell(int x, int y) const {
        return in_bounds(x, y) && occ[static_cast<std::size_t>(y) * width + x] == 0;
    }
    int cell_index(int x, int y) const { return y * width + x; }
    int cell_count() const { return width * height; }
    int free_cell_count() const;

    static GridLayout open(int width, int height);
    static GridLayout four_rooms(int width, int height);
    // '#' wall, '.' free, 'S' start (free). First text line is the TOP row.
    static GridLayout from_text(const std::string& text);
};

struct ActionVec {
    Vec values;
};

struct EnvSpec {
    std::string name;
    EnvKind kind = EnvKind::Grid;
    int state_dim = 2;
    int action_count = 4;   // discrete action set exposed to tabular policies
    int action_dim = 1;     // dimension of ActionVec
    int max_episode_len = 50;
    double success_radius = 0.5;
    double step_scale = 0.3;  // point maze units per unit action component
    GridLayout walls;
    std::vector<Vec> goal_distribution;  // p_g

    Vec start_state() const;
    void validate() const;
};

struct StepResult {
    Vec next_state;
    bool reached = false;
};

EnvSpec make_grid_maze(std::string name, GridLayout layout, int max_episode_len,
                       double success_radius = 0.5);
EnvSpec make_point_maze(std::string name, GridLayout layout, int max_episode_len = 50,
                        double success_radius = 0.15, double step_scale = 0.3);
// Built-in specs: grid5, grid8, grid10, grid10_four_rooms, point10.
EnvSpec builtin_spec(const std::string& name);

// Pure transition function (wall collision resolution, no episode state).
// Grid: blocked moves stay in place. Point: motion clipped at wall boundaries.
Vec transition(const EnvSpec& spec, const Vec& state, const ActionVec& action);

// Discrete action set used by policies and the tabular model.
ActionVec action_vector(const EnvSpec& spec, int action_index);
int action_index(const EnvSpec& spec, const ActionVec& action);

bool success(const Vec& state, const Vec& goal, const EnvSpec& spec);
Vec sample_env_goal(const EnvSpec& spec, Rng& rng);

// Half-open cells [k, k+1); throws std::out_of_range outside the maze box.
int discretize(const Vec& state, const EnvSpec& spec);
Vec cell_center(const EnvSpec& spec, int cell);
// Uniform over the free region: free-cell coordinates for grids, a uniform
// point inside a free cell for point mazes.
Vec sample_free_state(const EnvSpec& spec, Rng& rng);
// Clamp a continuous position into the maze bounding box.
Vec clip_to_bounds(const EnvSpec& spec, Vec state);

class EpisodeExhausted : public std::runtime_error {
public:
    EpisodeExhausted() : std::runtime_error("episode exhausted: step counter reached max_episode_len") {}
};

class Env {
public:
    explicit Env(EnvSpec spec);

    const EnvSpec& spec() const { return spec_; }
    Vec reset(std::uint64_t seed);
    StepResult step(const ActionVec& action);
    StepResult step(int action_index);
    const Vec& state() const { return state_; }
    int steps_taken() const { return steps_; }
    bool episode_active() const { return steps_ < spec_.max_episode_len; }

    void set_goal(Vec goal) { goal_ = std::move(goal); }
    void clear_goal() { goal_.reset(); }
    const std::optional<Vec>& goal() const { return goal_; }

private:
    EnvSpec spec_;
    Vec state_;
    std::optional<Vec> goal_;
    int steps_ = 0;
};

}  // namespace ce2
