#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ce2/distance.hpp"
#include "ce2/env.hpp"
#include "ce2/latent.hpp"
#include "ce2/model.hpp"
#include "ce2/rng.hpp"
#include "ce2/vec.hpp"

namespace ce2 {

struct PolicyConfig {
    double gamma = 0.95;
    double epsilon = 0.1;  // training-time action noise
    double alpha = 0.2;    // Q step size
};

// Goal-conditioned policy: tabular Q over (cell, goal cell, action), with
// states tiled onto the environment's cell grid. Zero-initialized; greedy
// ties break to the lowest action index.
class GoalPolicy {
public:
    GoalPolicy(const EnvSpec& spec, PolicyConfig config = {});

    int act(const Vec& state, const Vec& goal, bool greedy, Rng& rng) const;
    // V^G(s, g) = max_a Q(s, g, a)
    double value(const Vec& state, const Vec& goal) const;

    double q(int cell, int goal_cell, int action) const;
    void set_q(int cell, int goal_cell, int action, double value);
    void update(int cell, int goal_cell, int action, double reward, int next_cell);

    const PolicyConfig& config() const { return config_; }
    int n_cells() const { return n_cells_; }
    int n_actions() const { return n_actions_; }

    void save(std::ostream& out) const;
    void load(std::istream& in);

private:
    std::size_t index(int cell, int goal_cell, int action) const;
    int greedy_action(int cell, int goal_cell) const;

    EnvSpec spec_;
    PolicyConfig config_;
    int n_cells_;
    int n_actions_;
    std::vector<double> q_;
};

// Undirected exploration policy: tabular Q over (cell, action).
class ExplorePolicy {
public:
    ExplorePolicy(const EnvSpec& spec, PolicyConfig config = {});

    int act(const Vec& state, bool greedy, Rng& rng) const;
    // V^E(s) = max_a Q(s, a)
    double value(const Vec& state) const;

    double q(int cell, int action) const;
    void set_q(int cell, int action, double value);
    void update(int cell, int action, double reward, int next_cell);

    const PolicyConfig& config() const { return config_; }
    int n_cells() const { return n_cells_; }
    int n_actions() const { return n_actions_; }

private:
    int greedy_action(int cell) const;

    EnvSpec spec_;
    PolicyConfig config_;
    int n_cells_;
    int n_actions_;
    std::vector<double> q_;
};

using GoalRewardFn = std::function<double(const Vec& state, const Vec& goal)>;

// Q-learning over imagined rollouts, goals drawn uniformly from the supplied
// set, per-step reward evaluated at the transition origin. Updates sweep each
// rollout back-to-front so terminal values propagate in one pass. Rollouts
// start from states drawn from `starts` (the environment start state when
// empty).
void train_goal_policy(GoalPolicy& policy, const DynamicsModel& model,
                       const GoalRewardFn& reward, const std::vector<Vec>& goals,
                       int n_rollouts, int steps, Rng& rng,
                       const std::vector<Vec>& starts = {});
// r^G from the latent embedding and temporal-distance estimator
void train_goal_policy(GoalPolicy& policy, const DynamicsModel& model,
                       const LatentSpace& latent, const TemporalDistanceEstimator& dist,
                       const std::vector<Vec>& goals, int n_rollouts, int steps, Rng& rng,
                       const std::vector<Vec>& starts = {});

// Q-learning over imagined rollouts with the ensemble-disagreement reward.
void train_explore_policy(ExplorePolicy& policy, const DynamicsModel& model, int n_rollouts,
                          int steps, Rng& rng, const std::vector<Vec>& starts = {});

}  // namespace ce2
