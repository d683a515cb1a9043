#include "ce2/agents.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace ce2 {

GoalPolicy::GoalPolicy(const EnvSpec& spec, PolicyConfig config)
    : spec_(spec),
      config_(config),
      n_cells_(spec.walls.cell_count()),
      n_actions_(spec.action_count),
      q_(static_cast<std::size_t>(n_cells_) * n_cells_ * n_actions_, 0.0) {}

std::size_t GoalPolicy::index(int cell, int goal_cell, int action) const {
    return (static_cast<std::size_t>(cell) * n_cells_ + goal_cell) * n_actions_ + action;
}

double GoalPolicy::q(int cell, int goal_cell, int action) const {
    return q_[index(cell, goal_cell, action)];
}

void GoalPolicy::set_q(int cell, int goal_cell, int action, double value) {
    q_[index(cell, goal_cell, action)] = value;
}

int GoalPolicy::greedy_action(int cell, int goal_cell) const {
    int best = 0;
    double best_q = q_[index(cell, goal_cell, 0)];
    for (int a = 1; a < n_actions_; ++a) {
        const double v = q_[index(cell, goal_cell, a)];
        if (v > best_q) {
            best_q = v;
            best = a;
        }
    }
    return best;
}

int GoalPolicy::act(const Vec& state, const Vec& goal, bool greedy, Rng& rng) const {
    const int cell = discretize(state, spec_);
    const int goal_cell = discretize(goal, spec_);
    if (!greedy && uniform01(rng) < config_.epsilon) return uniform_index(rng, n_actions_);
    return greedy_action(cell, goal_cell);
}

double GoalPolicy::value(const Vec& state, const Vec& goal) const {
    const int cell = discretize(state, spec_);
    const int goal_cell = discretize(goal, spec_);
    return q_[index(cell, goal_cell, greedy_action(cell, goal_cell))];
}

void GoalPolicy::update(int cell, int goal_cell, int action, double reward, int next_cell) {
    const double target =
        reward + config_.gamma * q_[index(next_cell, goal_cell, greedy_action(next_cell, goal_cell))];
    auto& entry = q_[index(cell, goal_cell, action)];
    entry += config_.alpha * (target - entry);
}

void GoalPolicy::save(std::ostream& out) const {
    nlohmann::json j;
    j["n_cells"] = n_cells_;
    j["n_actions"] = n_actions_;
    j["gamma"] = config_.gamma;
    j["epsilon"] = config_.epsilon;
    j["alpha"] = config_.alpha;
    j["q"] = q_;
    out << j.dump();
}

void GoalPolicy::load(std::istream& in) {
    nlohmann::json j;
    in >> j;
    if (j.at("n_cells").get<int>() != n_cells_ || j.at("n_actions").get<int>() != n_actions_) {
        throw std::invalid_argument("GoalPolicy::load: table shape mismatch");
    }
    q_ = j.at("q").get<std::vector<double>>();
    config_.gamma = j.at("gamma").get<double>();
    config_.epsilon = j.at("epsilon").get<double>();
    config_.alpha = j.at("alpha").get<double>();
}

ExplorePolicy::ExplorePolicy(const EnvSpec& spec, PolicyConfig config)
    : spec_(spec),
      config_(config),
      n_cells_(spec.walls.cell_count()),
      n_actions_(spec.action_count),
      q_(static_cast<std::size_t>(n_cells_) * n_actions_, 0.0) {}

double ExplorePolicy::q(int cell, int action) const {
    return q_[static_cast<std::size_t>(cell) * n_actions_ + action];
}

void ExplorePolicy::set_q(int cell, int action, double value) {
    q_[static_cast<std::size_t>(cell) * n_actions_ + action] = value;
}

int ExplorePolicy::greedy_action(int cell) const {
    int best = 0;
    double best_q = q(cell, 0);
    for (int a = 1; a < n_actions_; ++a) {
        const double v = q(cell, a);
        if (v > best_q) {
            best_q = v;
            best = a;
        }
    }
    return best;
}

int ExplorePolicy::act(const Vec& state, bool greedy, Rng& rng) const {
    const int cell = discretize(state, spec_);
    if (!greedy && uniform01(rng) < config_.epsilon) return uniform_index(rng, n_actions_);
    return greedy_action(cell);
}

double ExplorePolicy::value(const Vec& state) const {
    const int cell = discretize(state, spec_);
    return q(cell, greedy_action(cell));
}

void ExplorePolicy::update(int cell, int action, double reward, int next_cell) {
    const double target = reward + config_.gamma * q(next_cell, greedy_action(next_cell));
    auto& entry = q_[static_cast<std::size_t>(cell) * n_actions_ + action];
    entry += config_.alpha * (target - entry);
}

namespace {

struct ImaginedStep {
    int cell;
    int action;
    double reward;
    int next_cell;
};

const Vec& pick_start(const EnvSpec& spec, const std::vector<Vec>& starts, const Vec& env_start,
                      Rng& rng) {
    if (starts.empty()) return env_start;
    return starts[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(starts.size())))];
}

}  // namespace

void train_goal_policy(GoalPolicy& policy, const DynamicsModel& model,
                       const GoalRewardFn& reward, const std::vector<Vec>& goals,
                       int n_rollouts, int steps, Rng& rng, const std::vector<Vec>& starts) {
    if (n_rollouts <= 0 || goals.empty()) return;
    const EnvSpec& spec = model.spec();
    const Vec env_start = spec.start_state();
    std::vector<int> goal_cells;
    goal_cells.reserve(goals.size());
    for (const auto& g : goals) goal_cells.push_back(discretize(g, spec));
    struct Step {
        int cell;
        int action;
        int next_cell;
    };
    std::vector<Step> rollout;
    rollout.reserve(static_cast<std::size_t>(steps));
    for (int r = 0; r < n_rollouts; ++r) {
        const Vec& behavior_goal = goals[static_cast<std::size_t>(
            uniform_index(rng, static_cast<int>(goals.size())))];
        Vec state = pick_start(spec, starts, env_start, rng);
        rollout.clear();
        for (int t = 0; t < steps; ++t) {
            const int a = policy.act(state, behavior_goal, false, rng);
            const Vec next = model.predict(state, a, rng);
            rollout.push_back({discretize(state, spec), a, discretize(next, spec)});
            state = next;
        }
        // Q-learning is off-policy: one imagined rollout updates every goal
        // slice in the set, swept back-to-front so terminal values propagate
        // through the whole rollout
        for (std::size_t g = 0; g < goals.size(); ++g) {
            for (auto it = rollout.rbegin(); it != rollout.rend(); ++it) {
                policy.update(it->cell, goal_cells[g], it->action,
                              reward(cell_center(spec, it->cell), goals[g]), it->next_cell);
            }
        }
    }
}

void train_goal_policy(GoalPolicy& policy, const DynamicsModel& model,
                       const LatentSpace& latent, const TemporalDistanceEstimator& dist,
                       const std::vector<Vec>& goals, int n_rollouts, int steps, Rng& rng,
                       const std::vector<Vec>& starts) {
    train_goal_policy(
        policy, model,
        [&](const Vec& s, const Vec& g) { return goal_reward(dist, latent, s, g); }, goals,
        n_rollouts, steps, rng, starts);
}

void train_explore_policy(ExplorePolicy& policy, const DynamicsModel& model, int n_rollouts,
                          int steps, Rng& rng, const std::vector<Vec>& starts) {
    if (n_rollouts <= 0) return;
    const EnvSpec& spec = model.spec();
    const Vec env_start = spec.start_state();
    std::vector<ImaginedStep> rollout;
    rollout.reserve(static_cast<std::size_t>(steps));
    for (int r = 0; r < n_rollouts; ++r) {
        Vec state = pick_start(spec, starts, env_start, rng);
        rollout.clear();
        for (int t = 0; t < steps; ++t) {
            const int a = policy.act(state, false, rng);
            const Vec next = model.predict(state, a, rng);
            rollout.push_back({discretize(state, spec), a, model.disagreement(state, a),
                               discretize(next, spec)});
            state = next;
        }
        for (auto it = rollout.rbegin(); it != rollout.rend(); ++it) {
            policy.update(it->cell, it->action, it->reward, it->next_cell);
        }
    }
}

}  // namespace ce2
