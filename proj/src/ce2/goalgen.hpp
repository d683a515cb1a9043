#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ce2/agents.hpp"
#include "ce2/clustering.hpp"
#include "ce2/distance.hpp"
#include "ce2/env.hpp"
#include "ce2/latent.hpp"
#include "ce2/model.hpp"
#include "ce2/replay.hpp"
#include "ce2/rng.hpp"
#include "ce2/vec.hpp"

#include "json.hpp"

namespace ce2 {

// Gaussian kernel density estimate over achieved goals; isotropic kernel,
// Silverman's rule bandwidth.
class KdeModel {
public:
    explicit KdeModel(std::vector<Vec> support, double bandwidth = 0.0);
    double density(const Vec& x) const;
    double bandwidth() const { return bandwidth_; }
    std::size_t support_size() const { return support_.size(); }

private:
    std::vector<Vec> support_;
    double bandwidth_;
};

enum class Strategy {
    CE2,
    CE2_G,
    CE2_noPEG,
    MEGA,
    MEGA_G,
    PEG,
    PEG_G,
    MEGA_PEG,
    GC_ONLY,
    RANDOM,
};

Strategy strategy_from_string(const std::string& name);
const char* strategy_name(Strategy s);
// the strategy collects env-goal rollouts in addition to (or instead of)
// go-explore episodes
bool strategy_uses_env_goals(Strategy s);

struct StrategyConfig {
    Strategy strategy = Strategy::CE2;
    int n_candidate = 1000;
    int n_edge = 100;
    int potential_rollouts = 10;  // K in the exploration-potential average
    int t_go = 0;                 // 0 resolves to max_episode_len / 2
    int t_explore = 0;            // 0 resolves to max_episode_len - t_go
    int kde_support = 256;        // replay states backing the MEGA density
    int mega_top = 10;            // candidate pool for MEGA+PEG

    void resolve(const EnvSpec& spec);
    void validate() const;
};

// P^E(g): mean exploration value at the terminal states of K imagined
// Go-phase rollouts from the environment start state. Each rollout runs on
// its own derived RNG stream, so the estimate does not depend on
// evaluation order.
double exploration_potential(const Vec& goal, const GoalPolicy& goal_policy,
                             const ExplorePolicy& explore_policy, const DynamicsModel& model,
                             int k_rollouts, int steps, bool greedy, Rng& rng);

struct Ce2Selection {
    Vec goal;
    int goal_index = 0;                 // into the edge set
    std::vector<Vec> edge_embeddings;   // ascending mixture density
    std::vector<Vec> edge_goals;        // decoded, same order
    std::vector<double> edge_log_density;
    std::vector<double> potentials;
};

// sample N_candidate from the GMM, keep the N_edge lowest-density points,
// decode them, and return the decoded goal with the highest exploration
// potential (ties to the lowest edge index)
Ce2Selection ce2_select_goal(const GmmModel& gmm, const LatentSpace& latent,
                             const GoalPolicy& goal_policy, const ExplorePolicy& explore_policy,
                             const DynamicsModel& model, const StrategyConfig& cfg,
                             const EnvSpec& spec, Rng& rng);

// uniform-random member of the decoded edge set
Vec ce2_nopeg_select_goal(const GmmModel& gmm, const LatentSpace& latent,
                          const StrategyConfig& cfg, const EnvSpec& spec, Rng& rng);

// lowest-KDE-density goal among those passing the reachability filter
// V^G(s0, g) >= threshold; falls back to the unfiltered argmin when the
// filter rejects everything
Vec mega_select_goal(const KdeModel& kde, const std::vector<Vec>& replay_goals,
                     const std::function<double(const Vec&)>& goal_value, double threshold);

// argmax of P^E over uniformly sampled state-space goals (sample-and-argmax
// stand-in for the MPPI optimizer)
Vec peg_select_goal(const std::function<Vec(Rng&)>& state_space_sampler,
                    const GoalPolicy& goal_policy, const ExplorePolicy& explore_policy,
                    const DynamicsModel& model, const StrategyConfig& cfg, Rng& rng);

// MEGA's lowest-density pool, then PEG's potential argmax within it
Vec mega_peg_select_goal(const KdeModel& kde, const std::vector<Vec>& replay_goals,
                         const GoalPolicy& goal_policy, const ExplorePolicy& explore_policy,
                         const DynamicsModel& model, const StrategyConfig& cfg, Rng& rng);

// Two-phase episode: pi^G toward the goal for up to t_go steps (success is
// checked before each step and ends the phase early), then pi^E for
// t_explore steps.
Trajectory go_explore_episode(Env& env, const Vec& goal, const GoalPolicy& goal_policy,
                              const ExplorePolicy& explore_policy, int t_go, int t_explore,
                              std::uint64_t episode_seed, Rng& rng, bool greedy = false);

// plain goal-conditioned rollout toward an environment goal
Trajectory goal_rollout_episode(Env& env, const Vec& goal, const GoalPolicy& goal_policy,
                                int steps, std::uint64_t episode_seed, Rng& rng,
                                bool greedy = false);

struct LoopConfig {
    StrategyConfig strategy;
    int n_train = 300;
    int n_tau = 2;
    int reassign_period = 10;
    int assign_batch = 256;
    int imagination_horizon = 20;  // T for imagined rollouts and H for D_t targets

    int latent_steps = 4;
    int latent_batch = 32;

    int dt_steps = 4;
    int dt_batch = 64;
    int dt_rollouts = 8;
    bool dt_real_pairs = false;

    int gmm_steps = 2;
    int gmm_batch = 128;

    int goal_policy_rollouts = 30;
    int explore_policy_rollouts = 30;
};

struct Components {
    EnvSpec spec;
    std::unique_ptr<Env> env;
    std::unique_ptr<ReplayBuffer> buffer;
    std::unique_ptr<DynamicsModel> model;
    std::unique_ptr<LatentSpace> latent;
    std::unique_ptr<TemporalDistanceEstimator> dist;
    std::unique_ptr<GmmModel> gmm;
    std::unique_ptr<GoalPolicy> goal_policy;
    std::unique_ptr<ExplorePolicy> explore_policy;
    std::uint64_t seed = 0;
};

struct RoundReport {
    int round = 0;
    int episodes = 0;
    long long env_steps = 0;  // cumulative real environment steps
    double elbo = 0.0;
    double mean_goal_density = 0.0;  // mixture/KDE density of selected goals
    bool reassigned = false;
    std::vector<Vec> selected_goals;
};

struct TrainSinks {
    std::function<void(const RoundReport&)> on_round;
    std::function<void(const nlohmann::json&)> on_snapshot;
};

// One run of the main training loop (go-explore collection plus all
// component updates each round). Strategies with environment goals
// additionally collect goal rollouts, and their clustering trains on that
// partition exclusively.
void run_training(Components& c, const LoopConfig& config, const TrainSinks& sinks);

}  // namespace ce2
