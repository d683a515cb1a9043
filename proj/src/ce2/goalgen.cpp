#include "ce2/goalgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

namespace ce2 {

KdeModel::KdeModel(std::vector<Vec> support, double bandwidth)
    : support_(std::move(support)), bandwidth_(bandwidth) {
    if (support_.empty()) throw std::invalid_argument("KdeModel: empty support");
    const std::size_t d = support_.front().size();
    for (const auto& s : support_) {
        if (s.size() != d) throw std::invalid_argument("KdeModel: ragged support");
    }
    if (bandwidth_ <= 0.0) {
        // Silverman's rule with a scalar bandwidth over all dimensions
        const double n = static_cast<double>(support_.size());
        double var = 0.0;
        Vec mean(d, 0.0);
        for (const auto& s : support_) {
            for (std::size_t i = 0; i < d; ++i) mean[i] += s[i];
        }
        for (auto& m : mean) m /= n;
        for (const auto& s : support_) {
            for (std::size_t i = 0; i < d; ++i) {
                const double diff = s[i] - mean[i];
                var += diff * diff;
            }
        }
        var /= n * static_cast<double>(d);
        const double sigma = std::sqrt(var);
        const double dd = static_cast<double>(d);
        bandwidth_ = sigma > 1e-12
                         ? sigma * std::pow(4.0 / ((dd + 2.0) * n), 1.0 / (dd + 4.0))
                         : 0.1;
    }
}

double KdeModel::density(const Vec& x) const {
    const std::size_t d = support_.front().size();
    if (x.size() != d) throw std::invalid_argument("KdeModel::density: dimension mismatch");
    const double h2 = bandwidth_ * bandwidth_;
    const double norm =
        std::pow(2.0 * std::numbers::pi * h2, -0.5 * static_cast<double>(d));
    double acc = 0.0;
    for (const auto& s : support_) {
        acc += std::exp(-squared_distance(x, s) / (2.0 * h2));
    }
    return norm * acc / static_cast<double>(support_.size());
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "CE2") return Strategy::CE2;
    if (name == "CE2_G") return Strategy::CE2_G;
    if (name == "CE2_noPEG") return Strategy::CE2_noPEG;
    if (name == "MEGA") return Strategy::MEGA;
    if (name == "MEGA_G") return Strategy::MEGA_G;
    if (name == "PEG") return Strategy::PEG;
    if (name == "PEG_G") return Strategy::PEG_G;
    if (name == "MEGA_PEG") return Strategy::MEGA_PEG;
    if (name == "GC_ONLY") return Strategy::GC_ONLY;
    if (name == "RANDOM") return Strategy::RANDOM;
    throw std::invalid_argument("unknown strategy: " + name);
}

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::CE2: return "CE2";
        case Strategy::CE2_G: return "CE2_G";
        case Strategy::CE2_noPEG: return "CE2_noPEG";
        case Strategy::MEGA: return "MEGA";
        case Strategy::MEGA_G: return "MEGA_G";
        case Strategy::PEG: return "PEG";
        case Strategy::PEG_G: return "PEG_G";
        case Strategy::MEGA_PEG: return "MEGA_PEG";
        case Strategy::GC_ONLY: return "GC_ONLY";
        case Strategy::RANDOM: return "RANDOM";
    }
    return "?";
}

bool strategy_uses_env_goals(Strategy s) {
    return s == Strategy::CE2_G || s == Strategy::MEGA_G || s == Strategy::PEG_G ||
           s == Strategy::GC_ONLY;
}

void StrategyConfig::resolve(const EnvSpec& spec) {
    if (t_go <= 0) t_go = spec.max_episode_len / 2;
    if (t_explore <= 0) t_explore = spec.max_episode_len - t_go;
    validate();
    if (t_go + t_explore > spec.max_episode_len) {
        throw std::invalid_argument("StrategyConfig: t_go + t_explore exceeds max_episode_len");
    }
}

void StrategyConfig::validate() const {
    if (n_candidate < 1) throw std::invalid_argument("StrategyConfig: n_candidate must be >= 1");
    if (n_edge < 1 || n_edge > n_candidate) {
        throw std::invalid_argument("StrategyConfig: need 1 <= n_edge <= n_candidate");
    }
    if (potential_rollouts < 1) throw std::invalid_argument("StrategyConfig: K must be >= 1");
}

double exploration_potential(const Vec& goal, const GoalPolicy& goal_policy,
                             const ExplorePolicy& explore_policy, const DynamicsModel& model,
                             int k_rollouts, int steps, bool greedy, Rng& rng) {
    if (k_rollouts < 1) throw std::invalid_argument("exploration_potential: K must be >= 1");
    if (steps < 1) throw std::invalid_argument("exploration_potential: steps must be >= 1");
    const Vec start = model.spec().start_state();
    const std::uint64_t base = rng();
    double acc = 0.0;
    for (int k = 0; k < k_rollouts; ++k) {
        Rng stream = make_rng(derive_seed(base, static_cast<std::uint64_t>(k)));
        Vec state = start;
        for (int t = 0; t < steps; ++t) {
            const int a = goal_policy.act(state, goal, greedy, stream);
            state = model.predict(state, a, stream);
        }
        acc += explore_policy.value(state);
    }
    return acc / static_cast<double>(k_rollouts);
}

Ce2Selection ce2_select_goal(const GmmModel& gmm, const LatentSpace& latent,
                             const GoalPolicy& goal_policy, const ExplorePolicy& explore_policy,
                             const DynamicsModel& model, const StrategyConfig& cfg,
                             const EnvSpec& spec, Rng& rng) {
    cfg.validate();
    const std::vector<Vec> candidates = gmm.sample(cfg.n_candidate, rng);
    const std::vector<int> edge = gmm.select_edge_indices(candidates, cfg.n_edge);

    Ce2Selection sel;
    sel.edge_embeddings.reserve(edge.size());
    sel.edge_goals.reserve(edge.size());
    for (int i : edge) {
        const Vec& z = candidates[static_cast<std::size_t>(i)];
        sel.edge_embeddings.push_back(z);
        sel.edge_log_density.push_back(gmm.log_total_probability(z));
        sel.edge_goals.push_back(latent.decode_goal(z, spec));
    }
    sel.potentials.reserve(edge.size());
    int best = 0;
    double best_p = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sel.edge_goals.size(); ++i) {
        const double p = exploration_potential(sel.edge_goals[i], goal_policy, explore_policy,
                                               model, cfg.potential_rollouts, cfg.t_go,
                                               /*greedy=*/false, rng);
        sel.potentials.push_back(p);
        if (p > best_p) {
            best_p = p;
            best = static_cast<int>(i);
        }
    }
    sel.goal_index = best;
    sel.goal = sel.edge_goals[static_cast<std::size_t>(best)];
    return sel;
}

Vec ce2_nopeg_select_goal(const GmmModel& gmm, const LatentSpace& latent,
                          const StrategyConfig& cfg, const EnvSpec& spec, Rng& rng) {
    cfg.validate();
    const std::vector<Vec> candidates = gmm.sample(cfg.n_candidate, rng);
    const std::vector<Vec> edge = gmm.select_edge(candidates, cfg.n_edge);
    const int pick = uniform_index(rng, static_cast<int>(edge.size()));
    return latent.decode_goal(edge[static_cast<std::size_t>(pick)], spec);
}

Vec mega_select_goal(const KdeModel& kde, const std::vector<Vec>& replay_goals,
                     const std::function<double(const Vec&)>& goal_value, double threshold) {
    if (replay_goals.empty()) throw std::invalid_argument("mega_select_goal: empty replay goals");
    int best = -1;
    double best_density = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < replay_goals.size(); ++i) {
        if (goal_value(replay_goals[i]) < threshold) continue;
        const double d = kde.density(replay_goals[i]);
        if (d < best_density) {
            best_density = d;
            best = static_cast<int>(i);
        }
    }
    if (best < 0) {
        // reachability filter rejected everything; fall back to the raw argmin
        for (std::size_t i = 0; i < replay_goals.size(); ++i) {
            const double d = kde.density(replay_goals[i]);
            if (d < best_density) {
                best_density = d;
                best = static_cast<int>(i);
            }
        }
    }
    return replay_goals[static_cast<std::size_t>(best)];
}

Vec peg_select_goal(const std::function<Vec(Rng&)>& state_space_sampler,
                    const GoalPolicy& goal_policy, const ExplorePolicy& explore_policy,
                    const DynamicsModel& model, const StrategyConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<Vec> candidates;
    candidates.reserve(static_cast<std::size_t>(cfg.n_candidate));
    for (int i = 0; i < cfg.n_candidate; ++i) candidates.push_back(state_space_sampler(rng));
    int best = 0;
    double best_p = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double p = exploration_potential(candidates[i], goal_policy, explore_policy, model,
                                               cfg.potential_rollouts, cfg.t_go,
                                               /*greedy=*/false, rng);
        if (p > best_p) {
            best_p = p;
            best = static_cast<int>(i);
        }
    }
    return candidates[static_cast<std::size_t>(best)];
}

Vec mega_peg_select_goal(const KdeModel& kde, const std::vector<Vec>& replay_goals,
                         const GoalPolicy& goal_policy, const ExplorePolicy& explore_policy,
                         const DynamicsModel& model, const StrategyConfig& cfg, Rng& rng) {
    if (replay_goals.empty()) throw std::invalid_argument("mega_peg_select_goal: empty replay goals");
    std::vector<int> order(replay_goals.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> density(replay_goals.size());
    for (std::size_t i = 0; i < replay_goals.size(); ++i) density[i] = kde.density(replay_goals[i]);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return density[static_cast<std::size_t>(a)] < density[static_cast<std::size_t>(b)];
    });
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.mega_top)));
    int best = order.front();
    double best_p = -std::numeric_limits<double>::infinity();
    for (int idx : order) {
        const double p = exploration_potential(replay_goals[static_cast<std::size_t>(idx)],
                                               goal_policy, explore_policy, model,
                                               cfg.potential_rollouts, cfg.t_go,
                                               /*greedy=*/false, rng);
        if (p > best_p) {
            best_p = p;
            best = idx;
        }
    }
    return replay_goals[static_cast<std::size_t>(best)];
}

Trajectory go_explore_episode(Env& env, const Vec& goal, const GoalPolicy& goal_policy,
                              const ExplorePolicy& explore_policy, int t_go, int t_explore,
                              std::uint64_t episode_seed, Rng& rng, bool greedy) {
    if (t_go < 0 || t_explore < 0 || t_go + t_explore > env.spec().max_episode_len) {
        throw std::invalid_argument("go_explore_episode: phase budget exceeds max_episode_len");
    }
    Trajectory traj;
    traj.goal_command = goal;
    traj.states.push_back(env.reset(episode_seed));
    for (int t = 0; t < t_go; ++t) {
        if (success(env.state(), goal, env.spec())) break;
        const int a = goal_policy.act(env.state(), goal, greedy, rng);
        const StepResult r = env.step(a);
        traj.actions.push_back(action_vector(env.spec(), a));
        traj.phases.push_back(Phase::Go);
        traj.states.push_back(r.next_state);
    }
    for (int t = 0; t < t_explore; ++t) {
        const int a = explore_policy.act(env.state(), greedy, rng);
        const StepResult r = env.step(a);
        traj.actions.push_back(action_vector(env.spec(), a));
        traj.phases.push_back(Phase::Explore);
        traj.states.push_back(r.next_state);
    }
    return traj;
}

Trajectory goal_rollout_episode(Env& env, const Vec& goal, const GoalPolicy& goal_policy,
                                int steps, std::uint64_t episode_seed, Rng& rng, bool greedy) {
    if (steps < 1 || steps > env.spec().max_episode_len) {
        throw std::invalid_argument("goal_rollout_episode: steps outside [1, max_episode_len]");
    }
    Trajectory traj;
    traj.goal_command = goal;
    traj.states.push_back(env.reset(episode_seed));
    for (int t = 0; t < steps; ++t) {
        const int a = goal_policy.act(env.state(), goal, greedy, rng);
        const StepResult r = env.step(a);
        traj.actions.push_back(action_vector(env.spec(), a));
        traj.phases.push_back(Phase::GoalRollout);
        traj.states.push_back(r.next_state);
    }
    return traj;
}

namespace {

std::vector<Vec> embed_batch(const LatentSpace& latent, const std::vector<Vec>& states) {
    std::vector<Vec> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(latent.embed(s));
    return out;
}

struct EpisodeGoal {
    Vec goal;
    double density = 0.0;  // mixture or KDE density of the pick, when defined
};

EpisodeGoal select_episode_goal(Components& c, const LoopConfig& config, Rng& rng) {
    const StrategyConfig& scfg = config.strategy;
    auto free_sampler = [&](Rng& r) { return sample_free_state(c.spec, r); };
    const Strategy s = scfg.strategy;

    if (s == Strategy::RANDOM) return {free_sampler(rng), 0.0};

    if (s == Strategy::CE2 || s == Strategy::CE2_G) {
        if (!c.gmm->initialized()) return {free_sampler(rng), 0.0};
        Ce2Selection sel = ce2_select_goal(*c.gmm, *c.latent, *c.goal_policy, *c.explore_policy,
                                           *c.model, scfg, c.spec, rng);
        return {sel.goal,
                std::exp(sel.edge_log_density[static_cast<std::size_t>(sel.goal_index)])};
    }
    if (s == Strategy::CE2_noPEG) {
        if (!c.gmm->initialized()) return {free_sampler(rng), 0.0};
        return {ce2_nopeg_select_goal(*c.gmm, *c.latent, scfg, c.spec, rng), 0.0};
    }
    if (s == Strategy::PEG || s == Strategy::PEG_G) {
        return {peg_select_goal(free_sampler, *c.goal_policy, *c.explore_policy, *c.model, scfg,
                                rng),
                0.0};
    }
    if (s == Strategy::MEGA || s == Strategy::MEGA_G || s == Strategy::MEGA_PEG) {
        if (c.buffer->empty(Partition::All)) return {free_sampler(rng), 0.0};
        const std::vector<Vec> support =
            c.buffer->sample_state_batch(Partition::All, scfg.kde_support, rng);
        const std::vector<Vec> goals =
            c.buffer->sample_state_batch(Partition::All, scfg.n_candidate, rng);
        KdeModel kde(support);
        if (s == Strategy::MEGA_PEG) {
            return {mega_peg_select_goal(kde, goals, *c.goal_policy, *c.explore_policy, *c.model,
                                         scfg, rng),
                    0.0};
        }
        // reachability filter keeps the upper half by V^G(s0, g)
        const Vec start = c.spec.start_state();
        std::vector<double> values(goals.size());
        for (std::size_t i = 0; i < goals.size(); ++i) {
            values[i] = c.goal_policy->value(start, goals[i]);
        }
        std::vector<double> sorted = values;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                         sorted.end());
        const double threshold = sorted[sorted.size() / 2];
        const Vec goal = mega_select_goal(
            kde, goals, [&](const Vec& g) { return c.goal_policy->value(start, g); }, threshold);
        return {goal, kde.density(goal)};
    }
    throw std::logic_error("select_episode_goal: strategy has no go-explore goals");
}

}  // namespace

void run_training(Components& c, const LoopConfig& config, const TrainSinks& sinks) {
    LoopConfig cfg = config;
    cfg.strategy.resolve(c.spec);
    const Strategy strat = cfg.strategy.strategy;
    const bool env_goal_rollouts = strategy_uses_env_goals(strat);
    const bool parity_alternation = strat == Strategy::MEGA_G || strat == Strategy::PEG_G;
    // CE2-G clusters exclusively on the env-goal partition
    const Partition gmm_source = strat == Strategy::CE2_G ? Partition::Egc : Partition::Exp;

    Rng loop_rng = make_rng(derive_seed(c.seed, 1));
    Rng episode_rng = make_rng(derive_seed(c.seed, 2));
    Rng train_rng = make_rng(derive_seed(c.seed, 3));

    long long env_steps = 0;
    long long episode_counter = 0;
    int last_assign_round = 0;
    bool assigned_once = false;
    double last_elbo = 0.0;
    std::vector<Vec> last_edge_goals;

    for (int round = 1; round <= cfg.n_train; ++round) {
        RoundReport report;
        report.round = round;

        // centroid (re)assignment from a fresh batch of the clustering source
        const bool due = !assigned_once || (round - last_assign_round) >= cfg.reassign_period;
        if (due && !c.buffer->empty(gmm_source)) {
            const auto batch = embed_batch(
                *c.latent, c.buffer->sample_state_batch(gmm_source, cfg.assign_batch, train_rng));
            c.gmm->assign_centroids(batch, train_rng);
            assigned_once = true;
            last_assign_round = round;
            report.reassigned = true;
            if (sinks.on_snapshot) {
                nlohmann::json snap = c.gmm->snapshot();
                snap["round"] = round;
                snap["kind"] = "gmm";
                sinks.on_snapshot(snap);
            }
        }

        // data collection
        double density_sum = 0.0;
        int density_count = 0;
        int episodes = 0;
        auto run_env_goal_episode = [&]() {
            const Vec goal = sample_env_goal(c.spec, episode_rng);
            Trajectory traj = goal_rollout_episode(*c.env, goal, *c.goal_policy,
                                                   c.spec.max_episode_len, episode_rng(),
                                                   episode_rng);
            env_steps += traj.length();
            c.buffer->append(std::move(traj), Partition::Egc);
            ++episodes;
        };
        auto run_strategy_episode = [&]() {
            EpisodeGoal pick = select_episode_goal(c, cfg, episode_rng);
            report.selected_goals.push_back(pick.goal);
            density_sum += pick.density;
            ++density_count;
            Trajectory traj =
                go_explore_episode(*c.env, pick.goal, *c.goal_policy, *c.explore_policy,
                                   cfg.strategy.t_go, cfg.strategy.t_explore, episode_rng(),
                                   episode_rng);
            env_steps += traj.length();
            c.buffer->append(std::move(traj), Partition::Exp);
            ++episodes;
        };
        for (int e = 0; e < cfg.n_tau; ++e, ++episode_counter) {
            if (strat == Strategy::GC_ONLY) {
                run_env_goal_episode();
            } else if (parity_alternation && episode_counter % 2 != 0) {
                run_env_goal_episode();
            } else {
                run_strategy_episode();
            }
        }
        if (strat == Strategy::CE2_G) {
            for (int e = 0; e < cfg.n_tau; ++e) run_env_goal_episode();
        }

        // model
        c.model->fit(*c.buffer);

        // temporal distance, on pairs from imagined rollouts by default
        const int horizon = cfg.imagination_horizon;
        if (cfg.dt_steps > 0) {
            if (cfg.dt_real_pairs) {
                for (int step = 0; step < cfg.dt_steps; ++step) {
                    const auto raw =
                        c.buffer->sample_pair_batch(Partition::All, cfg.dt_batch, horizon, train_rng);
                    std::vector<EmbeddingPair> pairs;
                    pairs.reserve(raw.size());
                    for (const auto& p : raw) {
                        pairs.push_back({c.latent->embed(p.first), c.latent->embed(p.second), p.k});
                    }
                    c.dist->train_step(pairs, horizon);
                }
            } else if (cfg.dt_rollouts > 0) {
                ReplayBuffer imagined(static_cast<std::size_t>(cfg.dt_rollouts));
                for (int r = 0; r < cfg.dt_rollouts; ++r) {
                    const Vec start =
                        c.buffer->sample_state_batch(Partition::All, 1, train_rng).front();
                    const Vec goal =
                        c.buffer->sample_state_batch(Partition::All, 1, train_rng).front();
                    Actor actor = [&](const Vec& s, Rng& r2) {
                        return c.goal_policy->act(s, goal, false, r2);
                    };
                    imagined.append(imagine_rollout(*c.model, actor, start, goal, horizon,
                                                    Phase::GoalRollout, train_rng),
                                    Partition::All);
                }
                for (int step = 0; step < cfg.dt_steps; ++step) {
                    const auto raw =
                        imagined.sample_pair_batch(Partition::All, cfg.dt_batch, horizon, train_rng);
                    std::vector<EmbeddingPair> pairs;
                    pairs.reserve(raw.size());
                    for (const auto& p : raw) {
                        pairs.push_back({c.latent->embed(p.first), c.latent->embed(p.second), p.k});
                    }
                    c.dist->train_step(pairs, horizon);
                }
            }
        }

        // latent space (reconstruction + geometry)
        for (int step = 0; step < cfg.latent_steps; ++step) {
            const auto firsts = c.buffer->sample_state_batch(Partition::All, cfg.latent_batch, train_rng);
            const auto seconds = c.buffer->sample_state_batch(Partition::All, cfg.latent_batch, train_rng);
            std::vector<std::pair<Vec, Vec>> batch;
            batch.reserve(firsts.size());
            for (std::size_t i = 0; i < firsts.size(); ++i) batch.emplace_back(firsts[i], seconds[i]);
            c.latent->train_step(*c.dist, batch);
        }

        // clustering
        if (c.gmm->initialized() && !c.buffer->empty(gmm_source)) {
            for (int step = 0; step < cfg.gmm_steps; ++step) {
                const auto batch = embed_batch(
                    *c.latent, c.buffer->sample_state_batch(gmm_source, cfg.gmm_batch, train_rng));
                last_elbo = c.gmm->elbo_step(batch);
            }
        }

        // policies, in imagination
        if (!report.selected_goals.empty() &&
            (strat == Strategy::CE2 || strat == Strategy::CE2_G || strat == Strategy::CE2_noPEG)) {
            last_edge_goals = report.selected_goals;
        }
        {
            // few goal slices per round, trained densely: half replay states,
            // half current edge goals. Replay goals are stratified over
            // distinct visited cells so far corners are drawn as often as
            // well-trodden ones.
            const int n_mix = 2;
            std::vector<Vec> goals;
            {
                const auto pool = c.buffer->sample_state_batch(Partition::All, 64, train_rng);
                std::vector<Vec> distinct;
                std::set<int> seen;
                for (const auto& s2 : pool) {
                    if (seen.insert(discretize(s2, c.spec)).second) distinct.push_back(s2);
                }
                for (int i = 0; i < n_mix; ++i) {
                    goals.push_back(distinct[static_cast<std::size_t>(
                        uniform_index(train_rng, static_cast<int>(distinct.size())))]);
                }
            }
            if (!last_edge_goals.empty()) {
                for (int i = 0; i < n_mix; ++i) {
                    goals.push_back(last_edge_goals[static_cast<std::size_t>(
                        uniform_index(train_rng, static_cast<int>(last_edge_goals.size())))]);
                }
            } else if (!report.selected_goals.empty()) {
                for (const auto& g : report.selected_goals) goals.push_back(g);
            }
            // imagination fans out from the env start and replay states alike
            std::vector<Vec> starts = c.buffer->sample_state_batch(Partition::All, 8, train_rng);
            starts.push_back(c.spec.start_state());
            train_goal_policy(*c.goal_policy, *c.model, *c.latent, *c.dist, goals,
                              cfg.goal_policy_rollouts, horizon, train_rng, starts);
            train_explore_policy(*c.explore_policy, *c.model, cfg.explore_policy_rollouts,
                                 horizon, train_rng, starts);
        }

        report.episodes = episodes;
        report.env_steps = env_steps;
        report.elbo = last_elbo;
        report.mean_goal_density = density_count > 0 ? density_sum / density_count : 0.0;
        if (sinks.on_snapshot && !report.selected_goals.empty()) {
            nlohmann::json snap;
            snap["round"] = round;
            snap["kind"] = "goals";
            snap["selected_goals"] = report.selected_goals;
            sinks.on_snapshot(snap);
        }
        if (sinks.on_round) sinks.on_round(report);
    }
}

}  // namespace ce2
