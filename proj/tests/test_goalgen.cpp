#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "ce2/goalgen.hpp"
#include "ce2/runner.hpp"
#include "frontier_check.hpp"
#include "oracles.hpp"

using namespace ce2;

namespace {

Components desk_components(const EnvSpec& spec, std::uint64_t seed, int n_clusters = 4,
                           int latent_dim = 2) {
    Components c;
    c.spec = spec;
    c.seed = seed;
    c.env = std::make_unique<Env>(spec);
    c.buffer = std::make_unique<ReplayBuffer>(1000);
    c.model = std::make_unique<EnsembleTabularModel>(spec, 3, 1.0, derive_seed(seed, 10));
    if (latent_dim == spec.state_dim) {
        c.latent = std::make_unique<LatentSpace>(LatentSpace::identity(spec.state_dim));
    } else {
        c.latent = std::make_unique<LatentSpace>(spec.state_dim, 16, latent_dim, 0.1, 3e-4, 0.9,
                                                 derive_seed(seed, 11));
    }
    c.dist = std::make_unique<TemporalDistanceEstimator>(latent_dim, 16, 1e-3,
                                                         derive_seed(seed, 12));
    GmmConfig gcfg;
    gcfg.n_components = n_clusters;
    gcfg.step_size = 0.5;
    c.gmm = std::make_unique<GmmModel>(latent_dim, gcfg);
    c.goal_policy = std::make_unique<GoalPolicy>(spec);
    c.explore_policy = std::make_unique<ExplorePolicy>(spec);
    return c;
}

}  // namespace

TEST_CASE("kde density with a single support point") {
    KdeModel kde({{0.0, 0.0}}, 1.0);
    // any other candidate has lower density than the support point itself
    CHECK(kde.density({0.0, 0.0}) > kde.density({1.0, 0.0}));
    CHECK(kde.density({1.0, 0.0}) > kde.density({5.0, 0.0}));
    CHECK(kde.bandwidth() == 1.0);
    CHECK_THROWS_AS(KdeModel({}), std::invalid_argument);
}

TEST_CASE("silverman bandwidth scales with spread") {
    Rng rng = make_rng(1);
    std::vector<Vec> tight, wide;
    for (int i = 0; i < 100; ++i) {
        const Vec z = normal_vec(rng, 2);
        tight.push_back({0.1 * z[0], 0.1 * z[1]});
        wide.push_back({3.0 * z[0], 3.0 * z[1]});
    }
    CHECK(KdeModel(tight).bandwidth() < KdeModel(wide).bandwidth());
    CHECK(KdeModel(tight).bandwidth() > 0.0);
}

TEST_CASE("exploration potential is exact in the deterministic case") {
    const EnvSpec spec = builtin_spec("grid5");
    OracleModel model(spec);
    PolicyConfig pcfg;
    pcfg.epsilon = 0.0;
    GoalPolicy policy(spec, pcfg);
    ExplorePolicy explorer(spec);
    // untrained greedy policy always picks action 0 (Right): after T steps
    // from (0,0) the agent sits at (min(T,4), 0)
    explorer.set_q(spec.walls.cell_index(3, 0), 0, 0.75);

    Rng rng = make_rng(2);
    const double p = exploration_potential({4.0, 4.0}, policy, explorer, model, 3, 3,
                                           /*greedy=*/true, rng);
    CHECK(p == 0.75);  // all K rollouts identical, V^E(s_T) exactly

    // V^E constant: potential equals that constant for every goal
    ExplorePolicy constant(spec);
    for (int c = 0; c < constant.n_cells(); ++c) constant.set_q(c, 0, 0.5);
    for (const Vec g : {Vec{0.0, 4.0}, Vec{4.0, 0.0}, Vec{2.0, 2.0}}) {
        CHECK(exploration_potential(g, policy, constant, model, 4, 3, true, rng) == 0.5);
    }
}

TEST_CASE("exploration potential matches the exact chain expectation") {
    // 2-cell corridor; hand-built stochastic tables via bootstrap members
    const EnvSpec spec = make_grid_maze("chain", GridLayout::open(2, 1), 30);
    ReplayBuffer buf(10);
    auto add = [&](int from, int action, int to) {
        Trajectory t;
        t.states = {cell_center(spec, from), cell_center(spec, to)};
        t.actions = {action_vector(spec, action)};
        t.phases = {Phase::Explore};
        buf.append(t, Partition::All);
    };
    // action Right from cell 0 usually reaches cell 1, sometimes stays
    add(0, 0, 1);
    add(0, 0, 1);
    add(0, 0, 0);
    // action Right from cell 1 stays or slips back
    add(1, 0, 1);
    add(1, 0, 0);
    EnsembleTabularModel model(spec, 3, 1.0, 7);
    model.fit(buf);

    PolicyConfig pcfg;
    pcfg.epsilon = 0.0;  // greedy: zero Q ties to action 0 everywhere
    GoalPolicy policy(spec, pcfg);
    ExplorePolicy explorer(spec);
    explorer.set_q(0, 0, 0.25);
    explorer.set_q(1, 0, 1.0);

    // exact T-step distribution of the member-mixture chain
    auto mixture_step = [&](int s) {
        std::map<int, double> acc;
        for (int m = 0; m < model.ensemble_size(); ++m) {
            const auto dist = model.member_distribution(m, s, 0);
            if (dist.empty()) {
                acc[s] += 1.0 / model.ensemble_size();
            } else {
                for (const auto& [ns, p] : dist) acc[ns] += p / model.ensemble_size();
            }
        }
        std::vector<std::pair<int, double>> out(acc.begin(), acc.end());
        return out;
    };
    const int T = 4;
    const auto dist = oracles::chain_state_distribution(2, mixture_step, 0, T);
    const double exact = dist[0] * 0.25 + dist[1] * 1.0;

    Rng rng = make_rng(3);
    const double estimate = exploration_potential({1.0, 0.0}, policy, explorer, model, 10000, T,
                                                  /*greedy=*/true, rng);
    CHECK(std::abs(estimate - exact) < 0.01);
}

TEST_CASE("ce2 goal selection") {
    const EnvSpec spec = builtin_spec("grid5");
    Components c = desk_components(spec, 1);
    Rng rng = make_rng(4);
    std::vector<Vec> batch;
    for (int i = 0; i < 32; ++i) batch.push_back(sample_free_state(spec, rng));
    c.gmm->assign_centroids(batch, rng);

    StrategyConfig cfg;
    cfg.n_candidate = 40;
    cfg.n_edge = 6;
    cfg.potential_rollouts = 2;
    cfg.t_go = 4;
    cfg.t_explore = 4;

    // V^E constant (zero): selection must fall to the first edge goal
    const Ce2Selection sel =
        ce2_select_goal(*c.gmm, *c.latent, *c.goal_policy, *c.explore_policy, *c.model, cfg,
                        spec, rng);
    CHECK(sel.goal_index == 0);
    CHECK(sel.goal == sel.edge_goals[0]);
    REQUIRE(sel.edge_log_density.size() == 6);
    // ascending-density edge order
    for (std::size_t i = 1; i < sel.edge_log_density.size(); ++i) {
        CHECK(sel.edge_log_density[i] >= sel.edge_log_density[i - 1]);
    }

    // N_candidate = N_edge = 1: the single decoded sample comes back
    StrategyConfig single;
    single.n_candidate = 1;
    single.n_edge = 1;
    single.potential_rollouts = 1;
    single.t_go = 2;
    single.t_explore = 2;
    Rng srng = make_rng(5);
    const Ce2Selection one = ce2_select_goal(*c.gmm, *c.latent, *c.goal_policy,
                                             *c.explore_policy, *c.model, single, spec, srng);
    CHECK(one.edge_goals.size() == 1);
    CHECK(one.goal == one.edge_goals[0]);
}

TEST_CASE("ce2 selection's pre-decode density is minimal (brute force)") {
    const EnvSpec spec = builtin_spec("grid5");
    Components c = desk_components(spec, 1);
    Rng rng = make_rng(6);
    std::vector<Vec> batch;
    for (int i = 0; i < 32; ++i) batch.push_back(sample_free_state(spec, rng));
    c.gmm->assign_centroids(batch, rng);

    StrategyConfig cfg;
    cfg.n_candidate = 50;
    cfg.n_edge = 50;  // edge set == candidate set, reordered
    cfg.potential_rollouts = 1;
    cfg.t_go = 2;
    cfg.t_explore = 2;
    const Ce2Selection sel =
        ce2_select_goal(*c.gmm, *c.latent, *c.goal_policy, *c.explore_policy, *c.model, cfg,
                        spec, rng);
    // every edge embedding's density must not exceed any non-edge candidate's
    // (here the full set, so just check the order against brute force)
    std::vector<double> densities;
    for (const auto& z : sel.edge_embeddings) {
        densities.push_back(
            oracles::naive_mixture_density(c.gmm->centroids(), c.gmm->weights(), c.gmm->sigma2(), z));
    }
    CHECK(std::is_sorted(densities.begin(), densities.end()));
}

TEST_CASE("ce2-noPEG picks a member of the decoded edge set") {
    const EnvSpec spec = builtin_spec("grid5");
    Components c = desk_components(spec, 2);
    Rng rng = make_rng(7);
    std::vector<Vec> batch;
    for (int i = 0; i < 32; ++i) batch.push_back(sample_free_state(spec, rng));
    c.gmm->assign_centroids(batch, rng);

    StrategyConfig cfg;
    cfg.n_candidate = 30;
    cfg.n_edge = 5;

    // N_edge = 1 with the same rng stream is deterministic
    StrategyConfig one = cfg;
    one.n_edge = 1;
    Rng r1 = make_rng(8);
    Rng r2 = make_rng(8);
    CHECK(ce2_nopeg_select_goal(*c.gmm, *c.latent, one, spec, r1) ==
          ce2_nopeg_select_goal(*c.gmm, *c.latent, one, spec, r2));

    // membership: replay the same rng to recompute the edge set
    Rng pick_rng = make_rng(9);
    Rng replay_rng = make_rng(9);
    const Vec goal = ce2_nopeg_select_goal(*c.gmm, *c.latent, cfg, spec, pick_rng);
    const auto candidates = c.gmm->sample(cfg.n_candidate, replay_rng);
    const auto edge = c.gmm->select_edge(candidates, cfg.n_edge);
    bool member = false;
    for (const auto& z : edge) {
        if (c.latent->decode_goal(z, spec) == goal) member = true;
    }
    CHECK(member);
}

TEST_CASE("mega goal selection") {
    KdeModel kde({{0.0, 0.0}, {0.1, 0.0}, {0.2, 0.0}}, 0.5);
    const std::vector<Vec> goals = {{0.1, 0.0}, {3.0, 3.0}};
    auto reachable = [](const Vec&) { return 1.0; };
    // both reachable: the far goal has lower density
    CHECK(mega_select_goal(kde, goals, reachable, 0.5) == Vec{3.0, 3.0});

    // filter removes everything -> unfiltered argmin
    auto unreachable = [](const Vec&) { return -1.0; };
    CHECK(mega_select_goal(kde, goals, unreachable, 0.5) == Vec{3.0, 3.0});

    // filter keeps only the dense goal
    auto only_first = [](const Vec& g) { return g[0] < 1.0 ? 1.0 : -1.0; };
    CHECK(mega_select_goal(kde, goals, only_first, 0.5) == Vec{0.1, 0.0});

    CHECK_THROWS_AS(mega_select_goal(kde, {}, reachable, 0.0), std::invalid_argument);
}

TEST_CASE("peg selection matches brute force over the same candidates") {
    const EnvSpec spec = builtin_spec("grid5");
    Components c = desk_components(spec, 3);
    // seed explore values so potentials differ by goal-conditioned behavior
    Rng qrng = make_rng(10);
    for (int cell = 0; cell < c.explore_policy->n_cells(); ++cell) {
        c.explore_policy->set_q(cell, 0, uniform01(qrng));
    }
    // give the goal policy some structure toward each goal cell
    for (int cell = 0; cell < c.goal_policy->n_cells(); ++cell) {
        for (int g = 0; g < c.goal_policy->n_cells(); ++g) {
            c.goal_policy->set_q(cell, g, g % 4, 1.0);
        }
    }

    StrategyConfig cfg;
    cfg.n_candidate = 12;
    cfg.n_edge = 4;
    cfg.potential_rollouts = 3;
    cfg.t_go = 5;
    cfg.t_explore = 5;

    auto sampler = [&](Rng& r) { return sample_free_state(spec, r); };

    // candidate set of one: that candidate comes back
    StrategyConfig one = cfg;
    one.n_candidate = 1;
    one.n_edge = 1;
    Rng r_one = make_rng(11);
    Rng r_chk = make_rng(11);
    const Vec single = peg_select_goal(sampler, *c.goal_policy, *c.explore_policy, *c.model, one,
                                       r_one);
    CHECK(single == sampler(r_chk));

    // brute-force recomputation with a replayed rng stream
    Rng r_sel = make_rng(12);
    const Vec picked =
        peg_select_goal(sampler, *c.goal_policy, *c.explore_policy, *c.model, cfg, r_sel);
    Rng r_replay = make_rng(12);
    std::vector<Vec> candidates;
    for (int i = 0; i < cfg.n_candidate; ++i) candidates.push_back(sampler(r_replay));
    int best = 0;
    double best_p = -1e300;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double p =
            exploration_potential(candidates[i], *c.goal_policy, *c.explore_policy, *c.model,
                                  cfg.potential_rollouts, cfg.t_go, false, r_replay);
        if (p > best_p) {
            best_p = p;
            best = static_cast<int>(i);
        }
    }
    CHECK(picked == candidates[static_cast<std::size_t>(best)]);
}

TEST_CASE("mega+peg stays within the low-density pool") {
    const EnvSpec spec = builtin_spec("grid5");
    Components c = desk_components(spec, 4);
    Rng rng = make_rng(13);
    std::vector<Vec> goals;
    for (int i = 0; i < 30; ++i) goals.push_back(sample_free_state(spec, rng));
    KdeModel kde(goals);

    StrategyConfig cfg;
    cfg.potential_rollouts = 2;
    cfg.t_go = 3;
    cfg.t_explore = 3;

    const Vec picked = mega_peg_select_goal(kde, goals, *c.goal_policy, *c.explore_policy,
                                            *c.model, cfg, rng);
    // recompute the top-10 density ranking
    std::vector<std::pair<double, int>> scored;
    for (std::size_t i = 0; i < goals.size(); ++i) {
        scored.emplace_back(kde.density(goals[i]), static_cast<int>(i));
    }
    std::stable_sort(scored.begin(), scored.end());
    bool in_pool = false;
    for (int i = 0; i < 10; ++i) {
        if (goals[static_cast<std::size_t>(scored[static_cast<std::size_t>(i)].second)] == picked) {
            in_pool = true;
        }
    }
    CHECK(in_pool);

    // a replay of size <= 10 uses the whole set
    const std::vector<Vec> small(goals.begin(), goals.begin() + 4);
    const Vec small_pick = mega_peg_select_goal(kde, small, *c.goal_policy, *c.explore_policy,
                                                *c.model, cfg, rng);
    CHECK(std::find(small.begin(), small.end(), small_pick) != small.end());
}

TEST_CASE("go-explore episode phases") {
    const EnvSpec spec = builtin_spec("grid5");
    Env env(spec);
    GoalPolicy policy(spec);
    ExplorePolicy explorer(spec);
    Rng rng = make_rng(14);

    // goal = start: the Go phase ends before stepping
    const Vec start = spec.start_state();
    Trajectory at_start = go_explore_episode(env, start, policy, explorer, 5, 7, 0, rng);
    CHECK(at_start.length() == 7);
    for (Phase p : at_start.phases) CHECK(p == Phase::Explore);

    // unreachable goal: the Go phase runs its full budget
    GridLayout cut = GridLayout::open(5, 1);
    cut.occ[2] = 1;
    Env cut_env(make_grid_maze("cut", cut, 30));
    GoalPolicy cut_policy(cut_env.spec());
    ExplorePolicy cut_explorer(cut_env.spec());
    Trajectory unreachable =
        go_explore_episode(cut_env, {4.0, 0.0}, cut_policy, cut_explorer, 6, 4, 0, rng);
    int go_steps = 0;
    for (Phase p : unreachable.phases) go_steps += (p == Phase::Go) ? 1 : 0;
    CHECK(go_steps == 6);
    CHECK(unreachable.length() == 10);

    // the action budget bounds the episode and phases never interleave
    for (int trial = 0; trial < 20; ++trial) {
        const Vec goal = sample_free_state(spec, rng);
        Trajectory t = go_explore_episode(env, goal, policy, explorer, 10, 10, trial, rng);
        CHECK(t.length() <= 20);
        CHECK_NOTHROW(t.validate());
        REQUIRE(t.goal_command.has_value());
        CHECK(*t.goal_command == goal);
    }

    CHECK_THROWS_AS(go_explore_episode(env, start, policy, explorer, 20, 20, 0, rng),
                    std::invalid_argument);
}

TEST_CASE("strategy goal selection is pure given fixed state and seed") {
    const EnvSpec spec = builtin_spec("grid5");
    Components c = desk_components(spec, 5);
    Rng fill = make_rng(15);
    std::vector<Vec> batch;
    for (int i = 0; i < 32; ++i) batch.push_back(sample_free_state(spec, fill));
    c.gmm->assign_centroids(batch, fill);

    StrategyConfig cfg;
    cfg.n_candidate = 20;
    cfg.n_edge = 4;
    cfg.potential_rollouts = 2;
    cfg.t_go = 3;
    cfg.t_explore = 3;

    for (int i = 0; i < 3; ++i) {
        Rng a = make_rng(16);
        Rng b = make_rng(16);
        CHECK(ce2_select_goal(*c.gmm, *c.latent, *c.goal_policy, *c.explore_policy, *c.model,
                              cfg, spec, a)
                  .goal ==
              ce2_select_goal(*c.gmm, *c.latent, *c.goal_policy, *c.explore_policy, *c.model,
                              cfg, spec, b)
                  .goal);
    }
}

TEST_CASE("training loop bookkeeping") {
    const EnvSpec spec = builtin_spec("grid5");
    Components c = desk_components(spec, 6);
    LoopConfig cfg;
    cfg.strategy.strategy = Strategy::CE2;
    cfg.strategy.n_candidate = 20;
    cfg.strategy.n_edge = 4;
    cfg.strategy.potential_rollouts = 2;
    cfg.n_train = 3;
    cfg.n_tau = 2;
    cfg.reassign_period = 1;
    cfg.assign_batch = 16;
    cfg.imagination_horizon = 8;
    cfg.latent_steps = 1;
    cfg.dt_steps = 1;
    cfg.dt_rollouts = 2;
    cfg.gmm_steps = 1;
    cfg.goal_policy_rollouts = 2;
    cfg.explore_policy_rollouts = 2;

    std::vector<RoundReport> reports;
    TrainSinks sinks;
    sinks.on_round = [&](const RoundReport& r) { reports.push_back(r); };
    run_training(c, cfg, sinks);

    REQUIRE(reports.size() == 3);
    CHECK(reports[0].episodes == 2);
    CHECK(c.buffer->size(Partition::All) == 6);
    CHECK(c.buffer->size(Partition::Exp) == 6);
    // round 1 has no data yet, so assignment begins at round 2 and
    // reassign_period = 1 keeps it refreshing every later round
    CHECK_FALSE(reports[0].reassigned);
    CHECK(reports[1].reassigned);
    CHECK(reports[2].reassigned);
    // cumulative env steps are non-decreasing
    CHECK(reports[0].env_steps > 0);
    CHECK(reports[1].env_steps >= reports[0].env_steps);
    CHECK(reports[2].env_steps >= reports[1].env_steps);
}

TEST_CASE("ce2-g loop trains clustering on env-goal data only") {
    EnvSpec spec = builtin_spec("grid5");
    spec.goal_distribution = {{0.0, 0.0}};  // p_g pinned to the start state
    Components c = desk_components(spec, 7);
    LoopConfig cfg;
    cfg.strategy.strategy = Strategy::CE2_G;
    cfg.strategy.n_candidate = 10;
    cfg.strategy.n_edge = 2;
    cfg.strategy.potential_rollouts = 1;
    cfg.n_train = 2;
    cfg.n_tau = 2;
    cfg.reassign_period = 1;
    cfg.assign_batch = 16;
    cfg.imagination_horizon = 6;
    cfg.latent_steps = 1;
    cfg.dt_steps = 1;
    cfg.dt_rollouts = 1;
    cfg.gmm_steps = 1;
    cfg.goal_policy_rollouts = 1;
    cfg.explore_policy_rollouts = 1;

    std::vector<nlohmann::json> gmm_snaps;
    TrainSinks sinks;
    sinks.on_snapshot = [&](const nlohmann::json& snap) {
        if (snap.at("kind") == "gmm") gmm_snaps.push_back(snap);
    };
    run_training(c, cfg, sinks);

    // |D| doubles: per round, n_tau go-explore plus n_tau env-goal rollouts
    CHECK(c.buffer->size(Partition::All) == 8);
    CHECK(c.buffer->size(Partition::Exp) == 4);
    CHECK(c.buffer->size(Partition::Egc) == 4);

    // assigned centroids came from D_egc embeddings (identity latent, so
    // exact state matches); exp-only coverage cannot explain them
    REQUIRE(c.gmm->initialized());
    REQUIRE(!gmm_snaps.empty());
    for (const auto& snap : gmm_snaps) {
        for (const auto& centroid : snap.at("centroids").get<std::vector<Vec>>()) {
            bool found = false;
            for (std::size_t i = 0; i < c.buffer->size(Partition::Egc); ++i) {
                for (const auto& s : c.buffer->trajectory(Partition::Egc, i).states) {
                    if (c.latent->embed(s) == centroid) found = true;
                }
            }
            CHECK(found);
        }
    }
}

TEST_CASE("frontier property: edge goals sit near the unexplored boundary") {
    CHECK(frontier_property_passes(20) >= 16);
}
