// Test-only reference implementations, kept independent of the library code
// paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

namespace oracles {

// Central finite differences of a scalar function of a parameter vector.
inline double finite_difference(const std::function<double()>& f, double& param, double h) {
    const double saved = param;
    param = saved + h;
    const double up = f();
    param = saved - h;
    const double down = f();
    param = saved;
    return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

inline std::vector<double> ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> out(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) out[order[k]] = avg;
        i = j + 1;
    }
    return out;
}

inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    const auto rx = ranks(xs);
    const auto ry = ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

// Exact mixture density, written from the formula rather than the library
// code (shared isotropic variance).
inline double naive_mixture_density(const std::vector<std::vector<double>>& centroids,
                                    const std::vector<double>& weights, double sigma2,
                                    const std::vector<double>& z) {
    const std::size_t d = z.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < centroids.size(); ++i) {
        double sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = z[k] - centroids[i][k];
            sq += diff * diff;
        }
        acc += weights[i] * std::pow(2.0 * 3.14159265358979323846 * sigma2,
                                     -0.5 * static_cast<double>(d)) *
               std::exp(-sq / (2.0 * sigma2));
    }
    return acc;
}

// Tabular value iteration for a finite deterministic-reward MDP. transitions
// maps (state, action) to a distribution over next states; reward is
// evaluated at the transition origin.
struct Mdp {
    int n_states = 0;
    int n_actions = 0;
    std::function<std::vector<std::pair<int, double>>(int, int)> transitions;
    std::function<double(int, int)> reward;
};

inline std::vector<double> value_iteration(const Mdp& mdp, double gamma, int iterations) {
    std::vector<double> v(static_cast<std::size_t>(mdp.n_states), 0.0);
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> next(v.size(), 0.0);
        for (int s = 0; s < mdp.n_states; ++s) {
            double best = -1e300;
            for (int a = 0; a < mdp.n_actions; ++a) {
                double q = mdp.reward(s, a);
                for (const auto& [ns, p] : mdp.transitions(s, a)) {
                    q += gamma * p * v[static_cast<std::size_t>(ns)];
                }
                best = std::max(best, q);
            }
            next[static_cast<std::size_t>(s)] = best;
        }
        v = std::move(next);
    }
    return v;
}

inline std::vector<int> greedy_policy(const Mdp& mdp, const std::vector<double>& v,
                                      double gamma) {
    std::vector<int> pi(static_cast<std::size_t>(mdp.n_states), 0);
    for (int s = 0; s < mdp.n_states; ++s) {
        double best = -1e300;
        for (int a = 0; a < mdp.n_actions; ++a) {
            double q = mdp.reward(s, a);
            for (const auto& [ns, p] : mdp.transitions(s, a)) {
                q += gamma * p * v[static_cast<std::size_t>(ns)];
            }
            if (q > best) {
                best = q;
                pi[static_cast<std::size_t>(s)] = a;
            }
        }
    }
    return pi;
}

// Exact T-step state distribution of a finite Markov chain driven by a fixed
// per-state action choice.
inline std::vector<double> chain_state_distribution(
    int n_states, const std::function<std::vector<std::pair<int, double>>(int)>& step,
    int start, int steps) {
    std::vector<double> dist(static_cast<std::size_t>(n_states), 0.0);
    dist[static_cast<std::size_t>(start)] = 1.0;
    for (int t = 0; t < steps; ++t) {
        std::vector<double> next(dist.size(), 0.0);
        for (int s = 0; s < n_states; ++s) {
            const double p = dist[static_cast<std::size_t>(s)];
            if (p <= 0.0) continue;
            for (const auto& [ns, tp] : step(s)) next[static_cast<std::size_t>(ns)] += p * tp;
        }
        dist = std::move(next);
    }
    return dist;
}

}  // namespace oracles
