#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ce2/env.hpp"
#include "ce2/mlp.hpp"
#include "ce2/vec.hpp"

namespace ce2 {

struct EmbeddingPair {
    Vec first;
    Vec second;
    int k = 0;
};

// Directional estimator of the normalized step count between two embedded
// states. Regression target for a pair at lag k is k/H; output is squashed
// to [0, 1].
class TemporalDistanceEstimator {
public:
    TemporalDistanceEstimator(int embed_dim, int hidden_width = 32,
                              double learning_rate = 1e-3, std::uint64_t seed = 0,
                              double momentum = 0.0);

    // One SGD step on the batch MSE; returns the pre-step loss.
    double train_step(const std::vector<EmbeddingPair>& pairs, int horizon);
    // Batch MSE at the current parameters (used by training and by
    // finite-difference tests).
    double batch_loss(const std::vector<EmbeddingPair>& pairs, int horizon) const;
    std::vector<double> batch_gradient(const std::vector<EmbeddingPair>& pairs, int horizon) const;

    double distance(const Vec& e1, const Vec& e2) const;

    int embed_dim() const { return embed_dim_; }
    std::vector<double>& params() { return net_.params(); }
    const std::vector<double>& params() const { return net_.params(); }

private:
    int embed_dim_;
    TwoLayerNet net_;
    SgdMomentum opt_;
};

// r^G(s, g) = -D_t(Psi(s), Psi(g)); always in [-1, 0]
template <typename EmbedderT>
double goal_reward(const TemporalDistanceEstimator& est, const EmbedderT& embedder,
                   const Vec& s, const Vec& g) {
    return -est.distance(embedder.embed(s), embedder.embed(g));
}

// Exact shortest-path step counts over the free cells of a grid layout,
// 4-neighborhood moves. Ground truth for the learned estimator.
class BfsOracle {
public:
    explicit BfsOracle(GridLayout layout);

    // nullopt when the cells are disconnected; throws if either cell is a wall
    std::optional<int> distance_steps(int cell_a, int cell_b) const;

    const GridLayout& layout() const { return layout_; }

private:
    const std::vector<int>& from(int source) const;

    GridLayout layout_;
    mutable std::unordered_map<int, std::vector<int>> cache_;
};

}  // namespace ce2
