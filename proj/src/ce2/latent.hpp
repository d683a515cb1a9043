#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "ce2/distance.hpp"
#include "ce2/env.hpp"
#include "ce2/mlp.hpp"
#include "ce2/vec.hpp"

namespace ce2 {

struct LatentLosses {
    double rec = 0.0;
    double dt = 0.0;
    double total() const { return rec + dt; }
};

// Embedding map Psi and state decoder f_D trained jointly on
// reconstruction plus the temporal-distance geometry term, so that latent
// proximity tracks how quickly states reach each other.
class LatentSpace {
public:
    LatentSpace(int state_dim, int hidden_width, int embed_dim, double init_scale,
                double learning_rate, double momentum, std::uint64_t seed);

    // exact round-trip autoencoder; handy for tests where latent == state space
    static LatentSpace identity(int dim);

    Vec embed(const Vec& state) const;
    Vec decode(const Vec& embedding) const;
    // decode then clamp into the maze bounding box (eta is the identity map)
    Vec decode_goal(const Vec& embedding, const EnvSpec& spec) const;

    // geometry term for one pair: (|Psi(s1)-Psi(s2)|^2 - mean of both D_t
    // directions)^2, with the D_t branch treated as a constant
    double loss_dt(const TemporalDistanceEstimator& est, const Vec& s1, const Vec& s2) const;
    double loss_rec(const Vec& state) const;

    // One momentum-SGD step on mean(L_rec) + mean(L_dt) over the batch;
    // returns the pre-step losses.
    LatentLosses train_step(const TemporalDistanceEstimator& est,
                            const std::vector<std::pair<Vec, Vec>>& batch);

    LatentLosses batch_losses(const TemporalDistanceEstimator& est,
                              const std::vector<std::pair<Vec, Vec>>& batch) const;
    // dL/dparams over [embedder | decoder]; the term flags scope the
    // objective so each loss can be checked in isolation
    std::vector<double> batch_gradient(const TemporalDistanceEstimator& est,
                                       const std::vector<std::pair<Vec, Vec>>& batch,
                                       bool include_rec = true, bool include_dt = true) const;

    int state_dim() const { return embedder_.in_dim(); }
    int embed_dim() const { return embedder_.out_dim(); }

    // flat view over both nets, embedder first (finite-difference tests,
    // snapshots)
    std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& flat);

    // compare the squared latent norm against D_t directly instead of the
    // printed squared-vs-linear form; sensitivity checks only
    bool use_linear_dt_norm = false;
    // global-norm gradient clip; keeps parameters finite when the quartic
    // geometry term spikes
    double max_grad_norm = 10.0;

    void save(std::ostream& out) const;
    static LatentSpace load(std::istream& in);

private:
    LatentSpace(TwoLayerNet embedder, TwoLayerNet decoder, double learning_rate,
                double momentum);

    TwoLayerNet embedder_;
    TwoLayerNet decoder_;
    SgdMomentum opt_;
    double learning_rate_;
    double momentum_;
    std::uint64_t seed_ = 0;
};

}  // namespace ce2
