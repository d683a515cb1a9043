#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ce2/rng.hpp"
#include "ce2/vec.hpp"

#include "json.hpp"

namespace ce2 {

// Greedy max-min subset selection. The first point is chosen uniformly at
// random (or pinned via first_index); every later point maximizes its
// minimum distance to the already-selected set, ties to the lowest index.
std::vector<Vec> fps_init(const std::vector<Vec>& points, int n_samples, Rng& rng);
std::vector<Vec> fps_init(const std::vector<Vec>& points, int n_samples, int first_index);
std::vector<int> fps_init_indices(const std::vector<Vec>& points, int n_samples, int first_index);

struct GmmConfig {
    int n_components = 30;
    double init_sigma2 = 1.0;
    double sigma2_floor = 1e-4;
    double step_size = 3e-4;           // centroid blend per EM step; 1.0 = full EM
    double uniform_prior_weight = 0.1;  // lambda pulling the weights toward uniform
};

// Isotropic Gaussian mixture with a shared variance, trained by blended EM
// steps between FPS re-initializations.
class GmmModel {
public:
    GmmModel(int embed_dim, GmmConfig config);

    bool initialized() const { return !centroids_.empty(); }
    int embed_dim() const { return embed_dim_; }
    const GmmConfig& config() const { return config_; }

    // FPS over the batch; weights reset to uniform, variance to its initial
    // value. Requires batch size >= n_components.
    void assign_centroids(const std::vector<Vec>& batch, Rng& rng);

    // One blended EM update (E-step responsibilities, M-step weight blend /
    // centroid step / shared-variance refit). Returns the pre-step evidence
    // lower bound, i.e. the mean log density of the batch.
    double elbo_step(const std::vector<Vec>& batch);

    double total_probability(const Vec& z) const;
    double log_total_probability(const Vec& z) const;

    std::vector<Vec> sample(int n, Rng& rng) const;

    // the n_edge candidates with lowest mixture density, ascending, ties to
    // the lowest candidate index
    std::vector<int> select_edge_indices(const std::vector<Vec>& candidates, int n_edge) const;
    std::vector<Vec> select_edge(const std::vector<Vec>& candidates, int n_edge) const;

    const std::vector<Vec>& centroids() const { return centroids_; }
    const std::vector<double>& weights() const { return weights_; }
    double sigma2() const { return sigma2_; }

    nlohmann::json snapshot() const;

private:
    void check_initialized() const;

    int embed_dim_;
    GmmConfig config_;
    std::vector<Vec> centroids_;
    std::vector<double> weights_;
    double sigma2_;
};

}  // namespace ce2
