#include "ce2/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace ce2 {

std::vector<int> fps_init_indices(const std::vector<Vec>& points, int n_samples,
                                  int first_index) {
    if (points.empty()) throw std::invalid_argument("fps: empty point set");
    if (n_samples < 1 || n_samples > static_cast<int>(points.size())) {
        throw std::invalid_argument("fps: n_samples out of range");
    }
    if (first_index < 0 || first_index >= static_cast<int>(points.size())) {
        throw std::invalid_argument("fps: first_index out of range");
    }
    std::vector<int> selected;
    selected.reserve(static_cast<std::size_t>(n_samples));
    selected.push_back(first_index);
    std::vector<double> min_dist(points.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < points.size(); ++i) {
        min_dist[i] = squared_distance(points[i], points[static_cast<std::size_t>(first_index)]);
    }
    for (int s = 1; s < n_samples; ++s) {
        int farthest = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (min_dist[i] > best) {
                best = min_dist[i];
                farthest = static_cast<int>(i);
            }
        }
        selected.push_back(farthest);
        for (std::size_t i = 0; i < points.size(); ++i) {
            min_dist[i] = std::min(min_dist[i],
                                   squared_distance(points[i], points[static_cast<std::size_t>(farthest)]));
        }
    }
    return selected;
}

std::vector<Vec> fps_init(const std::vector<Vec>& points, int n_samples, int first_index) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (int i : fps_init_indices(points, n_samples, first_index)) {
        out.push_back(points[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<Vec> fps_init(const std::vector<Vec>& points, int n_samples, Rng& rng) {
    if (points.empty()) throw std::invalid_argument("fps: empty point set");
    return fps_init(points, n_samples, uniform_index(rng, static_cast<int>(points.size())));
}

GmmModel::GmmModel(int embed_dim, GmmConfig config)
    : embed_dim_(embed_dim), config_(config), sigma2_(config.init_sigma2) {
    if (embed_dim <= 0) throw std::invalid_argument("GmmModel: bad embed_dim");
    if (config_.n_components < 1) throw std::invalid_argument("GmmModel: n_components must be >= 1");
    if (config_.init_sigma2 <= 0.0 || config_.sigma2_floor <= 0.0) {
        throw std::invalid_argument("GmmModel: variances must be > 0");
    }
}

void GmmModel::check_initialized() const {
    if (!initialized()) throw std::runtime_error("GmmModel: centroids not assigned yet");
}

void GmmModel::assign_centroids(const std::vector<Vec>& batch, Rng& rng) {
    if (static_cast<int>(batch.size()) < config_.n_components) {
        throw std::invalid_argument("assign_centroids: batch smaller than n_components");
    }
    for (const auto& z : batch) {
        if (static_cast<int>(z.size()) != embed_dim_) {
            throw std::invalid_argument("assign_centroids: embedding dimension mismatch");
        }
    }
    centroids_ = fps_init(batch, config_.n_components, rng);
    weights_.assign(static_cast<std::size_t>(config_.n_components),
                    1.0 / config_.n_components);
    sigma2_ = config_.init_sigma2;
}

double GmmModel::log_total_probability(const Vec& z) const {
    check_initialized();
    if (static_cast<int>(z.size()) != embed_dim_) {
        throw std::invalid_argument("total_probability: embedding dimension mismatch");
    }
    const double log_norm = -0.5 * embed_dim_ * std::log(2.0 * std::numbers::pi * sigma2_);
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(centroids_.size());
    for (std::size_t i = 0; i < centroids_.size(); ++i) {
        const double w = weights_[i];
        terms[i] = (w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) +
                   log_norm - squared_distance(z, centroids_[i]) / (2.0 * sigma2_);
        max_term = std::max(max_term, terms[i]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    return max_term + std::log(acc);
}

double GmmModel::total_probability(const Vec& z) const {
    return std::exp(log_total_probability(z));
}

double GmmModel::elbo_step(const std::vector<Vec>& batch) {
    check_initialized();
    if (batch.empty()) throw std::invalid_argument("elbo_step: empty batch");
    const std::size_t n = batch.size();
    const std::size_t m = centroids_.size();
    const double log_norm = -0.5 * embed_dim_ * std::log(2.0 * std::numbers::pi * sigma2_);

    // E-step: responsibilities and the bound value at the current parameters
    std::vector<double> resp(n * m);
    double elbo = 0.0;
    std::vector<double> logits(m);
    for (std::size_t j = 0; j < n; ++j) {
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            logits[i] = (weights_[i] > 0.0 ? std::log(weights_[i])
                                           : -std::numeric_limits<double>::infinity()) +
                        log_norm - squared_distance(batch[j], centroids_[i]) / (2.0 * sigma2_);
            max_logit = std::max(max_logit, logits[i]);
        }
        double z = 0.0;
        for (std::size_t i = 0; i < m; ++i) z += std::exp(logits[i] - max_logit);
        const double log_density = max_logit + std::log(z);
        elbo += log_density;
        for (std::size_t i = 0; i < m; ++i) {
            resp[j * m + i] = std::exp(logits[i] - log_density);
        }
    }
    elbo /= static_cast<double>(n);

    // M-step
    std::vector<double> resp_sum(m, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) resp_sum[i] += resp[j * m + i];
    }
    const double lambda = config_.uniform_prior_weight;
    const double uniform = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double mle = resp_sum[i] / static_cast<double>(n);
        weights_[i] = std::isinf(lambda) ? uniform : (mle + lambda * uniform) / (1.0 + lambda);
    }
    double wsum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    for (auto& w : weights_) w /= wsum;

    for (std::size_t i = 0; i < m; ++i) {
        if (resp_sum[i] <= 1e-12) continue;  // keep a starved centroid where it is
        Vec target(static_cast<std::size_t>(embed_dim_), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double r = resp[j * m + i];
            for (int d = 0; d < embed_dim_; ++d) {
                target[static_cast<std::size_t>(d)] += r * batch[j][static_cast<std::size_t>(d)];
            }
        }
        for (int d = 0; d < embed_dim_; ++d) {
            auto& c = centroids_[i][static_cast<std::size_t>(d)];
            c += config_.step_size * (target[static_cast<std::size_t>(d)] / resp_sum[i] - c);
        }
    }

    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            sq += resp[j * m + i] * squared_distance(batch[j], centroids_[i]);
        }
    }
    sigma2_ = std::max(config_.sigma2_floor, sq / (static_cast<double>(n) * embed_dim_));
    return elbo;
}

std::vector<Vec> GmmModel::sample(int n, Rng& rng) const {
    check_initialized();
    const double sigma = std::sqrt(sigma2_);
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const double u = uniform01(rng);
        std::size_t comp = centroids_.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            acc += weights_[i];
            if (u < acc) {
                comp = i;
                break;
            }
        }
        Vec z = centroids_[comp];
        for (auto& v : z) v += sigma * normal01(rng);
        out.push_back(std::move(z));
    }
    return out;
}

std::vector<int> GmmModel::select_edge_indices(const std::vector<Vec>& candidates,
                                               int n_edge) const {
    check_initialized();
    if (n_edge < 0 || n_edge > static_cast<int>(candidates.size())) {
        throw std::invalid_argument("select_edge: n_edge out of range");
    }
    std::vector<double> density(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        density[i] = log_total_probability(candidates[i]);
    }
    std::vector<int> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return density[static_cast<std::size_t>(a)] < density[static_cast<std::size_t>(b)];
    });
    order.resize(static_cast<std::size_t>(n_edge));
    return order;
}

std::vector<Vec> GmmModel::select_edge(const std::vector<Vec>& candidates, int n_edge) const {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(n_edge));
    for (int i : select_edge_indices(candidates, n_edge)) {
        out.push_back(candidates[static_cast<std::size_t>(i)]);
    }
    return out;
}

nlohmann::json GmmModel::snapshot() const {
    nlohmann::json j;
    j["centroids"] = centroids_;
    j["weights"] = weights_;
    j["sigma2"] = sigma2_;
    return j;
}

}  // namespace ce2
