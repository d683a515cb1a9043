#include "ce2/distance.hpp"

#include <deque>
#include <stdexcept>

namespace ce2 {

TemporalDistanceEstimator::TemporalDistanceEstimator(int embed_dim, int hidden_width,
                                                     double learning_rate, std::uint64_t seed,
                                                     double momentum)
    : embed_dim_(embed_dim),
      net_(2 * embed_dim, hidden_width, 1, OutputSquash::Sigmoid, 0.1, derive_seed(seed, 17)),
      opt_(learning_rate, momentum, net_.param_count()) {
    if (embed_dim <= 0) throw std::invalid_argument("TemporalDistanceEstimator: bad embed_dim");
    // start the squashed output low: normalized step counts mass near 0
    net_.params().back() = -2.0;
}

namespace {

Vec concat_pair(const Vec& a, const Vec& b) {
    Vec x;
    x.reserve(a.size() + b.size());
    x.insert(x.end(), a.begin(), a.end());
    x.insert(x.end(), b.begin(), b.end());
    return x;
}

void check_pairs(const std::vector<EmbeddingPair>& pairs, int horizon, int embed_dim) {
    if (horizon < 1) throw std::invalid_argument("train_step: horizon must be >= 1");
    for (const auto& p : pairs) {
        if (p.k < 0 || p.k > horizon) {
            throw std::invalid_argument("train_step: pair lag outside [0, horizon]");
        }
        if (static_cast<int>(p.first.size()) != embed_dim ||
            static_cast<int>(p.second.size()) != embed_dim) {
            throw std::invalid_argument("train_step: embedding dimension mismatch");
        }
    }
}

}  // namespace

double TemporalDistanceEstimator::batch_loss(const std::vector<EmbeddingPair>& pairs,
                                             int horizon) const {
    check_pairs(pairs, horizon, embed_dim_);
    if (pairs.empty()) return 0.0;
    double loss = 0.0;
    for (const auto& p : pairs) {
        const double y = net_.forward(concat_pair(p.first, p.second))[0];
        const double target = static_cast<double>(p.k) / horizon;
        loss += (y - target) * (y - target);
    }
    return loss / static_cast<double>(pairs.size());
}

std::vector<double> TemporalDistanceEstimator::batch_gradient(
    const std::vector<EmbeddingPair>& pairs, int horizon) const {
    check_pairs(pairs, horizon, embed_dim_);
    std::vector<double> grad(net_.param_count(), 0.0);
    if (pairs.empty()) return grad;
    const double inv_n = 1.0 / static_cast<double>(pairs.size());
    TwoLayerNet::Tape tape;
    for (const auto& p : pairs) {
        const Vec y = net_.forward(concat_pair(p.first, p.second), tape);
        const double target = static_cast<double>(p.k) / horizon;
        const Vec dLdy = {2.0 * (y[0] - target) * inv_n};
        net_.backward(tape, dLdy, grad, nullptr);
    }
    return grad;
}

double TemporalDistanceEstimator::train_step(const std::vector<EmbeddingPair>& pairs,
                                             int horizon) {
    const double loss = batch_loss(pairs, horizon);
    if (pairs.empty()) return loss;
    const auto grad = batch_gradient(pairs, horizon);
    opt_.step(net_.params(), grad);
    return loss;
}

double TemporalDistanceEstimator::distance(const Vec& e1, const Vec& e2) const {
    if (static_cast<int>(e1.size()) != embed_dim_ || static_cast<int>(e2.size()) != embed_dim_) {
        throw std::invalid_argument("distance: embedding dimension mismatch");
    }
    return net_.forward(concat_pair(e1, e2))[0];
}

BfsOracle::BfsOracle(GridLayout layout) : layout_(std::move(layout)) {}

const std::vector<int>& BfsOracle::from(int source) const {
    auto it = cache_.find(source);
    if (it != cache_.end()) return it->second;
    std::vector<int> dist(static_cast<std::size_t>(layout_.cell_count()), -1);
    std::deque<int> queue;
    dist[static_cast<std::size_t>(source)] = 0;
    queue.push_back(source);
    while (!queue.empty()) {
        const int c = queue.front();
        queue.pop_front();
        const int x = c % layout_.width;
        const int y = c / layout_.width;
        const int nx[4] = {x + 1, x, x - 1, x};
        const int ny[4] = {y, y + 1, y, y - 1};
        for (int i = 0; i < 4; ++i) {
            if (!layout_.free_cell(nx[i], ny[i])) continue;
            const int n = layout_.cell_index(nx[i], ny[i]);
            if (dist[static_cast<std::size_t>(n)] >= 0) continue;
            dist[static_cast<std::size_t>(n)] = dist[static_cast<std::size_t>(c)] + 1;
            queue.push_back(n);
        }
    }
    return cache_.emplace(source, std::move(dist)).first->second;
}

std::optional<int> BfsOracle::distance_steps(int cell_a, int cell_b) const {
    auto check = [&](int c) {
        if (c < 0 || c >= layout_.cell_count() ||
            layout_.occ[static_cast<std::size_t>(c)] != 0) {
            throw std::invalid_argument("BfsOracle: cell is not free");
        }
    };
    check(cell_a);
    check(cell_b);
    const int d = from(cell_a)[static_cast<std::size_t>(cell_b)];
    if (d < 0) return std::nullopt;
    return d;
}

}  // namespace ce2
