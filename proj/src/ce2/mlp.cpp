#include "ce2/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace ce2 {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

TwoLayerNet::TwoLayerNet(int in_dim, int hidden_dim, int out_dim, OutputSquash squash,
                         double init_scale, std::uint64_t seed)
    : in_(in_dim), hidden_(hidden_dim), out_(out_dim), squash_(squash) {
    if (in_ <= 0 || out_ <= 0 || hidden_ < 0) {
        throw std::invalid_argument("TwoLayerNet: bad dimensions");
    }
    std::size_t n = hidden_ > 0
                        ? static_cast<std::size_t>(hidden_) * in_ + hidden_ +
                              static_cast<std::size_t>(out_) * hidden_ + out_
                        : static_cast<std::size_t>(out_) * in_ + out_;
    params_.assign(n, 0.0);
    Rng rng = make_rng(seed);
    if (hidden_ > 0) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(hidden_) * in_; ++i) {
            params_[i] = init_scale * normal01(rng);
        }
        const std::size_t w2_off = static_cast<std::size_t>(hidden_) * in_ + hidden_;
        for (std::size_t i = 0; i < static_cast<std::size_t>(out_) * hidden_; ++i) {
            params_[w2_off + i] = init_scale * normal01(rng);
        }
    } else {
        for (std::size_t i = 0; i < static_cast<std::size_t>(out_) * in_; ++i) {
            params_[i] = init_scale * normal01(rng);
        }
    }
}

TwoLayerNet TwoLayerNet::identity_map(int dim) {
    TwoLayerNet net(dim, 0, dim, OutputSquash::None, 0.0, 0);
    for (int i = 0; i < dim; ++i) net.params_[static_cast<std::size_t>(i) * dim + i] = 1.0;
    return net;
}

Vec TwoLayerNet::forward(const Vec& x) const {
    Tape tape;
    return forward(x, tape);
}

Vec TwoLayerNet::forward(const Vec& x, Tape& tape) const {
    if (static_cast<int>(x.size()) != in_) {
        throw std::invalid_argument("TwoLayerNet::forward: input dimension mismatch");
    }
    tape.x = x;
    Vec pre;
    if (hidden_ > 0) {
        tape.hidden.assign(static_cast<std::size_t>(hidden_), 0.0);
        for (int j = 0; j < hidden_; ++j) {
            double acc = b1()[j];
            const double* row = w1() + static_cast<std::size_t>(j) * in_;
            for (int i = 0; i < in_; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
            tape.hidden[static_cast<std::size_t>(j)] = std::tanh(acc);
        }
        pre.assign(static_cast<std::size_t>(out_), 0.0);
        for (int o = 0; o < out_; ++o) {
            double acc = b2()[o];
            const double* row = w2() + static_cast<std::size_t>(o) * hidden_;
            for (int j = 0; j < hidden_; ++j) acc += row[j] * tape.hidden[static_cast<std::size_t>(j)];
            pre[static_cast<std::size_t>(o)] = acc;
        }
    } else {
        pre.assign(static_cast<std::size_t>(out_), 0.0);
        for (int o = 0; o < out_; ++o) {
            double acc = params_[static_cast<std::size_t>(out_) * in_ + o];  // bias
            const double* row = params_.data() + static_cast<std::size_t>(o) * in_;
            for (int i = 0; i < in_; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
            pre[static_cast<std::size_t>(o)] = acc;
        }
    }
    if (squash_ == OutputSquash::Sigmoid) {
        for (auto& v : pre) v = sigmoid(v);
    }
    tape.y = pre;
    return pre;
}

void TwoLayerNet::backward(const Tape& tape, const Vec& dLdy, std::vector<double>& grad,
                           Vec* dx) const {
    if (grad.size() != params_.size()) {
        throw std::invalid_argument("TwoLayerNet::backward: grad buffer size mismatch");
    }
    Vec g_pre(static_cast<std::size_t>(out_));
    for (int o = 0; o < out_; ++o) {
        double g = dLdy[static_cast<std::size_t>(o)];
        if (squash_ == OutputSquash::Sigmoid) {
            const double y = tape.y[static_cast<std::size_t>(o)];
            g *= y * (1.0 - y);
        }
        g_pre[static_cast<std::size_t>(o)] = g;
    }
    if (hidden_ > 0) {
        const std::size_t w1_off = 0;
        const std::size_t b1_off = static_cast<std::size_t>(hidden_) * in_;
        const std::size_t w2_off = b1_off + hidden_;
        const std::size_t b2_off = w2_off + static_cast<std::size_t>(out_) * hidden_;
        Vec g_h(static_cast<std::size_t>(hidden_), 0.0);
        for (int o = 0; o < out_; ++o) {
            const double g = g_pre[static_cast<std::size_t>(o)];
            grad[b2_off + o] += g;
            const double* row = w2() + static_cast<std::size_t>(o) * hidden_;
            for (int j = 0; j < hidden_; ++j) {
                grad[w2_off + static_cast<std::size_t>(o) * hidden_ + j] +=
                    g * tape.hidden[static_cast<std::size_t>(j)];
                g_h[static_cast<std::size_t>(j)] += g * row[j];
            }
        }
        if (dx) dx->assign(static_cast<std::size_t>(in_), 0.0);
        for (int j = 0; j < hidden_; ++j) {
            const double h = tape.hidden[static_cast<std::size_t>(j)];
            const double g = g_h[static_cast<std::size_t>(j)] * (1.0 - h * h);
            grad[b1_off + j] += g;
            const double* row = w1() + static_cast<std::size_t>(j) * in_;
            for (int i = 0; i < in_; ++i) {
                grad[w1_off + static_cast<std::size_t>(j) * in_ + i] +=
                    g * tape.x[static_cast<std::size_t>(i)];
                if (dx) (*dx)[static_cast<std::size_t>(i)] += g * row[i];
            }
        }
    } else {
        const std::size_t b_off = static_cast<std::size_t>(out_) * in_;
        if (dx) dx->assign(static_cast<std::size_t>(in_), 0.0);
        for (int o = 0; o < out_; ++o) {
            const double g = g_pre[static_cast<std::size_t>(o)];
            grad[b_off + o] += g;
            const double* row = params_.data() + static_cast<std::size_t>(o) * in_;
            for (int i = 0; i < in_; ++i) {
                grad[static_cast<std::size_t>(o) * in_ + i] += g * tape.x[static_cast<std::size_t>(i)];
                if (dx) (*dx)[static_cast<std::size_t>(i)] += g * row[i];
            }
        }
    }
}

SgdMomentum::SgdMomentum(double learning_rate, double momentum, std::size_t n_params)
    : lr_(learning_rate), momentum_(momentum), velocity_(n_params, 0.0) {}

void SgdMomentum::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != velocity_.size() || grad.size() != velocity_.size()) {
        throw std::invalid_argument("SgdMomentum::step: size mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity_[i] = momentum_ * velocity_[i] - lr_ * grad[i];
        params[i] += velocity_[i];
    }
}

}  // namespace ce2
