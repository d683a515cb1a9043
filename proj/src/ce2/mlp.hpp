#pragma once

#include <cstdint>
#include <vector>

#include "ce2/rng.hpp"
#include "ce2/vec.hpp"

namespace ce2 {

enum class OutputSquash { None, Sigmoid };

// Small dense net: in -> tanh(hidden) -> out, or a plain affine map when
// hidden == 0. Parameters live in one flat vector so optimizers and
// finite-difference checks can treat them uniformly.
class TwoLayerNet {
public:
    TwoLayerNet(int in_dim, int hidden_dim, int out_dim, OutputSquash squash,
                double init_scale, std::uint64_t seed);

    // affine map with W = I, b = 0 (requires square dims)
    static TwoLayerNet identity_map(int dim);

    int in_dim() const { return in_; }
    int out_dim() const { return out_; }
    int hidden_dim() const { return hidden_; }
    OutputSquash squash() const { return squash_; }

    Vec forward(const Vec& x) const;

    struct Tape {
        Vec x;
        Vec hidden;  // post-tanh
        Vec y;       // post-squash
    };
    Vec forward(const Vec& x, Tape& tape) const;

    // Accumulates dL/dparams into grad (sized param_count()); optionally
    // writes dL/dx into dx.
    void backward(const Tape& tape, const Vec& dLdy, std::vector<double>& grad,
                  Vec* dx) const;

    std::size_t param_count() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

private:
    int in_;
    int hidden_;
    int out_;
    OutputSquash squash_;
    std::vector<double> params_;

    // flat layout: [W1 (hidden x in), b1, W2 (out x hidden), b2],
    // or [W (out x in), b] in affine mode
    const double* w1() const { return params_.data(); }
    const double* b1() const { return params_.data() + static_cast<std::size_t>(hidden_) * in_; }
    const double* w2() const { return b1() + hidden_; }
    const double* b2() const { return w2() + static_cast<std::size_t>(out_) * hidden_; }
};

// Gradient descent with classical momentum; momentum 0 gives plain SGD.
class SgdMomentum {
public:
    SgdMomentum(double learning_rate, double momentum, std::size_t n_params);
    void step(std::vector<double>& params, const std::vector<double>& grad);
    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    double lr_;
    double momentum_;
    std::vector<double> velocity_;
};

}  // namespace ce2
