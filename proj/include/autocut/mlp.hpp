#pragma once

#include "autocut/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace autocut {

// Small dense perceptron, double precision. ReLU between layers, linear
// output. Double keeps the finite-difference gradient check meaningful.
struct Mlp {
    std::vector<std::size_t> dims;             // [in, hidden..., out]
    std::vector<std::vector<double>> weights;  // per layer, row-major out x in
    std::vector<std::vector<double>> biases;   // per layer, out

    static Mlp make(const std::vector<std::size_t>& dims, Rng& rng);

    bool empty() const { return weights.empty(); }
    std::size_t num_layers() const { return weights.size(); }
    std::size_t in_dim() const { return dims.front(); }
    std::size_t out_dim() const { return dims.back(); }

    std::vector<double> forward(std::span<const double> x) const;
};

// Per-layer inputs and pre-activations captured during a forward pass.
struct MlpTrace {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> preacts;
};

std::vector<double> forward_trace(const Mlp& net, std::span<const double> x, MlpTrace& trace);

struct MlpGrads {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static MlpGrads zeros_like(const Mlp& net);
    void accumulate(const MlpGrads& other);
    void scale(double s);
};

// Backpropagates dL/dout through the traced pass; accumulates parameter
// gradients into grads and returns dL/dx.
std::vector<double> backward(const Mlp& net, const MlpTrace& trace,
                             std::span<const double> dout, MlpGrads& grads);

// SGD step with decoupled weight decay: p -= lr * (g + wd * p).
void apply_sgd(Mlp& net, const MlpGrads& grads, double lr, double weight_decay);

} // namespace autocut
