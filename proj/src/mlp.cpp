#include "autocut/mlp.hpp"

#include "autocut/common.hpp"

#include <cmath>

namespace autocut {

Mlp Mlp::make(const std::vector<std::size_t>& dims, Rng& rng) {
    if (dims.size() < 2) {
        throw config_error("perceptron needs at least input and output dims");
    }
    Mlp net;
    net.dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t fan_in = dims[l];
        const std::size_t fan_out = dims[l + 1];
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        std::vector<double> w(fan_out * fan_in);
        for (auto& v : w) {
            v = rng.gaussian() * scale;
        }
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
    MlpTrace trace;
    return forward_trace(*this, x, trace);
}

std::vector<double> forward_trace(const Mlp& net, std::span<const double> x, MlpTrace& trace) {
    if (x.size() != net.in_dim()) {
        throw data_error("perceptron input dim mismatch");
    }
    trace.inputs.assign(net.num_layers(), {});
    trace.preacts.assign(net.num_layers(), {});
    std::vector<double> cur(x.begin(), x.end());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        trace.inputs[l] = cur;
        const std::size_t in = net.dims[l];
        const std::size_t out = net.dims[l + 1];
        std::vector<double> pre(out);
        const double* w = net.weights[l].data();
        for (std::size_t o = 0; o < out; ++o) {
            double acc = net.biases[l][o];
            const double* wrow = w + o * in;
            for (std::size_t i = 0; i < in; ++i) {
                acc += wrow[i] * cur[i];
            }
            pre[o] = acc;
        }
        trace.preacts[l] = pre;
        if (l + 1 < net.num_layers()) {
            for (auto& v : pre) {
                v = v > 0.0 ? v : 0.0;
            }
        }
        cur = std::move(pre);
    }
    return cur;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads g;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        g.weights.emplace_back(net.weights[l].size(), 0.0);
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    return g;
}

void MlpGrads::accumulate(const MlpGrads& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].size(); ++i) {
            weights[l][i] += other.weights[l][i];
        }
        for (std::size_t i = 0; i < biases[l].size(); ++i) {
            biases[l][i] += other.biases[l][i];
        }
    }
}

void MlpGrads::scale(double s) {
    for (auto& w : weights) {
        for (auto& v : w) {
            v *= s;
        }
    }
    for (auto& b : biases) {
        for (auto& v : b) {
            v *= s;
        }
    }
}

std::vector<double> backward(const Mlp& net, const MlpTrace& trace,
                             std::span<const double> dout, MlpGrads& grads) {
    std::vector<double> delta(dout.begin(), dout.end());
    for (std::size_t li = net.num_layers(); li-- > 0;) {
        const std::size_t in = net.dims[li];
        const std::size_t out = net.dims[li + 1];
        if (li + 1 < net.num_layers()) {
            for (std::size_t o = 0; o < out; ++o) {
                if (trace.preacts[li][o] <= 0.0) {
                    delta[o] = 0.0;
                }
            }
        }
        const std::vector<double>& input = trace.inputs[li];
        double* gw = grads.weights[li].data();
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            grads.biases[li][o] += d;
            double* grow = gw + o * in;
            for (std::size_t i = 0; i < in; ++i) {
                grow[i] += d * input[i];
            }
        }
        std::vector<double> prev(in, 0.0);
        const double* w = net.weights[li].data();
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            const double* wrow = w + o * in;
            for (std::size_t i = 0; i < in; ++i) {
                prev[i] += d * wrow[i];
            }
        }
        delta = std::move(prev);
    }
    return delta;
}

void apply_sgd(Mlp& net, const MlpGrads& grads, double lr, double weight_decay) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
            net.weights[l][i] -= lr * (grads.weights[l][i] + weight_decay * net.weights[l][i]);
        }
        for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
            net.biases[l][i] -= lr * grads.biases[l][i];
        }
    }
}

} // namespace autocut
