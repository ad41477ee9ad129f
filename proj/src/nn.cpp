#include "fedhead/nn.hpp"

#include "fedhead/errors.hpp"
#include "fedhead/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fedhead::nn {

namespace {

constexpr double kProbFloor = 1e-300;

void check_labels(const Matrix& logits, const std::vector<int>& labels) {
    if (labels.size() != logits.rows()) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(logits.rows()) + " rows");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logits.cols()) {
            throw InvalidArgument("cross_entropy: label " + std::to_string(labels[i]) +
                                  " out of range at row " + std::to_string(i));
        }
    }
}

double row_logsumexp(const double* z, std::size_t n) {
    double m = z[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, z[j]);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += std::exp(z[j] - m);
    return m + std::log(acc);
}

} // namespace

DenseLayer init_layer(std::uint64_t seed, std::size_t in_dim, std::size_t out_dim,
                      Activation activation) {
    if (in_dim == 0 || out_dim == 0) {
        throw InvalidArgument("init_layer: dimensions must be >= 1");
    }
    DenseLayer layer;
    layer.weights = Matrix(in_dim, out_dim);
    layer.bias = Matrix(1, out_dim);
    layer.activation = activation;
    const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    Rng rng(seed);
    for (auto& w : layer.weights.values()) w = rng.uniform(-bound, bound);
    return layer;
}

const LayerGrads* GradientSet::find(const DenseLayer& layer) const {
    for (const auto& [ptr, grads] : entries_) {
        if (ptr == &layer) return &grads;
    }
    return nullptr;
}

LayerGrads GradientSet::grads_or_zero(const DenseLayer& layer) const {
    if (const LayerGrads* g = find(layer)) return *g;
    return {Matrix(layer.weights.rows(), layer.weights.cols()),
            Matrix(1, layer.bias.cols())};
}

void GradientSet::accumulate(const DenseLayer* layer, Matrix dw, Matrix db) {
    for (auto& [ptr, grads] : entries_) {
        if (ptr == layer) {
            grads.weights += dw;
            grads.bias += db;
            return;
        }
    }
    entries_.emplace_back(layer, LayerGrads{std::move(dw), std::move(db)});
}

void GradTape::add_output_grad(const Matrix& grad) {
    if (!has_chain_) throw StateError("tape: loss gradient before any forward pass");
    if (consumed_) throw StateError("tape: already consumed by backward");
    if (!has_loss_) {
        output_grad_ = grad;
        has_loss_ = true;
        return;
    }
    if (!output_grad_.same_shape(grad)) {
        throw ShapeError("tape: loss gradient shape mismatch");
    }
    output_grad_ += grad;
}

Matrix forward(const LayerStack& layers, const Matrix& input, GradTape* tape) {
    if (layers.empty()) throw InvalidArgument("forward: empty layer stack");
    if (tape) {
        if (tape->has_chain_) throw StateError("forward: tape already holds a chain");
        if (tape->consumed_) throw StateError("forward: tape already consumed");
        tape->has_chain_ = true;
    }
    Matrix current = input;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const DenseLayer& layer = *layers[li];
        if (current.cols() != layer.in_dim()) {
            throw ShapeError("forward: layer " + std::to_string(li) + " expects " +
                             std::to_string(layer.in_dim()) + " inputs, got " +
                             std::to_string(current.cols()));
        }
        Matrix preact = matmul(current, layer.weights);
        add_row_inplace(preact, layer.bias);
        Matrix out = preact;
        if (layer.activation == Activation::ReLU) {
            for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
        }
        if (tape) {
            tape->steps_.push_back({&layer, std::move(current), std::move(preact)});
        }
        current = std::move(out);
    }
    return current;
}

Matrix softmax(const Matrix& logits, double temperature) {
    if (!(temperature > 0.0)) {
        throw InvalidArgument("softmax: temperature must be > 0");
    }
    Matrix probs(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double* z = logits.row(i);
        double* p = probs.row(i);
        double m = z[0] / temperature;
        for (std::size_t j = 1; j < logits.cols(); ++j) {
            m = std::max(m, z[j] / temperature);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            p[j] = std::exp(z[j] / temperature - m);
            total += p[j];
        }
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            p[j] = std::max(p[j] / total, kProbFloor);
        }
    }
    return probs;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels, GradTape* tape) {
    if (logits.rows() == 0 || logits.cols() == 0) {
        throw InvalidArgument("cross_entropy: empty logits");
    }
    check_labels(logits, labels);
    const auto batch = static_cast<double>(logits.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double* z = logits.row(i);
        total += row_logsumexp(z, logits.cols()) - z[labels[i]];
    }
    const double loss = total / batch;
    if (tape) {
        Matrix grad = softmax(logits);
        for (std::size_t i = 0; i < logits.rows(); ++i) {
            double* g = grad.row(i);
            g[labels[i]] -= 1.0;
            for (std::size_t j = 0; j < logits.cols(); ++j) g[j] /= batch;
        }
        tape->add_output_grad(grad);
    }
    return loss;
}

GradientSet backward(GradTape& tape, double loss_grad) {
    if (tape.consumed_) throw StateError("backward: tape already consumed");
    if (!tape.has_chain_) throw StateError("backward: tape holds no forward pass");
    if (!tape.has_loss_) throw StateError("backward: tape holds no loss gradient");
    tape.consumed_ = true;

    Matrix grad = tape.output_grad_;
    grad *= loss_grad;

    GradientSet grads;
    for (auto it = tape.steps_.rbegin(); it != tape.steps_.rend(); ++it) {
        const auto& step = *it;
        Matrix dpre = std::move(grad);
        if (step.layer->activation == Activation::ReLU) {
            for (std::size_t i = 0; i < dpre.size(); ++i) {
                if (step.preact.values()[i] <= 0.0) dpre.values()[i] = 0.0;
            }
        }
        grads.accumulate(step.layer, matmul_tn(step.input, dpre), column_sums(dpre));
        grad = matmul_nt(dpre, step.layer->weights);
    }
    tape.steps_.clear();
    return grads;
}

void sgd_step(Matrix& param, const Matrix& grad, double lr) {
    if (!param.same_shape(grad)) throw ShapeError("sgd_step: shape mismatch");
    for (std::size_t i = 0; i < param.size(); ++i) {
        param.values()[i] -= lr * grad.values()[i];
    }
}

void sgd_step(DenseLayer& layer, const LayerGrads& grads, double lr) {
    sgd_step(layer.weights, grads.weights, lr);
    sgd_step(layer.bias, grads.bias, lr);
}

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double* z = logits.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j) {
            if (z[j] > z[best]) best = j;
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels) {
    if (labels.size() != logits.rows()) throw ShapeError("accuracy: label count mismatch");
    if (labels.empty()) return 0.0;
    const auto predictions = argmax_rows(logits);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predictions[i] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

} // namespace fedhead::nn
