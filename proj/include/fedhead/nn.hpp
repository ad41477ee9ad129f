#pragma once

#include "fedhead/matrix.hpp"

#include <cstdint>
#include <vector>

namespace fedhead::nn {

enum class Activation { ReLU, Identity };

// One fully-connected layer: weights in_dim x out_dim, bias 1 x out_dim.
struct DenseLayer {
    Matrix weights;
    Matrix bias;
    Activation activation = Activation::Identity;

    std::size_t in_dim() const { return weights.rows(); }
    std::size_t out_dim() const { return weights.cols(); }
    std::size_t param_count() const { return weights.size() + bias.size(); }
};

// Glorot-uniform weights in +-sqrt(6/(in+out)), zero bias. Same seed gives
// bit-identical layers.
DenseLayer init_layer(std::uint64_t seed, std::size_t in_dim, std::size_t out_dim,
                      Activation activation);

// A forward chain is an ordered view over layers owned elsewhere.
using LayerStack = std::vector<const DenseLayer*>;

struct LayerGrads {
    Matrix weights;
    Matrix bias;
};

// Parameter gradients keyed by layer identity. Layers that never appeared on
// the tape report zero gradients.
class GradientSet {
public:
    const LayerGrads* find(const DenseLayer& layer) const;
    LayerGrads grads_or_zero(const DenseLayer& layer) const;
    std::size_t size() const { return entries_.size(); }

    void accumulate(const DenseLayer* layer, Matrix dw, Matrix db);

private:
    std::vector<std::pair<const DenseLayer*, LayerGrads>> entries_;
};

// Records one forward chain plus the loss gradient at its output.
// backward() consumes the tape exactly once.
class GradTape {
public:
    // Accumulates d(loss)/d(chain output); loss functions call this, and it
    // is public so custom scalar losses can seed the tape directly.
    void add_output_grad(const Matrix& grad);

    bool has_chain() const { return has_chain_; }
    bool consumed() const { return consumed_; }
    std::size_t chain_length() const { return steps_.size(); }

private:
    struct Step {
        const DenseLayer* layer;
        Matrix input;
        Matrix preact;
    };

    friend Matrix forward(const LayerStack&, const Matrix&, GradTape*);
    friend GradientSet backward(GradTape&, double);

    std::vector<Step> steps_;
    Matrix output_grad_;
    bool has_chain_ = false;
    bool has_loss_ = false;
    bool consumed_ = false;
};

// Runs the chain, returning batch x out_dim pre-softmax logits. With a tape,
// records the intermediates needed for backward().
Matrix forward(const LayerStack& layers, const Matrix& input, GradTape* tape = nullptr);

// Row-wise temperature softmax, max-subtracted for stability. Outputs are
// floored at 1e-300 so downstream log/ratio terms stay finite.
Matrix softmax(const Matrix& logits, double temperature = 1.0);

// Mean over the batch of -log softmax(logits)[label]. With a tape, adds the
// loss gradient at the logits.
double cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                     GradTape* tape = nullptr);

// Exact reverse-mode gradients for every parameter on the tape, scaled by
// loss_grad. Consumes the tape; a second call is a state error.
GradientSet backward(GradTape& tape, double loss_grad = 1.0);

// p <- p - lr * g, elementwise.
void sgd_step(Matrix& param, const Matrix& grad, double lr);
void sgd_step(DenseLayer& layer, const LayerGrads& grads, double lr);

std::vector<int> argmax_rows(const Matrix& logits);
double accuracy(const Matrix& logits, const std::vector<int>& labels);

} // namespace fedhead::nn
