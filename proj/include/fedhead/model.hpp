#pragma once

#include "fedhead/matrix.hpp"
#include "fedhead/nn.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fedhead::model {

// Architecture of one client's network. Hidden layout is private per client;
// embedding width and class count are federation-wide.
struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t embedding_dim = 0;
    std::size_t num_classes = 0;
};

// The only parameters that ever cross the client boundary.
struct HeadParams {
    Matrix weights; // E x C
    Matrix bias;    // 1 x C

    std::size_t real_count() const { return weights.size() + bias.size(); }
    bool operator==(const HeadParams& other) const = default;
};

// Private body (ReLU MLP ending at the embedding) plus two fixed-shape
// identity heads: the trainable local head and the received global copy.
struct ClientModel {
    ModelSpec spec;
    std::vector<nn::DenseLayer> body;
    nn::DenseLayer local_head;
    nn::DenseLayer global_head;

    nn::LayerStack student_stack() const;
    nn::LayerStack teacher_stack() const;

    Matrix student_logits(const Matrix& input, nn::GradTape* tape = nullptr) const;
    Matrix teacher_logits(const Matrix& input) const;

    std::size_t body_param_count() const;
    // Local head parameters over all trainable parameters.
    double head_fraction() const;
};

struct IntRange {
    std::size_t min = 0;
    std::size_t max = 0;
};

// Random private architecture: depth uniform in depth_range, each hidden
// width uniform in width_range. Deterministic in the seed.
ModelSpec generate_model_spec(std::uint64_t seed, std::size_t input_dim,
                              std::size_t embedding_dim, std::size_t num_classes,
                              IntRange depth_range, IntRange width_range);

// Initializes body and both heads from the seed. The global head is a
// placeholder until the federation broadcasts the server head.
ClientModel build_client_model(const ModelSpec& spec, std::uint64_t seed);

// Deep copy of the local head; later updates to the model do not touch it.
HeadParams extract_head(const ClientModel& model);

// Overwrites only the global head. Body and local head are untouched.
void set_global_head(ClientModel& model, const HeadParams& params);

// Checkpoint I/O: JSON dump of spec + all parameters. Layout is documented in
// the README and may change between versions.
std::string to_checkpoint_json(const ClientModel& model);
ClientModel from_checkpoint_json(const std::string& text);

} // namespace fedhead::model
