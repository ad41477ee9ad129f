#include "fedhead/model.hpp"

#include "fedhead/errors.hpp"
#include "fedhead/rng.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <utility>

namespace fedhead::model {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.size()) throw DataError("checkpoint: matrix payload size mismatch");
    m.values() = data;
    return m;
}

json layer_to_json(const nn::DenseLayer& layer) {
    return json{{"weights", matrix_to_json(layer.weights)},
                {"bias", matrix_to_json(layer.bias)},
                {"activation", layer.activation == nn::Activation::ReLU ? "relu" : "identity"}};
}

nn::DenseLayer layer_from_json(const json& j) {
    nn::DenseLayer layer;
    layer.weights = matrix_from_json(j.at("weights"));
    layer.bias = matrix_from_json(j.at("bias"));
    const auto act = j.at("activation").get<std::string>();
    if (act == "relu") {
        layer.activation = nn::Activation::ReLU;
    } else if (act == "identity") {
        layer.activation = nn::Activation::Identity;
    } else {
        throw DataError("checkpoint: unknown activation '" + act + "'");
    }
    return layer;
}

} // namespace

nn::LayerStack ClientModel::student_stack() const {
    nn::LayerStack stack;
    stack.reserve(body.size() + 1);
    for (const auto& layer : body) stack.push_back(&layer);
    stack.push_back(&local_head);
    return stack;
}

nn::LayerStack ClientModel::teacher_stack() const {
    nn::LayerStack stack;
    stack.reserve(body.size() + 1);
    for (const auto& layer : body) stack.push_back(&layer);
    stack.push_back(&global_head);
    return stack;
}

Matrix ClientModel::student_logits(const Matrix& input, nn::GradTape* tape) const {
    return nn::forward(student_stack(), input, tape);
}

Matrix ClientModel::teacher_logits(const Matrix& input) const {
    return nn::forward(teacher_stack(), input);
}

std::size_t ClientModel::body_param_count() const {
    std::size_t total = 0;
    for (const auto& layer : body) total += layer.param_count();
    return total;
}

double ClientModel::head_fraction() const {
    const auto head = static_cast<double>(local_head.param_count());
    const auto total = static_cast<double>(body_param_count()) + head;
    return head / total;
}

ModelSpec generate_model_spec(std::uint64_t seed, std::size_t input_dim,
                              std::size_t embedding_dim, std::size_t num_classes,
                              IntRange depth_range, IntRange width_range) {
    if (input_dim == 0 || embedding_dim == 0 || num_classes == 0) {
        throw InvalidArgument("generate_model_spec: dimensions must be >= 1");
    }
    if (depth_range.min > depth_range.max || depth_range.min == 0) {
        throw InvalidArgument("generate_model_spec: bad depth range");
    }
    if (width_range.min > width_range.max || width_range.min == 0) {
        throw InvalidArgument("generate_model_spec: bad width range");
    }
    Rng rng(derive_seed(seed, {0x5bec}));
    ModelSpec spec;
    spec.input_dim = input_dim;
    spec.embedding_dim = embedding_dim;
    spec.num_classes = num_classes;
    const auto depth = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(depth_range.min),
                        static_cast<std::int64_t>(depth_range.max)));
    spec.hidden_dims.reserve(depth);
    for (std::size_t i = 0; i < depth; ++i) {
        spec.hidden_dims.push_back(static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(width_range.min),
                            static_cast<std::int64_t>(width_range.max))));
    }
    return spec;
}

ClientModel build_client_model(const ModelSpec& spec, std::uint64_t seed) {
    if (spec.input_dim == 0 || spec.embedding_dim == 0 || spec.num_classes == 0) {
        throw InvalidArgument("build_client_model: dimensions must be >= 1");
    }
    ClientModel model;
    model.spec = spec;
    std::size_t in_dim = spec.input_dim;
    std::size_t index = 0;
    for (std::size_t width : spec.hidden_dims) {
        model.body.push_back(
            nn::init_layer(derive_seed(seed, {0xb0d9, index++}), in_dim, width,
                           nn::Activation::ReLU));
        in_dim = width;
    }
    model.body.push_back(nn::init_layer(derive_seed(seed, {0xb0d9, index}), in_dim,
                                        spec.embedding_dim, nn::Activation::ReLU));
    model.local_head = nn::init_layer(derive_seed(seed, {0x10ca}), spec.embedding_dim,
                                      spec.num_classes, nn::Activation::Identity);
    model.global_head = nn::init_layer(derive_seed(seed, {0x910b}), spec.embedding_dim,
                                       spec.num_classes, nn::Activation::Identity);
    return model;
}

HeadParams extract_head(const ClientModel& model) {
    return HeadParams{model.local_head.weights, model.local_head.bias};
}

void set_global_head(ClientModel& model, const HeadParams& params) {
    if (!params.weights.same_shape(model.global_head.weights) ||
        !params.bias.same_shape(model.global_head.bias)) {
        throw ShapeError("set_global_head: head shape mismatch");
    }
    model.global_head.weights = params.weights;
    model.global_head.bias = params.bias;
}

std::string to_checkpoint_json(const ClientModel& model) {
    json j;
    j["format"] = "fedhead-checkpoint-v1";
    j["spec"] = {{"input_dim", model.spec.input_dim},
                 {"hidden_dims", model.spec.hidden_dims},
                 {"embedding_dim", model.spec.embedding_dim},
                 {"num_classes", model.spec.num_classes}};
    j["body"] = json::array();
    for (const auto& layer : model.body) j["body"].push_back(layer_to_json(layer));
    j["local_head"] = layer_to_json(model.local_head);
    j["global_head"] = layer_to_json(model.global_head);
    return j.dump(2);
}

ClientModel from_checkpoint_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "fedhead-checkpoint-v1") {
            throw DataError("checkpoint: unsupported format tag");
        }
        ClientModel model;
        const auto& spec = j.at("spec");
        model.spec.input_dim = spec.at("input_dim").get<std::size_t>();
        model.spec.hidden_dims = spec.at("hidden_dims").get<std::vector<std::size_t>>();
        model.spec.embedding_dim = spec.at("embedding_dim").get<std::size_t>();
        model.spec.num_classes = spec.at("num_classes").get<std::size_t>();
        for (const auto& layer : j.at("body")) model.body.push_back(layer_from_json(layer));
        model.local_head = layer_from_json(j.at("local_head"));
        model.global_head = layer_from_json(j.at("global_head"));
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: missing or mistyped field: ") + e.what());
    }
}

} // namespace fedhead::model
