#include "vqdd/network.hpp"

#include <string>

#include "vqdd/errors.hpp"

namespace vqdd {

Eigen::VectorXd apply_activation(ActivationKind kind, const Eigen::VectorXd& pre) {
    switch (kind) {
        case ActivationKind::None:
            return pre;
        case ActivationKind::ReLU:
            return pre.cwiseMax(0.0);
    }
    throw InvalidModelError("unknown activation kind");
}

Eigen::VectorXd FullyConnectedLayer::apply(const Eigen::VectorXd& input) const {
    return weights * input + biases;
}

int ConvolutionalLayer::out_height() const {
    return (height + 2 * padding - kernel_size) / stride + 1;
}

int ConvolutionalLayer::out_width() const {
    return (width + 2 * padding - kernel_size) / stride + 1;
}

void ConvolutionalLayer::validate() const {
    if (kernel_size < 1 || stride < 1 || padding < 0)
        throw InvalidModelError("convolutional layer requires k >= 1, s >= 1, p >= 0");
    if (height < 1 || width < 1 || in_channels < 1 || out_channels < 1)
        throw InvalidModelError("convolutional layer dimensions must be positive");
    if (height + 2 * padding < kernel_size || width + 2 * padding < kernel_size)
        throw InvalidModelError("kernel does not fit the padded input");
    if (kernel.size() != static_cast<std::size_t>(out_channels) * in_channels *
                             kernel_size * kernel_size)
        throw InvalidModelError("kernel tensor has wrong number of entries");
    if (biases.size() != out_channels)
        throw InvalidModelError("convolutional bias vector must have one entry per output channel");
}

Eigen::VectorXd ConvolutionalLayer::apply(const Eigen::VectorXd& input) const {
    const int ho = out_height();
    const int wo = out_width();
    Eigen::VectorXd out(fan_out());
    for (int oc = 0; oc < out_channels; ++oc) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double acc = biases(oc);
                for (int ic = 0; ic < in_channels; ++ic) {
                    for (int ky = 0; ky < kernel_size; ++ky) {
                        const int iy = oy * stride - padding + ky;
                        if (iy < 0 || iy >= height) continue;
                        for (int kx = 0; kx < kernel_size; ++kx) {
                            const int ix = ox * stride - padding + kx;
                            if (ix < 0 || ix >= width) continue;
                            acc += kernel_at(oc, ic, ky, kx) *
                                   input((ic * height + iy) * width + ix);
                        }
                    }
                }
                out((oc * ho + oy) * wo + ox) = acc;
            }
        }
    }
    return out;
}

int layer_fan_in(const Layer& layer) {
    return std::visit([](const auto& l) { return l.fan_in(); }, layer);
}

int layer_fan_out(const Layer& layer) {
    return std::visit([](const auto& l) { return l.fan_out(); }, layer);
}

ActivationKind layer_activation(const Layer& layer) {
    return std::visit([](const auto& l) { return l.activation; }, layer);
}

std::pair<int, int> conv_output_dims(const ConvolutionalLayer& layer) {
    layer.validate();
    return {layer.out_height(), layer.out_width()};
}

Network::Network(int input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
    if (input_dim_ < 1) throw InvalidModelError("network input dimension must be positive");
    if (layers_.empty()) throw InvalidModelError("network needs at least an output layer");

    int expected_fan_in = input_dim_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& layer = layers_[i];
        if (const auto* fc = std::get_if<FullyConnectedLayer>(&layer)) {
            if (fc->weights.rows() != fc->biases.size())
                throw InvalidModelError("layer " + std::to_string(i + 1) +
                                        ": weight rows and bias length differ");
            if (fc->fan_out() < 1)
                throw InvalidModelError("layer " + std::to_string(i + 1) + " has no neurons");
        } else {
            std::get<ConvolutionalLayer>(layer).validate();
        }
        if (layer_fan_in(layer) != expected_fan_in)
            throw InvalidModelError("layer " + std::to_string(i + 1) + " expects fan-in " +
                                    std::to_string(layer_fan_in(layer)) + " but gets " +
                                    std::to_string(expected_fan_in));
        expected_fan_in = layer_fan_out(layer);
    }

    const Layer& output = layers_.back();
    if (!std::holds_alternative<FullyConnectedLayer>(output))
        throw InvalidModelError("output layer must be fully connected");
    if (layer_activation(output) != ActivationKind::None)
        throw InvalidModelError("output layer must not have an activation function");
}

int Network::size() const {
    int total = input_dim_;
    for (const Layer& layer : layers_) total += layer_fan_out(layer);
    return total;
}

Eigen::VectorXd Network::evaluate(const Eigen::VectorXd& input) const {
    if (input.size() != input_dim_)
        throw InvalidInputError("input has dimension " + std::to_string(input.size()) +
                                ", network expects " + std::to_string(input_dim_));
    Eigen::VectorXd current = input;
    for (const Layer& layer : layers_) {
        Eigen::VectorXd pre =
            std::visit([&](const auto& l) { return l.apply(current); }, layer);
        current = apply_activation(layer_activation(layer), pre);
    }
    return current;
}

EvaluationTrace Network::evaluate_trace(const Eigen::VectorXd& input) const {
    if (input.size() != input_dim_)
        throw InvalidInputError("input has dimension " + std::to_string(input.size()) +
                                ", network expects " + std::to_string(input_dim_));
    EvaluationTrace trace;
    trace.pre_activations.reserve(layers_.size());
    trace.post_activations.reserve(layers_.size());
    Eigen::VectorXd current = input;
    for (const Layer& layer : layers_) {
        Eigen::VectorXd pre =
            std::visit([&](const auto& l) { return l.apply(current); }, layer);
        Eigen::VectorXd post = apply_activation(layer_activation(layer), pre);
        trace.pre_activations.push_back(pre);
        trace.post_activations.push_back(post);
        current = std::move(post);
    }
    return trace;
}

}  // namespace vqdd
