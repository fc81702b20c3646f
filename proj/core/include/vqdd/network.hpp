#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

namespace vqdd {

enum class ActivationKind { None, ReLU };

Eigen::VectorXd apply_activation(ActivationKind kind, const Eigen::VectorXd& pre);

/// Dense layer computing W x + B. Rows of `weights` index output neurons.
struct FullyConnectedLayer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd biases;
    ActivationKind activation = ActivationKind::None;

    int fan_in() const { return static_cast<int>(weights.cols()); }
    int fan_out() const { return static_cast<int>(weights.rows()); }

    Eigen::VectorXd apply(const Eigen::VectorXd& input) const;
};

/// 2-D convolution with a square kernel and symmetric stride/padding.
/// Inputs and outputs are flat vectors in channel-major order:
/// index = channel * height * width + row * width + column.
struct ConvolutionalLayer {
    int height = 0;
    int width = 0;
    int kernel_size = 0;
    int stride = 1;
    int padding = 0;
    int in_channels = 0;
    int out_channels = 0;
    std::vector<double> kernel;  // (c_out, c_in, k, k), row-major
    Eigen::VectorXd biases;      // length c_out
    ActivationKind activation = ActivationKind::None;

    int out_height() const;
    int out_width() const;
    int fan_in() const { return in_channels * height * width; }
    int fan_out() const { return out_channels * out_height() * out_width(); }

    double kernel_at(int oc, int ic, int ky, int kx) const {
        return kernel[static_cast<std::size_t>(
            ((oc * in_channels + ic) * kernel_size + ky) * kernel_size + kx)];
    }
    double& kernel_at(int oc, int ic, int ky, int kx) {
        return kernel[static_cast<std::size_t>(
            ((oc * in_channels + ic) * kernel_size + ky) * kernel_size + kx)];
    }

    /// Direct sliding-window convolution on a flat input vector.
    Eigen::VectorXd apply(const Eigen::VectorXd& input) const;

    /// Throws InvalidModelError if the parameters are inconsistent.
    void validate() const;
};

using Layer = std::variant<FullyConnectedLayer, ConvolutionalLayer>;

int layer_fan_in(const Layer& layer);
int layer_fan_out(const Layer& layer);
ActivationKind layer_activation(const Layer& layer);

/// Output spatial dimensions (h_o, w_o) of a convolutional layer.
std::pair<int, int> conv_output_dims(const ConvolutionalLayer& layer);

/// Per-layer values of a forward pass: pre_activations[i] holds the affine
/// output of layer i, post_activations[i] the same values after the layer's
/// activation function.
struct EvaluationTrace {
    std::vector<Eigen::VectorXd> pre_activations;
    std::vector<Eigen::VectorXd> post_activations;
};

/// A feed-forward network. Immutable after construction; transformations
/// produce new Network values.
class Network {
public:
    Network(int input_dim, std::vector<Layer> layers);

    int input_dim() const { return input_dim_; }
    const std::vector<Layer>& layers() const { return layers_; }
    int num_layers() const { return static_cast<int>(layers_.size()); }
    int output_dim() const { return layer_fan_out(layers_.back()); }

    /// Total number of neurons, counting the input and output layers.
    int size() const;

    Eigen::VectorXd evaluate(const Eigen::VectorXd& input) const;
    EvaluationTrace evaluate_trace(const Eigen::VectorXd& input) const;

private:
    int input_dim_;
    std::vector<Layer> layers_;
};

}  // namespace vqdd
