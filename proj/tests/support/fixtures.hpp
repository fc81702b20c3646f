#pragma once

#include <random>
#include <vector>

#include "vqdd/network.hpp"
#include "vqdd/property.hpp"
#include "vqdd/query.hpp"

namespace vqdd::test {

/// The running-example network: one input, two hidden ReLU layers of three
/// neurons, one output. Evaluates (5) to (5).
inline Network make_ne() {
    FullyConnectedLayer l1;
    l1.weights = Eigen::MatrixXd(3, 1);
    l1.weights << -5, -0.5, -1;
    l1.biases = Eigen::VectorXd(3);
    l1.biases << 10, -2.5, 7;
    l1.activation = ActivationKind::ReLU;

    FullyConnectedLayer l2;
    l2.weights = Eigen::MatrixXd(3, 3);
    l2.weights << 0.8, -1, -2, 0, 0.5, 0, 2, 0.5, -1;
    l2.biases = Eigen::VectorXd(3);
    l2.biases << 8, 2, 0;
    l2.activation = ActivationKind::ReLU;

    FullyConnectedLayer l3;
    l3.weights = Eigen::MatrixXd(1, 3);
    l3.weights << 0.25, 2, 0.5;
    l3.biases = Eigen::VectorXd::Zero(1);

    return Network(1, {l1, l2, l3});
}

/// The running-example property: x in [5, 10], y in [5, 10].
inline Property make_pe() {
    LinearInequality lo;
    lo.coeffs = Eigen::VectorXd::Ones(1);
    lo.relation = Relation::GreaterEq;
    lo.bound = 5.0;
    LinearInequality hi;
    hi.coeffs = Eigen::VectorXd::Ones(1);
    hi.relation = Relation::LessEq;
    hi.bound = 10.0;
    return Property({{5.0, 10.0}}, 1, {{lo, hi}});
}

inline VerificationQuery make_qe() { return VerificationQuery(make_ne(), make_pe()); }

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
    return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int size, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v(i) = dist(rng);
    return v;
}

/// Fully connected ReLU network with the given layer widths (hidden widths,
/// then the output width implicitly carries no activation).
inline Network random_fc_network(std::mt19937_64& rng, int input_dim,
                                 const std::vector<int>& widths, double scale = 1.0) {
    std::vector<Layer> layers;
    int fan_in = input_dim;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        FullyConnectedLayer fc;
        fc.weights = random_matrix(rng, widths[i], fan_in, scale);
        fc.biases = random_vector(rng, widths[i], scale);
        fc.activation =
            i + 1 < widths.size() ? ActivationKind::ReLU : ActivationKind::None;
        fan_in = widths[i];
        layers.emplace_back(std::move(fc));
    }
    return Network(input_dim, std::move(layers));
}

inline ConvolutionalLayer random_conv_layer(std::mt19937_64& rng, int height, int width,
                                            int kernel, int stride, int padding, int in_channels,
                                            int out_channels,
                                            ActivationKind activation = ActivationKind::ReLU) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ConvolutionalLayer conv;
    conv.height = height;
    conv.width = width;
    conv.kernel_size = kernel;
    conv.stride = stride;
    conv.padding = padding;
    conv.in_channels = in_channels;
    conv.out_channels = out_channels;
    conv.kernel.resize(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel);
    for (double& w : conv.kernel) w = dist(rng);
    conv.biases = random_vector(rng, out_channels, 1.0);
    conv.activation = activation;
    return conv;
}

inline ConvolutionalLayer random_small_conv(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> hw(2, 8);
    std::uniform_int_distribution<int> ks(1, 3);
    std::uniform_int_distribution<int> st(1, 2);
    std::uniform_int_distribution<int> pd(0, 1);
    std::uniform_int_distribution<int> ch(1, 3);
    for (;;) {
        const int h = hw(rng), w = hw(rng), k = ks(rng), s = st(rng), p = pd(rng);
        if (h + 2 * p < k || w + 2 * p < k) continue;
        return random_conv_layer(rng, h, w, k, s, p, ch(rng), ch(rng));
    }
}

/// Convolutional front ends followed by fully connected layers.
inline Network random_conv_network(std::mt19937_64& rng, int conv_layers, int fc_width) {
    std::vector<Layer> layers;
    ConvolutionalLayer first = random_small_conv(rng);
    const int input_dim = first.fan_in();
    int fan_in = first.fan_out();
    layers.emplace_back(first);
    for (int i = 1; i < conv_layers; ++i) {
        // Chain a compatible conv layer on the previous feature map.
        const auto& prev = std::get<ConvolutionalLayer>(layers.back());
        const int h = prev.out_height(), w = prev.out_width();
        if (h < 1 || w < 1) break;
        const int k = std::min({3, h, w});
        ConvolutionalLayer next =
            random_conv_layer(rng, h, w, k, 1, 0, prev.out_channels, 2);
        fan_in = next.fan_out();
        layers.emplace_back(std::move(next));
    }
    FullyConnectedLayer mid;
    mid.weights = random_matrix(rng, fc_width, fan_in, 1.0);
    mid.biases = random_vector(rng, fc_width, 1.0);
    mid.activation = ActivationKind::ReLU;
    layers.emplace_back(std::move(mid));
    FullyConnectedLayer out;
    out.weights = random_matrix(rng, 2, fc_width, 1.0);
    out.biases = random_vector(rng, 2, 1.0);
    layers.emplace_back(std::move(out));
    return Network(input_dim, std::move(layers));
}

/// Box plus a random disjunctive output region.
inline Property random_property(std::mt19937_64& rng, int input_dim, int output_dim) {
    std::uniform_real_distribution<double> center_dist(-2.0, 2.0);
    std::uniform_real_distribution<double> width_dist(0.1, 2.0);
    std::vector<Interval> box(input_dim);
    for (Interval& interval : box) {
        const double center = center_dist(rng);
        const double width = width_dist(rng);
        interval = {center - width / 2.0, center + width / 2.0};
    }
    std::uniform_int_distribution<int> disjunct_count(1, 3);
    std::uniform_int_distribution<int> ineq_count(1, 3);
    std::uniform_int_distribution<int> rel(0, 1);
    std::vector<Conjunction> region(static_cast<std::size_t>(disjunct_count(rng)));
    for (Conjunction& conjunct : region) {
        const int n = ineq_count(rng);
        for (int i = 0; i < n; ++i) {
            LinearInequality ineq;
            ineq.coeffs = random_vector(rng, output_dim, 1.0);
            ineq.relation = rel(rng) ? Relation::LessEq : Relation::GreaterEq;
            ineq.bound = center_dist(rng);
            conjunct.push_back(std::move(ineq));
        }
    }
    return Property(std::move(box), output_dim, std::move(region));
}

inline Eigen::VectorXd random_point_in_box(std::mt19937_64& rng, const Property& property) {
    Eigen::VectorXd point(property.input_dim());
    for (int i = 0; i < property.input_dim(); ++i) {
        std::uniform_real_distribution<double> dist(property.input_box()[i].lower,
                                                    property.input_box()[i].upper);
        point(i) = dist(rng);
    }
    return point;
}

}  // namespace vqdd::test
