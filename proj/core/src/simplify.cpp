#include "vqdd/simplify.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "vqdd/errors.hpp"

namespace vqdd {

namespace {

constexpr double kZeroSumGuard = 1e-12;

void require_hidden_layer(const Network& network, int layer) {
    if (layer < 1 || layer >= network.num_layers())
        throw InvalidStepError("layer " + std::to_string(layer) +
                               " is not a hidden layer of a " +
                               std::to_string(network.num_layers()) + "-layer network");
}

const FullyConnectedLayer& require_fc(const Network& network, int layer) {
    const auto* fc = std::get_if<FullyConnectedLayer>(&network.layers()[layer - 1]);
    if (!fc)
        throw InvalidStepError("layer " + std::to_string(layer) + " is not fully connected");
    return *fc;
}

std::vector<Layer> replace_pair(const std::vector<Layer>& layers, int layer,
                                FullyConnectedLayer merged) {
    std::vector<Layer> out;
    out.reserve(layers.size() - 1);
    for (int i = 0; i < static_cast<int>(layers.size()); ++i) {
        if (i == layer - 1) {
            out.emplace_back(std::move(merged));
            ++i;  // skip layer+1
        } else {
            out.push_back(layers[i]);
        }
    }
    return out;
}

// Phase of a neuron at the witness: >= 0 counts as active.
bool is_active(double pre_activation) { return pre_activation >= 0.0; }

struct RankedPair {
    int layer;
    int first;
    int second;
    int category;  // per the configured priority
    double gap;    // |v_first - v_second|
};

int category_rank(PairPriority priority, bool first_active, bool second_active) {
    const int actives = static_cast<int>(first_active) + static_cast<int>(second_active);
    switch (priority) {
        case PairPriority::Arbitrary:
        case PairPriority::ClosestValues:
            return 0;
        case PairPriority::InactiveFirst:
            return actives == 0 ? 0 : 1;
        case PairPriority::ActiveFirst:
            return actives == 2 ? 0 : 1;
        case PairPriority::InactiveThenMixedThenActive:
            return actives;
    }
    throw InvalidStepError("unknown pair priority");
}

void sort_ranked(std::vector<RankedPair>& pairs, PairPriority priority) {
    const bool by_gap = priority != PairPriority::Arbitrary;
    std::sort(pairs.begin(), pairs.end(), [&](const RankedPair& a, const RankedPair& b) {
        const double ga = by_gap ? a.gap : 0.0;
        const double gb = by_gap ? b.gap : 0.0;
        return std::tie(a.category, ga, a.layer, a.first, a.second) <
               std::tie(b.category, gb, b.layer, b.first, b.second);
    });
}

std::vector<RankedPair> ranked_pairs_for_layer(const Network& network, int layer,
                                               const EvaluationTrace& trace,
                                               PairPriority priority) {
    require_hidden_layer(network, layer);
    const FullyConnectedLayer& fc = require_fc(network, layer);
    if (fc.activation != ActivationKind::ReLU)
        throw InvalidStepError("layer " + std::to_string(layer) + " has no ReLU activation");
    const Eigen::VectorXd& values = trace.pre_activations[layer - 1];
    std::vector<RankedPair> pairs;
    const int n = fc.fan_out();
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int b = 0; b < n; ++b) {
        for (int c = b + 1; c < n; ++c) {
            pairs.push_back({layer, b, c,
                             category_rank(priority, is_active(values(b)), is_active(values(c))),
                             std::abs(values(b) - values(c))});
        }
    }
    return pairs;
}

}  // namespace

PhaseMask phase_mask(const Network& network, int layer, const Eigen::VectorXd& witness) {
    if (layer < 1 || layer > network.num_layers())
        throw InvalidStepError("layer " + std::to_string(layer) + " out of range");
    if (layer_activation(network.layers()[layer - 1]) != ActivationKind::ReLU)
        throw InvalidStepError("layer " + std::to_string(layer) + " has no ReLU activation");
    const EvaluationTrace trace = network.evaluate_trace(witness);
    const Eigen::VectorXd& pre = trace.pre_activations[layer - 1];
    PhaseMask mask;
    mask.diagonal = (pre.array() >= 0.0).cast<double>();
    return mask;
}

Network merge_fc_layers(const Network& network, int layer, const Eigen::VectorXd& witness) {
    require_hidden_layer(network, layer);
    const FullyConnectedLayer& lower = require_fc(network, layer);
    const FullyConnectedLayer& upper = require_fc(network, layer + 1);
    if (lower.activation != ActivationKind::ReLU)
        throw InvalidStepError("layer " + std::to_string(layer) + " has no ReLU to linearize");

    const PhaseMask mask = phase_mask(network, layer, witness);

    FullyConnectedLayer merged;
    merged.weights = upper.weights * mask.diagonal.asDiagonal() * lower.weights;
    merged.biases = upper.weights * mask.diagonal.asDiagonal() * lower.biases + upper.biases;
    merged.activation = upper.activation;
    return Network(network.input_dim(), replace_pair(network.layers(), layer, std::move(merged)));
}

FullyConnectedLayer conv_to_fc(const ConvolutionalLayer& layer) {
    layer.validate();
    const int ho = layer.out_height();
    const int wo = layer.out_width();

    FullyConnectedLayer fc;
    fc.weights = Eigen::MatrixXd::Zero(layer.fan_out(), layer.fan_in());
    fc.biases.resize(layer.fan_out());
    fc.activation = layer.activation;

    for (int oc = 0; oc < layer.out_channels; ++oc) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                const int row = (oc * ho + oy) * wo + ox;
                fc.biases(row) = layer.biases(oc);
                for (int ic = 0; ic < layer.in_channels; ++ic) {
                    for (int ky = 0; ky < layer.kernel_size; ++ky) {
                        const int iy = oy * layer.stride - layer.padding + ky;
                        if (iy < 0 || iy >= layer.height) continue;
                        for (int kx = 0; kx < layer.kernel_size; ++kx) {
                            const int ix = ox * layer.stride - layer.padding + kx;
                            if (ix < 0 || ix >= layer.width) continue;
                            fc.weights(row, (ic * layer.height + iy) * layer.width + ix) =
                                layer.kernel_at(oc, ic, ky, kx);
                        }
                    }
                }
            }
        }
    }
    return fc;
}

Network merge_conv_layer(const Network& network, int layer, const Eigen::VectorXd& witness) {
    require_hidden_layer(network, layer);
    const auto* conv = std::get_if<ConvolutionalLayer>(&network.layers()[layer - 1]);
    if (!conv)
        throw InvalidStepError("layer " + std::to_string(layer) + " is not convolutional");
    if (conv->activation != ActivationKind::ReLU)
        throw InvalidStepError("layer " + std::to_string(layer) + " has no ReLU to linearize");

    const FullyConnectedLayer lowered = conv_to_fc(*conv);
    const Layer& next = network.layers()[layer];
    const FullyConnectedLayer upper =
        std::holds_alternative<FullyConnectedLayer>(next)
            ? std::get<FullyConnectedLayer>(next)
            : conv_to_fc(std::get<ConvolutionalLayer>(next));

    const PhaseMask mask = phase_mask(network, layer, witness);

    FullyConnectedLayer merged;
    merged.weights = upper.weights * mask.diagonal.asDiagonal() * lowered.weights;
    merged.biases = upper.weights * mask.diagonal.asDiagonal() * lowered.biases + upper.biases;
    merged.activation = upper.activation;
    return Network(network.input_dim(), replace_pair(network.layers(), layer, std::move(merged)));
}

Network merge_neurons(const Network& network, int layer, int first, int second,
                      const Eigen::VectorXd& witness) {
    require_hidden_layer(network, layer);
    const FullyConnectedLayer& current = require_fc(network, layer);
    const FullyConnectedLayer& next = require_fc(network, layer + 1);
    if (current.activation != ActivationKind::ReLU)
        throw InvalidStepError("layer " + std::to_string(layer) + " has no ReLU activation");
    const int n = current.fan_out();
    if (n < 2) throw InvalidStepError("layer " + std::to_string(layer) + " has fewer than 2 neurons");
    if (first < 0 || second >= n || first >= second)
        throw InvalidStepError("invalid neuron pair (" + std::to_string(first) + ", " +
                               std::to_string(second) + ") for layer of width " +
                               std::to_string(n));

    const EvaluationTrace trace = network.evaluate_trace(witness);
    const Eigen::VectorXd& values = trace.pre_activations[layer - 1];
    const double vb = values(first);
    const double vc = values(second);

    FullyConnectedLayer new_current;
    FullyConnectedLayer new_next;
    new_current.activation = current.activation;
    new_next.activation = next.activation;
    new_next.biases = next.biases;

    if (is_active(vb) == is_active(vc)) {
        if (std::abs(vb + vc) < kZeroSumGuard)
            throw InvalidStepError("pre-activation values of the pair sum to ~0; "
                                   "outgoing weights would be unbounded");

        new_current.weights.resize(n - 1, current.fan_in());
        new_current.biases.resize(n - 1);
        for (int i = 0; i < n - 1; ++i) {
            const int src = i < second ? i : i + 1;  // drop row `second`
            if (i == first) {
                new_current.weights.row(i) =
                    (current.weights.row(first) + current.weights.row(second)) / 2.0;
                new_current.biases(i) = (current.biases(first) + current.biases(second)) / 2.0;
            } else {
                new_current.weights.row(i) = current.weights.row(src);
                new_current.biases(i) = current.biases(src);
            }
        }

        new_next.weights.resize(next.fan_out(), n - 1);
        for (int j = 0; j < n - 1; ++j) {
            const int src = j < second ? j : j + 1;
            if (j == first) {
                new_next.weights.col(j) =
                    2.0 * (next.weights.col(first) * vb + next.weights.col(second) * vc) /
                    (vb + vc);
            } else {
                new_next.weights.col(j) = next.weights.col(src);
            }
        }
    } else {
        // Mixed phase: the inactive neuron contributes nothing at the witness.
        const int dropped = is_active(vb) ? second : first;
        new_current.weights.resize(n - 1, current.fan_in());
        new_current.biases.resize(n - 1);
        new_next.weights.resize(next.fan_out(), n - 1);
        for (int i = 0; i < n - 1; ++i) {
            const int src = i < dropped ? i : i + 1;
            new_current.weights.row(i) = current.weights.row(src);
            new_current.biases(i) = current.biases(src);
            new_next.weights.col(i) = next.weights.col(src);
        }
    }

    std::vector<Layer> layers = network.layers();
    layers[layer - 1] = std::move(new_current);
    layers[layer] = std::move(new_next);
    return Network(network.input_dim(), std::move(layers));
}

std::vector<std::pair<int, int>> candidate_pairs(const Network& network, int layer,
                                                 const Eigen::VectorXd& witness,
                                                 PairPriority priority) {
    const EvaluationTrace trace = network.evaluate_trace(witness);
    std::vector<RankedPair> ranked = ranked_pairs_for_layer(network, layer, trace, priority);
    sort_ranked(ranked, priority);
    std::vector<std::pair<int, int>> out;
    out.reserve(ranked.size());
    for (const RankedPair& p : ranked) out.emplace_back(p.first, p.second);
    return out;
}

std::vector<SimplificationStep> strategy_attempts(const Network& network,
                                                  const Eigen::VectorXd& witness,
                                                  const StrategyConfig& config) {
    const EvaluationTrace trace = network.evaluate_trace(witness);
    const int n = network.num_layers();

    std::vector<SimplificationStep> conv_block;
    if (config.conv_merges) {
        for (int t = 1; t < n; ++t) {
            const auto* conv = std::get_if<ConvolutionalLayer>(&network.layers()[t - 1]);
            if (conv && conv->activation == ActivationKind::ReLU)
                conv_block.push_back(LowerAndMergeConvStep{t});
        }
    }

    std::vector<SimplificationStep> fc_block;
    if (config.fc_merges) {
        for (int t = 1; t < n; ++t) {
            const auto* lower = std::get_if<FullyConnectedLayer>(&network.layers()[t - 1]);
            const auto* upper = std::get_if<FullyConnectedLayer>(&network.layers()[t]);
            if (lower && upper && lower->activation == ActivationKind::ReLU)
                fc_block.push_back(MergeFcLayersStep{t});
        }
        if (config.fc_layer_order == StrategyConfig::LayerOrder::Descending)
            std::reverse(fc_block.begin(), fc_block.end());
    }

    std::vector<SimplificationStep> neuron_block;
    if (config.neuron_merges) {
        std::vector<RankedPair> all_pairs;
        for (int t = 1; t < n; ++t) {
            const auto* lower = std::get_if<FullyConnectedLayer>(&network.layers()[t - 1]);
            const auto* upper = std::get_if<FullyConnectedLayer>(&network.layers()[t]);
            if (!lower || !upper || lower->activation != ActivationKind::ReLU) continue;
            if (lower->fan_out() < 2) continue;
            auto pairs = ranked_pairs_for_layer(network, t, trace, config.pair_priority);
            all_pairs.insert(all_pairs.end(), pairs.begin(), pairs.end());
        }
        sort_ranked(all_pairs, config.pair_priority);
        neuron_block.reserve(all_pairs.size());
        for (const RankedPair& p : all_pairs)
            neuron_block.push_back(MergeNeuronsStep{p.layer, p.first, p.second});
    }

    std::vector<SimplificationStep> attempts;
    attempts.reserve(conv_block.size() + fc_block.size() + neuron_block.size());
    const auto append = [&](std::vector<SimplificationStep>& block) {
        attempts.insert(attempts.end(), block.begin(), block.end());
    };
    if (config.conv_before_fc) {
        append(conv_block);
        append(fc_block);
    } else {
        append(fc_block);
        append(conv_block);
    }
    append(neuron_block);
    return attempts;
}

Network apply_step(const Network& network, const SimplificationStep& step,
                   const Eigen::VectorXd& witness) {
    return std::visit(
        [&](const auto& s) -> Network {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, MergeFcLayersStep>) {
                return merge_fc_layers(network, s.layer, witness);
            } else if constexpr (std::is_same_v<T, LowerAndMergeConvStep>) {
                return merge_conv_layer(network, s.layer, witness);
            } else {
                return merge_neurons(network, s.layer, s.first, s.second, witness);
            }
        },
        step);
}

bool step_applicable(const Network& network, const SimplificationStep& step,
                     const Eigen::VectorXd& witness) {
    try {
        apply_step(network, step, witness);
        return true;
    } catch (const InvalidStepError&) {
        return false;
    }
}

std::string describe_step(const SimplificationStep& step) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, MergeFcLayersStep>) {
                return "merge-fc-layers t=" + std::to_string(s.layer);
            } else if constexpr (std::is_same_v<T, LowerAndMergeConvStep>) {
                return "lower-and-merge-conv t=" + std::to_string(s.layer);
            } else {
                return "merge-neurons t=" + std::to_string(s.layer) + " b=" +
                       std::to_string(s.first) + " c=" + std::to_string(s.second);
            }
        },
        step);
}

}  // namespace vqdd
