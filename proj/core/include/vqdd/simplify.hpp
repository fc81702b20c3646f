#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vqdd/network.hpp"

namespace vqdd {

// Layer indices follow the l^1..l^n numbering: layer t is network.layers()[t-1],
// hidden layers are 1..n-1 and the output layer is n.

/// Diagonal 0/1 matrix fixing each ReLU of a layer to the linear segment it
/// occupies at a given input: entry i is 1 iff the pre-activation is >= 0.
struct PhaseMask {
    Eigen::VectorXd diagonal;

    Eigen::MatrixXd matrix() const {
        return Eigen::MatrixXd(diagonal.asDiagonal());
    }
};

struct MergeFcLayersStep {
    int layer = 0;
};

struct LowerAndMergeConvStep {
    int layer = 0;
};

struct MergeNeuronsStep {
    int layer = 0;
    int first = 0;   // b
    int second = 0;  // c, with first < second
};

using SimplificationStep =
    std::variant<MergeFcLayersStep, LowerAndMergeConvStep, MergeNeuronsStep>;

/// Neuron-pair prioritization schemes for merge_neurons candidates.
enum class PairPriority : int {
    Arbitrary = 1,                    // index-lexicographic
    ClosestValues = 2,                // ascending |v_b - v_c|
    InactiveFirst = 3,                // inactive-inactive pairs first
    ActiveFirst = 4,                  // active-active pairs first
    InactiveThenMixedThenActive = 5,  // inactive, mixed, active; each by gap
};

struct StrategyConfig {
    bool conv_merges = true;
    bool fc_merges = true;
    bool neuron_merges = true;
    /// Attempt the convolution block before the fully-connected block.
    bool conv_before_fc = true;
    enum class LayerOrder { Descending, Ascending };
    /// Order of fully-connected merge attempts over hidden layer indices.
    LayerOrder fc_layer_order = LayerOrder::Descending;
    PairPriority pair_priority = PairPriority::InactiveThenMixedThenActive;
};

PhaseMask phase_mask(const Network& network, int layer, const Eigen::VectorXd& witness);

/// Method 1: fix layer `layer`'s ReLUs to the segment chosen by the witness
/// and fold layers `layer` and `layer`+1 into one fully connected layer.
Network merge_fc_layers(const Network& network, int layer, const Eigen::VectorXd& witness);

/// Rewrite a convolutional layer as the fully connected layer computing the
/// same function. Exact: fc.apply(x) == conv.apply(x) for every x.
FullyConnectedLayer conv_to_fc(const ConvolutionalLayer& layer);

/// Method 2: lower the convolutional layer `layer` (and `layer`+1, if it is
/// also convolutional), linearize its ReLUs, and fold both layers into one
/// fully connected layer.
Network merge_conv_layer(const Network& network, int layer, const Eigen::VectorXd& witness);

/// Method 3: merge neurons `first` and `second` of hidden layer `layer` into
/// one neuron. Same-phase pairs are averaged, mixed-phase pairs drop the
/// inactive neuron.
Network merge_neurons(const Network& network, int layer, int first, int second,
                      const Eigen::VectorXd& witness);

/// All C(n,2) neuron pairs of a hidden ReLU layer, ordered by `priority`.
std::vector<std::pair<int, int>> candidate_pairs(const Network& network, int layer,
                                                 const Eigen::VectorXd& witness,
                                                 PairPriority priority);

/// The full ordered list of simplification attempts for one round:
/// convolution merges front to back, fully-connected merges over hidden
/// layers, then neuron merges across all layers ordered by phase category
/// and value gap.
std::vector<SimplificationStep> strategy_attempts(const Network& network,
                                                  const Eigen::VectorXd& witness,
                                                  const StrategyConfig& config = {});

Network apply_step(const Network& network, const SimplificationStep& step,
                   const Eigen::VectorXd& witness);

/// True when apply_step would succeed; never modifies anything.
bool step_applicable(const Network& network, const SimplificationStep& step,
                     const Eigen::VectorXd& witness);

std::string describe_step(const SimplificationStep& step);

}  // namespace vqdd
