#include <benchmark/benchmark.h>

#include <random>

#include "vqdd/network.hpp"
#include "vqdd/onnx.hpp"
#include "vqdd/reference_verifiers.hpp"
#include "vqdd/simplify.hpp"

namespace {

using namespace vqdd;

Eigen::MatrixXd rand_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
    return m;
}

Network make_fc(int input_dim, std::vector<int> widths, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers;
    int fan_in = input_dim;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        FullyConnectedLayer fc;
        fc.weights = rand_matrix(rng, widths[i], fan_in);
        fc.biases = Eigen::VectorXd::Zero(widths[i]);
        fc.activation = i + 1 < widths.size() ? ActivationKind::ReLU : ActivationKind::None;
        fan_in = widths[i];
        layers.emplace_back(std::move(fc));
    }
    return Network(input_dim, std::move(layers));
}

ConvolutionalLayer make_conv(int hw, int channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ConvolutionalLayer conv;
    conv.height = conv.width = hw;
    conv.kernel_size = 3;
    conv.stride = 1;
    conv.padding = 1;
    conv.in_channels = conv.out_channels = channels;
    conv.kernel.resize(static_cast<std::size_t>(channels) * channels * 9);
    for (double& w : conv.kernel) w = dist(rng);
    conv.biases = Eigen::VectorXd::Zero(channels);
    conv.activation = ActivationKind::ReLU;
    return conv;
}

void BM_Evaluate(benchmark::State& state) {
    const int width = static_cast<int>(state.range(0));
    const Network net = make_fc(5, {width, width, width, 5}, 1);
    const Eigen::VectorXd input = Eigen::VectorXd::Constant(5, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(net.evaluate(input));
}
BENCHMARK(BM_Evaluate)->Arg(50)->Arg(200);

void BM_ConvToFc(benchmark::State& state) {
    const ConvolutionalLayer conv = make_conv(static_cast<int>(state.range(0)), 3, 2);
    for (auto _ : state) benchmark::DoNotOptimize(conv_to_fc(conv));
}
BENCHMARK(BM_ConvToFc)->Arg(8)->Arg(16)->Arg(28);

void BM_MergeFcLayers(benchmark::State& state) {
    const int width = static_cast<int>(state.range(0));
    const Network net = make_fc(5, {width, width, 5}, 3);
    const Eigen::VectorXd witness = Eigen::VectorXd::Constant(5, 0.25);
    for (auto _ : state) benchmark::DoNotOptimize(merge_fc_layers(net, 1, witness));
}
BENCHMARK(BM_MergeFcLayers)->Arg(50)->Arg(200);

void BM_StrategyAttempts(benchmark::State& state) {
    const Network net = make_fc(5, {50, 50, 50, 50, 50, 50, 5}, 4);
    const Eigen::VectorXd witness = Eigen::VectorXd::Constant(5, 0.25);
    for (auto _ : state) benchmark::DoNotOptimize(strategy_attempts(net, witness));
}
BENCHMARK(BM_StrategyAttempts);

void BM_BnbVerify(benchmark::State& state) {
    const Network net = make_fc(2, {8, 8, 2}, 5);
    LinearInequality far{Eigen::VectorXd::Ones(2), Relation::GreaterEq, 1e4};
    const VerificationQuery query(net, Property({{0.0, 1.0}, {0.0, 1.0}}, 2, {{far}}));
    for (auto _ : state) benchmark::DoNotOptimize(bnb_verify(query));
}
BENCHMARK(BM_BnbVerify);

void BM_OnnxRoundTrip(benchmark::State& state) {
    const Network net = make_fc(5, {50, 50, 5}, 6);
    for (auto _ : state) benchmark::DoNotOptimize(import_onnx(export_onnx(net)));
}
BENCHMARK(BM_OnnxRoundTrip);

}  // namespace

BENCHMARK_MAIN();
