#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/approx.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "vqdd/errors.hpp"

using namespace vqdd;
using namespace vqdd::test;

namespace {

Eigen::VectorXd point1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

TEST_CASE("running example evaluates to the annotated values") {
    const Network ne = make_ne();
    CHECK(ne.evaluate(point1(5.0))(0) == near(5.0).epsilon(1e-12));

    const EvaluationTrace trace = ne.evaluate_trace(point1(5.0));
    REQUIRE(trace.pre_activations.size() == 3);
    CHECK(trace.pre_activations[0](0) == -15.0);
    CHECK(trace.pre_activations[0](1) == -5.0);
    CHECK(trace.pre_activations[0](2) == 2.0);
    CHECK(trace.post_activations[0](0) == 0.0);
    CHECK(trace.post_activations[0](1) == 0.0);
    CHECK(trace.post_activations[0](2) == 2.0);
    CHECK(trace.pre_activations[1](0) == 4.0);
    CHECK(trace.pre_activations[1](1) == 2.0);
    CHECK(trace.pre_activations[1](2) == -2.0);
    CHECK(trace.post_activations[1](0) == 4.0);
    CHECK(trace.post_activations[1](1) == 2.0);
    CHECK(trace.post_activations[1](2) == 0.0);
    CHECK(trace.pre_activations[2](0) == 5.0);
}

TEST_CASE("all-zero weights degenerate to the bias") {
    FullyConnectedLayer fc;
    fc.weights = Eigen::MatrixXd::Zero(3, 2);
    fc.biases = Eigen::VectorXd(3);
    fc.biases << 1.5, -2.0, 0.25;
    const Network net(2, {fc});
    for (double x : {-3.0, 0.0, 7.0}) {
        Eigen::VectorXd in(2);
        in << x, -x;
        CHECK(net.evaluate(in) == fc.biases);
    }
}

TEST_CASE("evaluation matches the per-neuron loop oracle on random networks") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const Network net = random_fc_network(rng, 4, {5, 6, 3});
        for (int p = 0; p < 5; ++p) {
            const Eigen::VectorXd input = random_vector(rng, 4, 2.0);
            const std::vector<double> expected = oracle_evaluate(net, to_std(input));
            const Eigen::VectorXd actual = net.evaluate(input);
            REQUIRE(actual.size() == static_cast<int>(expected.size()));
            for (int i = 0; i < actual.size(); ++i)
                CHECK(actual(i) == near(expected[i]).epsilon(0).scale(1).margin(1e-9));
        }
    }
}

TEST_CASE("single-layer identity network traces to its input") {
    FullyConnectedLayer fc;
    fc.weights = Eigen::MatrixXd::Identity(2, 2);
    fc.biases = Eigen::VectorXd::Zero(2);
    const Network net(2, {fc});
    Eigen::VectorXd in(2);
    in << 3.25, -1.5;
    const EvaluationTrace trace = net.evaluate_trace(in);
    REQUIRE(trace.pre_activations.size() == 1);
    CHECK(trace.pre_activations[0] == in);
    CHECK(trace.post_activations[0] == in);
}

TEST_CASE("trace tail equals evaluate bitwise") {
    std::mt19937_64 rng(11);
    const Network net = random_fc_network(rng, 3, {4, 4, 2});
    const Eigen::VectorXd input = random_vector(rng, 3, 1.0);
    const Eigen::VectorXd a = net.evaluate(input);
    const Eigen::VectorXd b = net.evaluate_trace(input).pre_activations.back();
    CHECK(a == b);

    // Determinism: two evaluations are bitwise identical.
    CHECK(net.evaluate(input) == a);
}

TEST_CASE("network size counts input, hidden and output neurons") {
    CHECK(make_ne().size() == 8);

    FullyConnectedLayer out;
    out.weights = Eigen::MatrixXd::Ones(1, 1);
    out.biases = Eigen::VectorXd::Zero(1);
    CHECK(Network(1, {out}).size() == 2);

    // The 1306-neuron shape: 784 inputs, two hidden layers, 10 outputs.
    std::mt19937_64 rng(3);
    const Network big = random_fc_network(rng, 784, {256, 256, 10}, 0.1);
    CHECK(big.size() == 784 + 256 + 256 + 10);
    CHECK(big.size() == 1306);
}

TEST_CASE("convolution output dimensions") {
    std::mt19937_64 rng(5);
    SUBCASE("28x28 with 3x3 kernel") {
        const auto layer = random_conv_layer(rng, 28, 28, 3, 1, 0, 1, 1);
        CHECK(conv_output_dims(layer) == std::pair<int, int>{26, 26});
    }
    SUBCASE("kernel covering the input exactly") {
        const auto layer = random_conv_layer(rng, 5, 5, 5, 1, 0, 1, 1);
        CHECK(conv_output_dims(layer) == std::pair<int, int>{1, 1});
    }
    SUBCASE("rectangular input with stride and padding") {
        const auto layer = random_conv_layer(rng, 6, 8, 3, 2, 1, 1, 1);
        CHECK(conv_output_dims(layer) == std::pair<int, int>{3, 4});
    }
    SUBCASE("violated preconditions raise") {
        auto layer = random_conv_layer(rng, 2, 2, 3, 1, 0, 1, 1);
        CHECK_THROWS_AS(conv_output_dims(layer), InvalidModelError);
    }
    SUBCASE("results are always positive on valid layers") {
        for (int i = 0; i < 50; ++i) {
            const auto layer = random_small_conv(rng);
            const auto [ho, wo] = conv_output_dims(layer);
            CHECK(ho >= 1);
            CHECK(wo >= 1);
        }
    }
}

TEST_CASE("input containment") {
    const Property pe = make_pe();
    CHECK(pe.contains_input(point1(5.0)));
    CHECK(pe.contains_input(point1(10.0)));
    CHECK_FALSE(pe.contains_input(point1(10.0 + 1e-9)));
    CHECK(pe.contains_input(point1(10.5), 0.5));  // tolerance widens outward

    SUBCASE("random boxes agree with the coordinate-wise oracle") {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 50; ++trial) {
            const Property prop = random_property(rng, 3, 2);
            const Eigen::VectorXd point = random_vector(rng, 3, 3.0);
            bool expected = true;
            for (int i = 0; i < 3; ++i) {
                if (point(i) < prop.input_box()[i].lower ||
                    point(i) > prop.input_box()[i].upper)
                    expected = false;
            }
            CHECK(prop.contains_input(point) == expected);
        }
    }

    SUBCASE("arity mismatch raises") {
        CHECK_THROWS_AS(pe.contains_input(Eigen::VectorXd::Zero(2)), InvalidInputError);
    }
}

TEST_CASE("output region membership") {
    const Property pe = make_pe();
    CHECK(pe.satisfies_output(point1(5.0), 0.0));
    CHECK_FALSE(pe.satisfies_output(point1(4.0), 0.0));
    CHECK(pe.satisfies_output(point1(4.5), 0.5));  // slack

    SUBCASE("empty disjunction rejects every output") {
        const Property empty({{0.0, 1.0}}, 1, {});
        for (double y : {-1.0, 0.0, 5.0}) CHECK_FALSE(empty.satisfies_output(point1(y), 0.0));
    }

    SUBCASE("random regions agree with the inequality-loop oracle") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 50; ++trial) {
            const Property prop = random_property(rng, 2, 3);
            const Eigen::VectorXd output = random_vector(rng, 3, 3.0);
            const double slack = oracle_region_slack(prop, to_std(output));
            CHECK(prop.satisfies_output(output, 0.0) == (slack >= 0.0));
        }
    }

    SUBCASE("arity mismatch raises") {
        CHECK_THROWS_AS(pe.satisfies_output(Eigen::VectorXd::Zero(3), 0.0), InvalidInputError);
    }
}

TEST_CASE("structural invariants are enforced") {
    FullyConnectedLayer fc;
    fc.weights = Eigen::MatrixXd::Ones(2, 3);
    fc.biases = Eigen::VectorXd::Zero(2);

    SUBCASE("input dimension mismatch") {
        CHECK_THROWS_AS(Network(4, {fc}), InvalidModelError);
    }
    SUBCASE("output layer must not have an activation") {
        FullyConnectedLayer relu_out = fc;
        relu_out.activation = ActivationKind::ReLU;
        CHECK_THROWS_AS(Network(3, {relu_out}), InvalidModelError);
    }
    SUBCASE("bias length must match") {
        FullyConnectedLayer bad = fc;
        bad.biases = Eigen::VectorXd::Zero(3);
        CHECK_THROWS_AS(Network(3, {bad}), InvalidModelError);
    }
    SUBCASE("at least one layer") {
        CHECK_THROWS_AS(Network(3, {}), InvalidModelError);
    }
    SUBCASE("evaluate rejects wrong arity") {
        const Network net(3, {fc});
        CHECK_THROWS_AS(net.evaluate(Eigen::VectorXd::Zero(2)), InvalidInputError);
    }
    SUBCASE("query arity consistency") {
        CHECK_THROWS_AS(VerificationQuery(Network(3, {fc}), make_pe()), InvalidModelError);
    }
    SUBCASE("interval bounds must be ordered") {
        CHECK_THROWS_AS(Property({{2.0, 1.0}}, 1, {}), InvalidModelError);
    }
}

TEST_CASE("conv layer apply agrees with the sliding-window oracle") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        ConvolutionalLayer conv = random_small_conv(rng);
        conv.activation = ActivationKind::None;
        const Eigen::VectorXd input = random_vector(rng, conv.fan_in(), 1.5);
        const std::vector<double> expected = oracle_conv_apply(conv, to_std(input));
        const Eigen::VectorXd actual = conv.apply(input);
        REQUIRE(actual.size() == static_cast<int>(expected.size()));
        for (int i = 0; i < actual.size(); ++i)
            CHECK(actual(i) == near(expected[i]).epsilon(0).margin(1e-9));
    }
}
