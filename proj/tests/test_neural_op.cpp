#include "projop/neural_op.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace projop;

namespace {

const PNorm kL2(2.0);

/// Reference operator-learning setup: 1-d Legendre degree 8 on 16 nodes, n = m = 8.
struct LearningSetup {
    QuadraturePtr quad = build_quadrature(1, 16);
    BasisPtr basis = std::make_shared<const OrthoPolyBasis>(tensor_legendre(1, 8, quad));
    TrainingSet train;
    TrainingSet held_out;

    explicit LearningSetup(const OperatorHandle& op, std::uint64_t data_seed = 3) {
        std::mt19937_64 rng(data_seed);
        for (int i = 0; i < 50; ++i) {
            auto f = test_support::random_band_limited(rng, quad);
            train.emplace_back(f, op(f));
        }
        for (int i = 0; i < 50; ++i) {
            auto f = test_support::random_band_limited(rng, quad);
            held_out.emplace_back(f, op(f));
        }
    }
};

TrainConfig reference_config() {
    TrainConfig cfg;
    cfg.learning_rate = 0.2;
    cfg.epochs = 2000;
    cfg.batch_size = 10;
    cfg.seed = 1;
    return cfg;
}

Mlp random_net(std::mt19937_64& rng, Activation act) {
    std::uniform_int_distribution<std::size_t> size(1, 5), depth(1, 3);
    std::vector<std::size_t> sizes{size(rng)};
    const std::size_t layers = depth(rng);
    for (std::size_t l = 0; l < layers; ++l) sizes.push_back(size(rng));
    auto net = Mlp::random(sizes, act, rng);
    std::normal_distribution<double> bias(0.0, 0.3);
    for (auto& l : net.layers())
        for (auto& b : l.bias) b = bias(rng);
    return net;
}

double half_squared_error(const Mlp& net, std::span<const double> v, std::span<const double> target) {
    const auto y = mlp_forward(net, v);
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) loss += 0.5 * (y[i] - target[i]) * (y[i] - target[i]);
    return loss;
}

} // namespace

TEST(MlpForward, ZeroNetworkGivesZero) {
    Mlp net({3, 5, 2}, Activation::tanh);
    const std::vector<double> v{1.0, -2.0, 0.5};
    for (double y : mlp_forward(net, v)) EXPECT_EQ(y, 0.0);
}

// Hand-computed: z = W1 v + b1 = (-1.4, -1.2); y = 2 tanh(-1.4) - tanh(-1.2) + 0.3.
TEST(MlpForward, HandComputedTwoLayer) {
    Mlp net({2, 2, 1}, Activation::tanh);
    auto& l0 = net.layers()[0];
    l0.weights = {1.0, 2.0, -1.0, 0.5};
    l0.bias = {0.1, -0.2};
    auto& l1 = net.layers()[1];
    l1.weights = {2.0, -1.0};
    l1.bias = {0.3};
    const std::vector<double> v{0.5, -1.0};
    EXPECT_NEAR(mlp_forward(net, v)[0], 2.0 * std::tanh(-1.4) - std::tanh(-1.2) + 0.3, 1e-15);

    // a pass-through construction on a probe vector: output equals the first input
    l0.weights = {1.0, 0.0, 0.0, 1.0};
    l0.bias = {0.0, 0.0};
    l1.weights = {0.5 / std::tanh(0.5), 0.0};
    l1.bias = {0.0};
    EXPECT_NEAR(mlp_forward(net, v)[0], 0.5, 1e-15);

    net = Mlp({2, 2, 1}, Activation::relu);
    net.layers()[0].weights = {1.0, 2.0, -1.0, 0.5};
    net.layers()[1].weights = {2.0, -1.0};
    // relu(0.5 - 2) = 0, relu(-0.5 - 0.5) = 0
    EXPECT_EQ(mlp_forward(net, v)[0], 0.0);
}

TEST(MlpForward, BatchMatchesSingleCalls) {
    std::mt19937_64 rng(5);
    auto net = Mlp::random({3, 7, 2}, Activation::tanh, rng);
    const std::vector<std::vector<double>> batch{{0.1, 0.2, 0.3}, {-1.0, 0.5, 2.0}};
    const auto out = mlp_forward_batch(net, batch);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], mlp_forward(net, batch[0]));
    EXPECT_EQ(out[1], mlp_forward(net, batch[1]));
}

TEST(MlpForward, SizeMismatchIsUsageError) {
    Mlp net({3, 4, 2}, Activation::tanh);
    const std::vector<double> v{1.0, 2.0};
    try {
        mlp_forward(net, v);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::usage);
    }
    EXPECT_THROW(Mlp({3}, Activation::tanh), Error);
    EXPECT_THROW(Mlp({3, 0, 2}, Activation::tanh), Error);
}

TEST(MlpGradient, PerfectFitHasZeroGradient) {
    std::mt19937_64 rng(7);
    auto net = Mlp::random({4, 6, 3}, Activation::tanh, rng);
    const std::vector<double> v{0.3, -0.1, 0.8, 0.0};
    const auto target = mlp_forward(net, v);
    for (double g : mlp_gradient(net, v, target).flatten()) EXPECT_EQ(g, 0.0);
}

TEST(MlpGradient, OutputBiasGradientIsResidual) {
    std::mt19937_64 rng(8);
    auto net = Mlp::random({2, 5, 2}, Activation::tanh, rng);
    const std::vector<double> v{0.4, -0.7};
    const auto y = mlp_forward(net, v);
    const std::vector<double> t1{y[0] - 0.25, y[1] + 0.5};
    const std::vector<double> t2{y[0] - 0.5, y[1] + 1.0};
    const auto g1 = mlp_gradient(net, v, t1).layers.back().bias;
    const auto g2 = mlp_gradient(net, v, t2).layers.back().bias;
    EXPECT_NEAR(g1[0], 0.25, 1e-15);
    EXPECT_NEAR(g1[1], -0.5, 1e-15);
    EXPECT_NEAR(g2[0], 2.0 * g1[0], 1e-15);
    EXPECT_NEAR(g2[1], 2.0 * g1[1], 1e-15);
}

// Central differences with h = 1e-5 as the oracle; entries whose magnitude is
// below 1e-7 are compared absolutely.
TEST(MlpGradient, MatchesFiniteDifferences) {
    std::mt19937_64 rng(2025);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Activation act = trial % 4 == 3 ? Activation::relu : Activation::tanh;
        auto net = random_net(rng, act);
        std::vector<double> v(net.input_size()), target(net.output_size());
        for (auto& x : v) x = normal(rng);
        for (auto& x : target) x = normal(rng);
        const auto analytic = mlp_gradient(net, v, target).flatten();
        auto params = net.parameters();
        ASSERT_EQ(analytic.size(), params.size());
        const double h = 1e-5;
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto probe = net;
            auto p = params;
            p[i] = params[i] + h;
            probe.set_parameters(p);
            const double up = half_squared_error(probe, v, target);
            p[i] = params[i] - h;
            probe.set_parameters(p);
            const double down = half_squared_error(probe, v, target);
            const double fd = (up - down) / (2.0 * h);
            const double scale = std::max(std::abs(fd), std::abs(analytic[i]));
            if (scale < 1e-7)
                EXPECT_NEAR(analytic[i], fd, 1e-9);
            else
                EXPECT_LT(std::abs(analytic[i] - fd) / scale, 1e-4) << "trial " << trial << " param " << i;
        }
    }
}

TEST(TrainConfig, RejectsNonPositiveValues) {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = TrainConfig{};
    cfg.epochs = 0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = TrainConfig{};
    cfg.loss_tolerance = -1.0;
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_EQ(default_hidden_width(8, 3), 48u);
}

TEST(TrainOperator, IdentityIsLearned) {
    LearningSetup setup(OperatorHandle::identity());
    auto trained = train_operator(setup.train, setup.basis, setup.basis, 8, 8, reference_config());
    EXPECT_LT(trained.report.final_loss, trained.report.initial_loss);
    EXPECT_LE(trained.report.epochs_run, 2000);
    EXPECT_LT(relative_l2_error(trained.op, setup.held_out), 0.05);

    // on f in the span (projections of held-out samples) the output approximates P_n f = f
    double num = 0.0, den = 0.0;
    for (const auto& pair : setup.held_out) {
        auto f = project(*setup.basis, 8, pair.first).function;
        const double e = distance(apply_operator(trained.op, f), f, kL2);
        num += e * e;
        den += lp_norm(f, kL2) * lp_norm(f, kL2);
    }
    EXPECT_LT(std::sqrt(num / den), 0.05);
}

TEST(TrainOperator, ZeroOperatorDrivesOutputsToZero) {
    LearningSetup setup(OperatorHandle::zero());
    auto trained = train_operator(setup.train, setup.basis, setup.basis, 8, 8, reference_config());
    EXPECT_LT(relative_l2_error(trained.op, setup.held_out), 1e-3);
}

// T f = (1/2) t <t, f>: in Legendre coordinates only c_1 is nonzero and it equals
// (1/2) <p_1, t> <t, f> = (1/2)(1/sqrt 3) c_1(f) / sqrt 3 = c_1(f) / 6.
TEST(TrainOperator, RankOneFredholmIsLearned) {
    const auto op = OperatorHandle::fredholm(Kernel::separable(Field::t, Field::t), 0.5);
    LearningSetup setup(op);
    for (const auto& [f, g] : setup.held_out) {
        const auto cf = project_coefficients(*setup.basis, 8, f);
        const auto cg = project_coefficients(*setup.basis, 8, g);
        for (std::size_t k = 0; k <= 8; ++k) EXPECT_NEAR(cg[k], k == 1 ? cf[1] / 6.0 : 0.0, 1e-14);
    }
    auto trained = train_operator(setup.train, setup.basis, setup.basis, 8, 8, reference_config());
    EXPECT_LT(trained.report.final_loss, trained.report.initial_loss);
    EXPECT_LT(relative_l2_error(trained.op, setup.held_out), 0.05);
}

TEST(TrainOperator, DeterministicGivenSeed) {
    LearningSetup setup(OperatorHandle::identity());
    auto cfg = reference_config();
    cfg.epochs = 50;
    auto a = train_operator(setup.train, setup.basis, setup.basis, 8, 8, cfg);
    auto b = train_operator(setup.train, setup.basis, setup.basis, 8, 8, cfg);
    EXPECT_EQ(a.op.network().parameters(), b.op.network().parameters());
    EXPECT_EQ(a.report.loss_history, b.report.loss_history);
    cfg.seed = 2;
    auto c = train_operator(setup.train, setup.basis, setup.basis, 8, 8, cfg);
    EXPECT_NE(a.op.network().parameters(), c.op.network().parameters());
}

TEST(TrainOperator, DivergenceReportsEpoch) {
    LearningSetup setup(OperatorHandle::identity());
    auto cfg = reference_config();
    cfg.learning_rate = 1e3;
    cfg.batch_size = 0;
    try {
        train_operator(setup.train, setup.basis, setup.basis, 8, 8, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::divergence);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(TrainOperator, RejectsBadInputs) {
    LearningSetup setup(OperatorHandle::identity());
    EXPECT_THROW(train_operator({}, setup.basis, setup.basis, 8, 8, reference_config()), Error);
    EXPECT_THROW(train_operator(setup.train, setup.basis, setup.basis, 9, 8, reference_config()), Error);
}

TEST(ApplyOperator, MatchesManualComposition) {
    std::mt19937_64 rng(13);
    auto quad = build_quadrature(2, 6);
    auto in = std::make_shared<const OrthoPolyBasis>(tensor_legendre(2, 3, quad));
    auto out = std::make_shared<const OrthoPolyBasis>(tensor_legendre(2, 2, quad));
    NeuralProjectionOperator op(in, 7, out, 4, Mlp::random({8, 12, 5}, Activation::tanh, rng));
    for (int trial = 0; trial < 10; ++trial) {
        auto f = test_support::random_band_limited(rng, quad);
        const auto c = project_coefficients(*in, 7, f);
        const auto y = mlp_forward(op.network(), c);
        auto manual = SampledFunction::constant(quad, 0.0);
        for (std::size_t k = 0; k < y.size(); ++k) manual = manual + y[k] * out->polynomial(k);
        auto result = apply_operator(op, f);
        for (std::size_t i = 0; i < quad->size(); ++i) EXPECT_NEAR(result[i], manual[i], 1e-12);

        // the output already lies in the output span
        auto again = reconstruct(*out, project_coefficients(*out, 4, result));
        EXPECT_LT(distance(again, result, kL2), 1e-10);
    }
}

TEST(ApplyOperator, ZeroNetworkGivesBiasReconstruction) {
    auto quad = build_quadrature(1, 8);
    auto basis = std::make_shared<const OrthoPolyBasis>(tensor_legendre(1, 4, quad));
    Mlp net({4, 6, 3}, Activation::tanh);
    NeuralProjectionOperator op(basis, 3, basis, 2, net);
    auto f = sample(quad, Field::exp);
    for (double v : test_support::values_of(apply_operator(op, f))) EXPECT_EQ(v, 0.0);
    net.layers().back().bias = {0.5, 0.0, -1.0};
    NeuralProjectionOperator biased(basis, 3, basis, 2, net);
    auto expected = 0.5 * basis->polynomial(0) - 1.0 * basis->polynomial(2);
    auto got = apply_operator(biased, f);
    for (std::size_t i = 0; i < quad->size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-14);
    EXPECT_THROW(NeuralProjectionOperator(basis, 2, basis, 2, net), Error);
}

TEST(ApplyOperator, WrapsAsOperatorHandle) {
    auto quad = build_quadrature(1, 8);
    auto basis = std::make_shared<const OrthoPolyBasis>(tensor_legendre(1, 4, quad));
    std::mt19937_64 rng(17);
    auto op = std::make_shared<const NeuralProjectionOperator>(basis, 4, basis, 4,
                                                                Mlp::random({5, 8, 5}, Activation::relu, rng));
    auto handle = as_operator(op);
    EXPECT_FALSE(handle.is_linear());
    auto f = sample(quad, Field::cos);
    auto a = handle(f);
    auto b = apply_operator(*op, f);
    for (std::size_t i = 0; i < quad->size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(WeightNet, BasisIsOrthogonalUnderLearnedWeight) {
    auto quad = build_quadrature(1, 12);
    auto w = WeightNet::random(1, 6, 0.3, 99);
    auto rho = w.sample_on(quad);
    for (double v : rho.values()) EXPECT_GT(v, 0.0);
    auto basis = weight_net_basis(w, 4, quad, kL2);
    const WeightFunctional L(rho, kL2);
    for (std::size_t j = 0; j < basis.size(); ++j)
        for (std::size_t k = 0; k < j; ++k)
            EXPECT_LT(std::abs(L.pair(basis.polynomial(j).values(), basis.polynomial(k).values())), 1e-10);
}

TEST(ModelArchive, RoundTripsBitwise) {
    LearningSetup setup(OperatorHandle::identity());
    auto cfg = reference_config();
    cfg.epochs = 20;
    auto trained = train_operator(setup.train, setup.basis, setup.basis, 8, 8, cfg);
    std::stringstream ss;
    write_model(ss, archive_of(trained.op, cfg));
    const std::string text = ss.str();
    auto back = read_model(ss);
    EXPECT_EQ(back.network.parameters(), trained.op.network().parameters());
    EXPECT_EQ(back.network.sizes(), trained.op.network().sizes());
    EXPECT_EQ(back.config.learning_rate, cfg.learning_rate);
    EXPECT_EQ(back.config.seed, cfg.seed);

    std::stringstream again;
    write_model(again, back);
    EXPECT_EQ(again.str(), text);

    auto restored = restore_operator(back);
    auto f = setup.held_out.front().first;
    auto a = apply_operator(restored, f);
    auto b = apply_operator(trained.op, f);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(ModelArchive, WeightNetBasesRoundTrip) {
    auto quad = build_quadrature(1, 10);
    auto w_in = WeightNet::random(1, 5, 0.3, 4);
    auto w_out = WeightNet::random(1, 5, 0.3, 5);
    auto in = std::make_shared<const OrthoPolyBasis>(weight_net_basis(w_in, 3, quad, kL2));
    auto out = std::make_shared<const OrthoPolyBasis>(weight_net_basis(w_out, 3, quad, kL2));
    std::mt19937_64 rng(6);
    NeuralProjectionOperator op(in, 3, out, 3, Mlp::random({4, 5, 4}, Activation::tanh, rng), w_in, w_out);
    std::stringstream ss;
    write_model(ss, archive_of(op, TrainConfig{}));
    auto restored = restore_operator(read_model(ss));
    ASSERT_TRUE(restored.input_weight().has_value());
    EXPECT_EQ(restored.input_weight()->seed, 4u);
    auto f = sample(quad, Field::exp);
    auto a = apply_operator(restored, f);
    auto b = apply_operator(op, f);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(ModelArchive, MalformedInputIsUsageError) {
    std::istringstream bad("# projop model v1\nn x\n");
    EXPECT_THROW(read_model(bad), Error);
    std::istringstream wrong("hello\n");
    EXPECT_THROW(read_model(wrong), Error);
}
