#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "sagechain/geometric.hpp"
#include "sagechain/ops.hpp"

using namespace sagechain;
using sagechain::testing::check_gradients;
using sagechain::testing::probe_loss;
using sagechain::testing::random_tensor;

namespace {

GraphContext four_nodes() { return GraphContext::from_neighbors({{1, 2}, {0}, {0, 3}, {2}}); }

GatLayer make_layer(std::size_t in, std::size_t out, std::size_t heads, HeadMode mode, NodeNormalization norm,
                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return GatLayer::create(in, out, heads, mode, norm, rng);
}

}  // namespace

TEST(Gat, CoefficientsMatchNaiveDoubleLoop) {
    std::mt19937_64 rng(12);
    auto layer = make_layer(3, 2, 1, HeadMode::Concat, NodeNormalization::None, 12);
    auto ctx = four_nodes();
    auto h = random_tensor({4, 3}, rng);
    auto sa = layer.attention(ctx, h, 0);
    // Wf per node.
    std::vector<std::vector<double>> wf(4, std::vector<double>(2, 0.0));
    for (std::size_t v = 0; v < 4; ++v)
        for (std::size_t o = 0; o < 2; ++o)
            for (std::size_t i = 0; i < 3; ++i) wf[v][o] += layer.weight[0].at(o, i) * h.at(v, i);
    for (std::size_t m = 0; m < 4; ++m) {
        std::vector<std::size_t> support{m};
        support.insert(support.end(), ctx.neighbors[m].begin(), ctx.neighbors[m].end());
        std::vector<double> e;
        double z = 0.0;
        for (auto n : support) {
            double s = 0.0;
            for (std::size_t o = 0; o < 2; ++o) s += layer.attn_src[0][o] * wf[m][o] + layer.attn_dst[0][o] * wf[n][o];
            s = s > 0 ? s : 0.2 * s;
            e.push_back(std::exp(s));
            z += e.back();
        }
        double row = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k) {
            EXPECT_NEAR(sa.at(m, support[k]), e[k] / z, 1e-10);
            row += sa.at(m, support[k]);
        }
        EXPECT_NEAR(row, 1.0, 1e-9);
        for (std::size_t n = 0; n < 4; ++n)
            if (std::find(support.begin(), support.end(), n) == support.end()) EXPECT_DOUBLE_EQ(sa.at(m, n), 0.0);
    }
}

TEST(Gat, EqualFeaturesGiveUniformCoefficients) {
    auto layer = make_layer(2, 3, 1, HeadMode::Concat, NodeNormalization::None, 4);
    auto ctx = four_nodes();
    auto sa = layer.attention(ctx, Tensor::full({4, 2}, 0.7), 0);
    for (std::size_t m = 0; m < 4; ++m) {
        const double expected = 1.0 / static_cast<double>(ctx.neighbors[m].size() + 1);
        EXPECT_NEAR(sa.at(m, m), expected, 1e-12);
        for (auto n : ctx.neighbors[m]) EXPECT_NEAR(sa.at(m, n), expected, 1e-12);
    }
}

TEST(Gat, IsolatedNodeAttendsToItself) {
    auto layer = make_layer(2, 2, 1, HeadMode::Concat, NodeNormalization::None, 5);
    auto ctx = GraphContext::from_neighbors({{}, {}});
    std::mt19937_64 rng(5);
    auto sa = layer.attention(ctx, random_tensor({2, 2}, rng), 0);
    EXPECT_DOUBLE_EQ(sa.at(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(sa.at(1, 1), 1.0);
}

TEST(Gat, SingleHeadConcatAndAverageCoincide) {
    std::mt19937_64 rng(6);
    auto a = make_layer(3, 2, 1, HeadMode::Concat, NodeNormalization::None, 6);
    auto b = make_layer(3, 2, 1, HeadMode::Average, NodeNormalization::None, 6);
    auto ctx = four_nodes();
    auto h = random_tensor({4, 3}, rng);
    auto x = a.attend(ctx, h), y = b.attend(ctx, h);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
}

TEST(Gat, UniformAttentionWithIdentityWeightIsNeighborhoodMean) {
    auto layer = make_layer(2, 2, 1, HeadMode::Concat, NodeNormalization::None, 7);
    auto w = layer.weight[0].mutable_data();
    w[0] = 1;
    w[1] = 0;
    w[2] = 0;
    w[3] = 1;
    for (double& v : layer.attn_src[0].mutable_data()) v = 0.0;
    for (double& v : layer.attn_dst[0].mutable_data()) v = 0.0;
    auto ctx = four_nodes();
    std::mt19937_64 rng(7);
    auto h = random_tensor({4, 2}, rng);
    auto out = layer.attend(ctx, h);
    auto mean = ops::relu(ops::matmul(ctx.mean_matrix, h));
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], mean[i], 1e-12);
}

TEST(Gat, MultiHeadOutputWidths) {
    auto concat = make_layer(3, 2, 3, HeadMode::Concat, NodeNormalization::None, 8);
    auto average = make_layer(3, 2, 3, HeadMode::Average, NodeNormalization::None, 8);
    auto ctx = four_nodes();
    EXPECT_EQ(concat.forward(ctx, Tensor::full({4, 3}, 0.1), false).cols(), 6u);
    EXPECT_EQ(average.forward(ctx, Tensor::full({4, 3}, 0.1), false).cols(), 2u);
}

TEST(Gat, GradientsThroughAttention) {
    for (auto mode : {HeadMode::Concat, HeadMode::Average})
        for (auto norm : {NodeNormalization::BatchNorm, NodeNormalization::None})
            for (int seed = 0; seed < 10; ++seed) {
                auto layer = make_layer(3, 2, 2, mode, norm, 700 + seed);
                std::mt19937_64 rng(900 + seed);
                auto ctx = four_nodes();
                auto h = random_tensor({4, 3}, rng, -1, 1, true);
                auto r = random_tensor({4, layer.output_dim()}, rng);
                ParameterList params;
                layer.collect(params, "gat", "g");
                std::vector<Tensor> tensors{h};
                for (auto& p : params) tensors.push_back(p.value);
                sagechain::testing::jitter(tensors, rng);
                auto fn = [&] { return probe_loss(layer.forward(ctx, h, true), r); };
                const auto res = check_gradients(fn, tensors);
                EXPECT_LT(res.max_rel_error, 1e-4) << "seed " << seed << ": " << res.worst;
            }
}
