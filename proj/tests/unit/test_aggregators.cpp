#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sagechain/adam.hpp"
#include "sagechain/geometric.hpp"
#include "sagechain/lstm.hpp"

using namespace sagechain;

namespace {

std::vector<Vec> random_vectors(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
    std::vector<Vec> out(count, Vec(dim));
    for (auto& v : out)
        for (double& x : v) x = uniform_real(rng, -2.0, 2.0);
    return out;
}

Tensor identity(std::size_t d) {
    auto t = Tensor::zeros({d, d});
    for (std::size_t i = 0; i < d; ++i) t.mutable_data()[i * d + i] = 1.0;
    return t;
}

}  // namespace

TEST(Aggregators, MeanOfSelfOnlyAndTwoPoints) {
    const Vec self{3.0, -1.0};
    EXPECT_EQ(aggregate_mean(self, {}), self);
    EXPECT_EQ(aggregate_mean(Vec{0.0, 0.0}, {Vec{2.0, 4.0}}), (Vec{1.0, 2.0}));
}

TEST(Aggregators, MeanIsBitIdenticalUnderPermutation) {
    std::mt19937_64 rng(21);
    const auto self = random_vectors(1, 4, rng)[0];
    auto nbrs = random_vectors(7, 4, rng);
    const auto ref = aggregate_mean(self, nbrs);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(nbrs.begin(), nbrs.end(), rng);
        EXPECT_EQ(aggregate_mean(self, nbrs), ref);
    }
}

TEST(Aggregators, PoolIdentityTransformIsElementwiseMax) {
    const auto out = aggregate_pool(Vec{0.0, 0.0}, {Vec{1.0, 5.0}, Vec{4.0, 2.0}}, identity(2), Tensor::zeros({2}));
    EXPECT_EQ(out, (Vec{4.0, 5.0}));
}

TEST(Aggregators, PoolSingleNeighborAndEmptyNeighborhood) {
    std::mt19937_64 rng(2);
    auto w = glorot_uniform({3, 3}, 3, 3, rng);
    auto b = Tensor::from({3}, {0.1, -0.2, 0.3});
    const Vec h{0.5, -1.0, 2.0};
    Vec expected(3);
    for (std::size_t i = 0; i < 3; ++i) {
        double acc = b[i];
        for (std::size_t j = 0; j < 3; ++j) acc += w.at(i, j) * h[j];
        expected[i] = std::max(0.0, acc);
    }
    const auto one = aggregate_pool(Vec{9, 9, 9}, {h}, w, b);
    const auto none = aggregate_pool(h, {}, w, b);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(one[i], expected[i], 1e-12);
        EXPECT_NEAR(none[i], expected[i], 1e-12);
    }
}

TEST(Aggregators, PoolIsPermutationInvariant) {
    std::mt19937_64 rng(5);
    auto w = glorot_uniform({4, 4}, 4, 4, rng);
    auto b = Tensor::zeros({4});
    auto nbrs = random_vectors(5, 4, rng);
    const auto ref = aggregate_pool(Vec(4, 0.0), nbrs, w, b);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(nbrs.begin(), nbrs.end(), rng);
        EXPECT_EQ(aggregate_pool(Vec(4, 0.0), nbrs, w, b), ref);
    }
}

TEST(Aggregators, LstmZeroWeightsGiveHandCellValue) {
    // All gates see 0: i = f = o = 1/2, g = 0, so c stays 0 and h = 0.
    const auto p = LstmParams::zeros(3, 2);
    const auto out = aggregate_lstm(Vec{1, 2, 3}, {Vec{4, 5, 6}, Vec{-1, 0, 1}}, p, 7);
    EXPECT_EQ(out, (Vec{0.0, 0.0}));
    // With a forget/input-free bias on g only: c_1 = 0.5 * tanh(1), h_1 = 0.5 * tanh(c_1).
    auto q = LstmParams::zeros(1, 1);
    q.bias.mutable_data()[2] = 1.0;
    const auto step = aggregate_lstm(Vec{0.0}, {Vec{0.0}}, q, 1);
    const double c1 = 0.5 * std::tanh(1.0);
    EXPECT_NEAR(step[0], 0.5 * std::tanh(c1), 1e-15);
}

TEST(Aggregators, LstmSingleNeighborIsOneStepAndSeeded) {
    std::mt19937_64 rng(13);
    const auto p = LstmParams::create(3, 3, rng);
    const Vec nb{0.3, -0.7, 1.1};
    const auto seq = p.run(Tensor::from({1, 3}, nb));
    const auto out = aggregate_lstm(Vec{0, 0, 0}, {nb}, p, 99);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], seq[i], 1e-15);
    auto many = random_vectors(6, 3, rng);
    EXPECT_EQ(aggregate_lstm(nb, many, p, 4), aggregate_lstm(nb, many, p, 4));
    auto order = lstm_visit_order(6, 4);
    std::sort(order.begin(), order.end());
    EXPECT_EQ(order, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
}

TEST(Aggregators, LstmCellMatchesFusedSequence) {
    std::mt19937_64 rng(8);
    const auto p = LstmParams::create(2, 3, rng);
    auto x = Tensor::from({4, 2}, {0.1, 0.2, -0.5, 0.9, 1.2, -0.3, 0.0, 0.4});
    const auto fused = p.run(x);
    LstmState s{Tensor::zeros({1, 3}), Tensor::zeros({1, 3})};
    for (std::size_t t = 0; t < 4; ++t) {
        s = lstm_cell_forward(Tensor::from({1, 2}, {x.at(t, 0), x.at(t, 1)}), s, p);
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(s.h[j], fused.at(t, j), 1e-12);
    }
}
