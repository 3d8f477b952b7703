#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "sagechain/geometric.hpp"

using namespace sagechain;
using sagechain::testing::check_gradients;
using sagechain::testing::probe_loss;
using sagechain::testing::random_tensor;

TEST(BatchNorm, TrainingOutputMatchesTwoPassOracle) {
    std::mt19937_64 rng(3);
    auto bn = BatchNorm::create(3);
    bn.gamma.mutable_data()[1] = 2.0;
    bn.beta.mutable_data()[2] = -1.0;
    auto x = random_tensor({8, 3}, rng, -5, 5);
    auto y = bn.forward(x, true);
    for (std::size_t c = 0; c < 3; ++c) {
        double m = 0, v = 0;
        for (std::size_t r = 0; r < 8; ++r) m += x.at(r, c);
        m /= 8;
        for (std::size_t r = 0; r < 8; ++r) v += (x.at(r, c) - m) * (x.at(r, c) - m);
        v /= 8;
        for (std::size_t r = 0; r < 8; ++r) {
            const double expected = bn.gamma[c] * (x.at(r, c) - m) / std::sqrt(v + bn.eps) + bn.beta[c];
            EXPECT_NEAR(y.at(r, c), expected, 1e-10);
        }
    }
}

TEST(BatchNorm, LargeBatchIsStandardized) {
    std::mt19937_64 rng(4);
    auto bn = BatchNorm::create(2);
    auto y = bn.forward(random_tensor({500, 2}, rng, 10, 30), true);
    for (std::size_t c = 0; c < 2; ++c) {
        double m = 0, v = 0;
        for (std::size_t r = 0; r < 500; ++r) m += y.at(r, c);
        m /= 500;
        for (std::size_t r = 0; r < 500; ++r) v += (y.at(r, c) - m) * (y.at(r, c) - m);
        v /= 500;
        EXPECT_NEAR(m, 0.0, 1e-12);
        EXPECT_NEAR(v, 1.0, 1e-3);
    }
}

TEST(BatchNorm, RunningStatisticsFollowMomentum) {
    auto bn = BatchNorm::create(1);
    auto x = Tensor::from({4, 1}, {1.0, 2.0, 3.0, 6.0});
    bn.forward(x, true);
    // Mean 3; the running variance uses the unbiased batch estimate (14/3).
    EXPECT_NEAR(bn.running_mean[0], 0.1 * 3.0, 1e-12);
    EXPECT_NEAR(bn.running_var[0], 0.9 * 1.0 + 0.1 * 14.0 / 3.0, 1e-12);
}

TEST(BatchNorm, EvalModeIsFrozenAffineMap) {
    std::mt19937_64 rng(5);
    auto bn = BatchNorm::create(2);
    bn.forward(random_tensor({10, 2}, rng), true);
    const auto mean = bn.running_mean, var = bn.running_var;
    auto x = random_tensor({3, 2}, rng);
    auto a = bn.forward(x, false), b = bn.forward(x, false);
    EXPECT_EQ(bn.running_mean, mean);
    EXPECT_EQ(bn.running_var, var);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 2; ++c) {
            EXPECT_EQ(a.at(r, c), b.at(r, c));
            EXPECT_NEAR(a.at(r, c), (x.at(r, c) - mean[c]) / std::sqrt(var[c] + bn.eps), 1e-12);
        }
}

TEST(BatchNorm, SingleRowTrainingFallsBackToRunningStatistics) {
    auto bn = BatchNorm::create(2);
    auto x = Tensor::from({1, 2}, {3.0, -4.0});
    auto y = bn.forward(x, true);
    EXPECT_NEAR(y[0], 3.0 / std::sqrt(1.0 + bn.eps), 1e-12);
    EXPECT_EQ(bn.running_mean, (std::vector<double>{0.0, 0.0}));
}

TEST(BatchNorm, GradientCheck) {
    for (int seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(40 + seed);
        auto bn = BatchNorm::create(3);
        for (double& g : bn.gamma.mutable_data()) g = uniform_real(rng, 0.5, 1.5);
        auto x = random_tensor({6, 3}, rng, -2, 2, true);
        auto r = random_tensor({6, 3}, rng);
        auto fn = [&] { return probe_loss(bn.forward(x, true), r); };
        const auto res = check_gradients(fn, {x, bn.gamma, bn.beta});
        EXPECT_LT(res.max_rel_error, 1e-4) << "seed " << seed << ": " << res.worst;
    }
}
