#include "sagechain/adam.hpp"

#include <cmath>

namespace sagechain {

std::size_t Adam::add_group(std::string name, std::vector<Tensor> params, AdamHyper hyper) {
    Group g;
    g.name = std::move(name);
    g.hyper = hyper;
    for (const auto& p : params) {
        g.m.emplace_back(p.size(), 0.0);
        g.v.emplace_back(p.size(), 0.0);
    }
    g.params = std::move(params);
    groups_.push_back(std::move(g));
    return groups_.size() - 1;
}

void Adam::step() {
    ++t_;
    for (auto& g : groups_) {
        const auto& h = g.hyper;
        const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < g.params.size(); ++k) {
            Tensor& p = g.params[k];
            auto w = p.mutable_data();
            auto grad = p.grad();
            auto& m = g.m[k];
            auto& v = g.v[k];
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double gi = grad[i] + h.weight_decay * w[i];
                m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * gi;
                v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * gi * gi;
                const double m_hat = m[i] / c1;
                const double v_hat = v[i] / c2;
                w[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
            }
        }
    }
}

void Adam::zero_grad() {
    for (auto& g : groups_)
        for (auto& p : g.params) p.zero_grad();
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
    double sq = 0.0;
    for (auto& p : params)
        for (double g : p.grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& p : params)
            for (double& g : p.mutable_grad()) g *= s;
    }
    return norm;
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    // 53 random mantissa bits.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = uniform_real(rng, -a, a);
    return Tensor::from(std::move(shape), std::move(values), true);
}

}  // namespace sagechain
