#include <cmath>

#include "sagechain/error.hpp"
#include "sagechain/geometric.hpp"
#include "sagechain/log.hpp"
#include "sagechain/ops.hpp"

namespace sagechain {

BatchNorm BatchNorm::create(std::size_t channels) {
    BatchNorm bn;
    bn.channels = channels;
    bn.gamma = Tensor::full({channels}, 1.0, true);
    bn.beta = Tensor::zeros({channels}, true);
    bn.running_mean.assign(channels, 0.0);
    bn.running_var.assign(channels, 1.0);
    return bn;
}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
    if (x.rank() != 2 || x.shape()[1] != channels) {
        throw DimensionError("batch norm over " + std::to_string(channels) + " channels got " + shape_to_string(x.shape()));
    }
    const std::size_t n = x.shape()[0];
    Tensor normalized;
    if (training && n >= 2) {
        std::vector<double> mu, var;
        normalized = ops::batch_standardize(x, eps, &mu, &var);
        const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
        for (std::size_t c = 0; c < channels; ++c) {
            running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mu[c];
            running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var[c] * unbias;
        }
    } else {
        if (training) log_warn("batch norm: single-row batch in training mode, using running statistics");
        std::vector<double> shift(channels), inv_std(channels);
        for (std::size_t c = 0; c < channels; ++c) {
            shift[c] = -running_mean[c];
            inv_std[c] = 1.0 / std::sqrt(running_var[c] + eps);
        }
        normalized = ops::mul_row_vector(ops::add_row_vector(x, Tensor::from({channels}, std::move(shift))),
                                         Tensor::from({channels}, std::move(inv_std)));
    }
    return ops::add_row_vector(ops::mul_row_vector(normalized, gamma), beta);
}

void BatchNorm::collect(ParameterList& out, const std::string& prefix, const std::string& group) const {
    out.push_back({prefix + ".gamma", group, gamma});
    out.push_back({prefix + ".beta", group, beta});
}

}  // namespace sagechain
