#include "sagechain/error.hpp"
#include "sagechain/geometric.hpp"
#include "sagechain/ops.hpp"

namespace sagechain {

Tensor unsupervised_graph_loss(const Tensor& z_u, const Tensor& z_v, const Tensor& negatives, std::size_t q) {
    if (q == 0) throw std::invalid_argument("unsupervised_graph_loss: Q must be at least 1");
    if (z_u.size() != z_v.size() || negatives.rank() != 2 || negatives.shape()[1] != z_u.size()) {
        throw DimensionError("unsupervised_graph_loss: embeddings " + shape_to_string(z_u.shape()) + " / " +
                             shape_to_string(z_v.shape()) + " / " + shape_to_string(negatives.shape()));
    }
    if (negatives.shape()[0] < q) throw std::invalid_argument("unsupervised_graph_loss: fewer negatives than Q");
    const std::size_t d = z_u.size();
    const Tensor u = ops::reshape(z_u, {1, d});
    const Tensor v = ops::reshape(z_v, {1, d});
    const Tensor neg = negatives.shape()[0] == q ? negatives : ops::slice_rows(negatives, 0, q);

    const Tensor positive = ops::log_sigmoid(ops::sum(ops::mul(u, v)));
    const Tensor negative = ops::mean(ops::log_sigmoid(ops::scale(ops::matmul(neg, ops::transpose(u)), -1.0)));
    return ops::scale(ops::add(positive, ops::scale(negative, static_cast<double>(q))), -1.0);
}

Tensor unsupervised_graph_loss(const Tensor& embeddings, const std::vector<NegSampleBatch>& batches) {
    if (batches.empty()) throw std::invalid_argument("unsupervised_graph_loss: no sample batches");
    Tensor total;
    for (const auto& b : batches) {
        if (b.negatives.empty()) throw std::invalid_argument("unsupervised_graph_loss: Q must be at least 1");
        for (std::size_t n : b.negatives)
            if (n == b.positive) throw std::invalid_argument("unsupervised_graph_loss: negative equals positive");
        const std::size_t idx_u[] = {b.anchor};
        const std::size_t idx_v[] = {b.positive};
        const Tensor loss = unsupervised_graph_loss(ops::gather_rows(embeddings, idx_u), ops::gather_rows(embeddings, idx_v),
                                                    ops::gather_rows(embeddings, b.negatives), b.negatives.size());
        total = total.defined() ? ops::add(total, loss) : loss;
    }
    return ops::scale(total, 1.0 / static_cast<double>(batches.size()));
}

}  // namespace sagechain
