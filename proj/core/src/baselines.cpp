#include "sagechain/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "sagechain/error.hpp"
#include "sagechain/ops.hpp"

namespace sagechain {

namespace {

void check_rows(const LabeledRows& rows, const char* what) {
    if (rows.values.size() != rows.rows * rows.cols) throw DimensionError(std::string(what) + ": values do not match rows x cols");
}

}  // namespace

std::vector<int> knn_baseline(const LabeledRows& train, const LabeledRows& test, std::size_t k, int classes) {
    check_rows(train, "knn train");
    check_rows(test, "knn test");
    if (k == 0) throw ConfigError("knn needs k >= 1");
    if (k > train.rows) {
        throw ConfigError("knn k = " + std::to_string(k) + " exceeds the " + std::to_string(train.rows) + " training rows");
    }
    if (train.cols != test.cols) throw DimensionError("knn: train and test feature counts differ");
    std::vector<int> out;
    out.reserve(test.rows);
    std::vector<std::pair<double, std::size_t>> dist(train.rows);
    std::vector<std::size_t> votes(static_cast<std::size_t>(classes));
    for (std::size_t q = 0; q < test.rows; ++q) {
        const auto x = test.row(q);
        for (std::size_t r = 0; r < train.rows; ++r) {
            const auto y = train.row(r);
            double d = 0.0;
            for (std::size_t c = 0; c < x.size(); ++c) d += (x[c] - y[c]) * (x[c] - y[c]);
            dist[r] = {d, r};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::fill(votes.begin(), votes.end(), 0);
        for (std::size_t i = 0; i < k; ++i) ++votes.at(static_cast<std::size_t>(train.labels[dist[i].second]));
        out.push_back(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
    }
    return out;
}

Tensor logistic_loss(const Tensor& weight, const Tensor& bias, const LabeledRows& rows) {
    check_rows(rows, "logistic");
    const Tensor x = Tensor::from({rows.rows, rows.cols}, rows.values);
    return ops::cross_entropy(ops::linear(x, weight, bias), rows.labels);
}

std::vector<int> LogisticModel::predict(const LabeledRows& rows) const {
    NoGradGuard guard;
    const Tensor logits = ops::linear(Tensor::from({rows.rows, rows.cols}, rows.values), weight, bias);
    std::vector<int> out(rows.rows);
    const std::size_t c = logits.cols();
    for (std::size_t r = 0; r < rows.rows; ++r) {
        const auto row = logits.data().subspan(r * c, c);
        out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

LogisticModel fit_logistic(const LabeledRows& train, int classes, std::size_t epochs, double lr) {
    check_rows(train, "logistic train");
    LogisticModel m;
    m.weight = Tensor::zeros({static_cast<std::size_t>(classes), train.cols}, true);
    m.bias = Tensor::zeros({static_cast<std::size_t>(classes)}, true);
    for (std::size_t e = 0; e < epochs; ++e) {
        const Tensor loss = logistic_loss(m.weight, m.bias, train);
        backward(loss);
        for (Tensor* p : {&m.weight, &m.bias}) {
            auto v = p->mutable_data();
            const auto g = p->grad();
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
            p->zero_grad();
        }
    }
    return m;
}

std::vector<int> logistic_baseline(const LabeledRows& train, const LabeledRows& test, int classes, std::size_t epochs,
                                   double lr) {
    return fit_logistic(train, classes, epochs, lr).predict(test);
}

}  // namespace sagechain
