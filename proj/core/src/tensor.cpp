#include "sagechain/tensor.hpp"

#include <cassert>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "sagechain/error.hpp"

namespace sagechain {

namespace {
thread_local bool g_grad_enabled = true;
}

std::string shape_to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("tensor shape " + shape_to_string(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

std::size_t Tensor::rows() const {
    const auto& s = node_->shape;
    return s.size() >= 2 ? s[0] : 1;
}

std::size_t Tensor::cols() const {
    const auto& s = node_->shape;
    if (s.empty()) return 1;
    if (s.size() == 1) return s[0];
    return node_->value.size() / s[0];
}

double Tensor::item() const {
    if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
    return node_->value[0];
}

std::span<const double> Tensor::grad() const {
    node_->ensure_grad();
    return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() noexcept { return g_grad_enabled; }

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward_rule) {
#ifndef NDEBUG
    for (double v : value) assert(std::isfinite(v) && "non-finite value produced by forward op");
#endif
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    if (g_grad_enabled) {
        bool any = false;
        for (const auto& t : inputs) any = any || t.requires_grad();
        if (any) {
            node->requires_grad = true;
            node->inputs.reserve(inputs.size());
            for (auto& t : inputs) node->inputs.push_back(t.node_ptr());
            node->backward = std::move(backward_rule);
        }
    }
    return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw DimensionError("backward() needs a scalar loss, got shape " +
                             (loss.defined() ? shape_to_string(loss.shape()) : std::string("<undefined>")));
    }
    detail::Node* root = loss.node();
    if (!root->requires_grad) return;

    // Iterative post-order DFS gives a topological order without recursion depth
    // limits on long LSTM chains.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            detail::Node* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (detail::Node* n : order) {
        if (n->backward) n->grad.assign(n->value.size(), 0.0);
        else n->ensure_grad();
    }
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (!n->backward) continue;
        for (auto& in : n->inputs) {
            if (in->requires_grad) in->ensure_grad();
        }
        n->backward(*n);
    }
}

}  // namespace sagechain
