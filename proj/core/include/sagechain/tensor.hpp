#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sagechain {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

// One recorded value on the compute tape. Inputs keep their producers alive, so
// the tape is the DAG reachable from whatever tensor the caller still holds.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    // Reads this node's grad and accumulates into inputs' grads.
    std::function<void(Node&)> backward;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

}  // namespace detail

// Dense fp64 tensor handle with shared ownership of its tape node.
// Copying a Tensor aliases the same storage.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->value.size(); }
    // Matrix view helpers; a rank-1 tensor is treated as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const { return node_->value; }
    std::span<double> mutable_data() { return node_->value; }
    double operator[](std::size_t i) const { return node_->value[i]; }
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return node_->grad.size() == node_->value.size(); }
    // Zero-filled view when no gradient has been accumulated yet.
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    // Fresh leaf holding a copy of the values, detached from the tape.
    Tensor detach() const;

    detail::Node* node() const noexcept { return node_.get(); }
    const std::shared_ptr<detail::Node>& node_ptr() const noexcept { return node_; }

    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

// Disables tape recording on the current thread for the guard's lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled() noexcept;

// Creates an op result. The backward rule is only attached when recording is
// enabled and some input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward);

// Reverse-mode sweep from a scalar loss. Visits every node reachable through
// requires_grad inputs exactly once in reverse topological order; gradients
// accumulate into leaves.
void backward(const Tensor& loss);

}  // namespace sagechain
