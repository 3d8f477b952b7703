#include "sagechain/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "sagechain/error.hpp"

namespace sagechain::ops {

using detail::Node;

namespace {

void require_matrix(const Tensor& t, const char* op) {
    if (!t.defined() || t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected a matrix, got " +
                             (t.defined() ? shape_to_string(t.shape()) : std::string("<undefined>")));
    }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) mismatch(op, a, b);
}

bool wants(const Node& n, std::size_t i) { return n.inputs[i]->requires_grad; }

template <typename Fn, typename Dfn>
Tensor unary(const Tensor& a, Fn fn, Dfn dfn) {
    std::vector<double> out(a.size());
    auto in = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
    return make_result(a.shape(), std::move(out), {a}, [dfn](Node& self) {
        Node& x = *self.inputs[0];
        for (std::size_t i = 0; i < self.value.size(); ++i) x.grad[i] += self.grad[i] * dfn(x.value[i], self.value[i]);
    });
}

double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) mismatch("matmul", a, b);
    std::vector<double> out(m * n, 0.0);
    auto A = a.data();
    auto B = b.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += av * B[p * n + j];
        }
    return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
        Node& A = *self.inputs[0];
        Node& B = *self.inputs[1];
        const auto& G = self.grad;
        if (A.requires_grad)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B.value[p * n + j];
                    A.grad[i * k + p] += acc;
                }
        if (B.requires_grad)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = A.value[i * k + p];
                    for (std::size_t j = 0; j < n; ++j) B.grad[p * n + j] += av * G[i * n + j];
                }
    });
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    std::vector<double> out(m * n);
    auto A = a.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = A[i * n + j];
    return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
        Node& A = *self.inputs[0];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) A.grad[i * n + j] += self.grad[j * m + i];
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    require_matrix(x, "linear");
    require_matrix(w, "linear");
    const std::size_t n = x.shape()[0], in = x.shape()[1], out_dim = w.shape()[0];
    if (w.shape()[1] != in) mismatch("linear", x, w);
    const bool has_bias = bias.defined();
    if (has_bias && bias.size() != out_dim) mismatch("linear", w, bias);

    std::vector<double> out(n * out_dim);
    auto X = x.data();
    auto W = w.data();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out_dim; ++o) {
            double acc = has_bias ? bias[o] : 0.0;
            for (std::size_t i = 0; i < in; ++i) acc += X[r * in + i] * W[o * in + i];
            out[r * out_dim + o] = acc;
        }
    std::vector<Tensor> inputs{x, w};
    if (has_bias) inputs.push_back(bias);
    return make_result({n, out_dim}, std::move(out), std::move(inputs), [n, in, out_dim, has_bias](Node& self) {
        Node& X = *self.inputs[0];
        Node& W = *self.inputs[1];
        const auto& G = self.grad;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double g = G[r * out_dim + o];
                if (g == 0.0) continue;
                if (X.requires_grad)
                    for (std::size_t i = 0; i < in; ++i) X.grad[r * in + i] += g * W.value[o * in + i];
                if (W.requires_grad)
                    for (std::size_t i = 0; i < in; ++i) W.grad[o * in + i] += g * X.value[r * in + i];
            }
        if (has_bias && wants(self, 2)) {
            Node& B = *self.inputs[2];
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t o = 0; o < out_dim; ++o) B.grad[o] += G[r * out_dim + o];
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            Node& in = *self.inputs[k];
            if (!in.requires_grad) continue;
            for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        Node& A = *self.inputs[0];
        Node& B = *self.inputs[1];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (A.requires_grad) A.grad[i] += self.grad[i];
            if (B.requires_grad) B.grad[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        Node& A = *self.inputs[0];
        Node& B = *self.inputs[1];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (A.requires_grad) A.grad[i] += self.grad[i] * B.value[i];
            if (B.requires_grad) B.grad[i] += self.grad[i] * A.value[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    return unary(a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
    return unary(a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor add_row_vector(const Tensor& a, const Tensor& v) {
    require_matrix(a, "add_row_vector");
    const std::size_t n = a.shape()[0], c = a.shape()[1];
    if (v.size() != c) mismatch("add_row_vector", a, v);
    std::vector<double> out(a.size());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) out[r * c + j] = a[r * c + j] + v[j];
    return make_result(a.shape(), std::move(out), {a, v}, [n, c](Node& self) {
        Node& A = *self.inputs[0];
        Node& V = *self.inputs[1];
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < c; ++j) {
                const double g = self.grad[r * c + j];
                if (A.requires_grad) A.grad[r * c + j] += g;
                if (V.requires_grad) V.grad[j] += g;
            }
    });
}

Tensor mul_row_vector(const Tensor& a, const Tensor& v) {
    require_matrix(a, "mul_row_vector");
    const std::size_t n = a.shape()[0], c = a.shape()[1];
    if (v.size() != c) mismatch("mul_row_vector", a, v);
    std::vector<double> out(a.size());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) out[r * c + j] = a[r * c + j] * v[j];
    return make_result(a.shape(), std::move(out), {a, v}, [n, c](Node& self) {
        Node& A = *self.inputs[0];
        Node& V = *self.inputs[1];
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < c; ++j) {
                const double g = self.grad[r * c + j];
                if (A.requires_grad) A.grad[r * c + j] += g * V.value[j];
                if (V.requires_grad) V.grad[j] += g * A.value[r * c + j];
            }
    });
}

Tensor outer_sum(const Tensor& col, const Tensor& row) {
    const std::size_t n = col.size(), m = row.size();
    if (col.cols() != 1 && col.rank() == 2) mismatch("outer_sum", col, row);
    if (row.rank() == 2 && row.rows() != 1) mismatch("outer_sum", col, row);
    std::vector<double> out(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] = col[i] + row[j];
    return make_result({n, m}, std::move(out), {col, row}, [n, m](Node& self) {
        Node& C = *self.inputs[0];
        Node& R = *self.inputs[1];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const double g = self.grad[i * m + j];
                if (C.requires_grad) C.grad[i] += g;
                if (R.requires_grad) R.grad[j] += g;
            }
    });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_matrix(a, "concat_cols");
    require_matrix(b, "concat_cols");
    const std::size_t n = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
    if (b.shape()[0] != n) mismatch("concat_cols", a, b);
    const std::size_t c = ca + cb;
    std::vector<double> out(n * c);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < ca; ++j) out[r * c + j] = a[r * ca + j];
        for (std::size_t j = 0; j < cb; ++j) out[r * c + ca + j] = b[r * cb + j];
    }
    return make_result({n, c}, std::move(out), {a, b}, [n, ca, cb, c](Node& self) {
        Node& A = *self.inputs[0];
        Node& B = *self.inputs[1];
        for (std::size_t r = 0; r < n; ++r) {
            if (A.requires_grad)
                for (std::size_t j = 0; j < ca; ++j) A.grad[r * ca + j] += self.grad[r * c + j];
            if (B.requires_grad)
                for (std::size_t j = 0; j < cb; ++j) B.grad[r * cb + j] += self.grad[r * c + ca + j];
        }
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no inputs");
    require_matrix(parts[0], "concat_rows");
    const std::size_t c = parts[0].shape()[1];
    std::size_t n = 0;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
        require_matrix(p, "concat_rows");
        if (p.shape()[1] != c) mismatch("concat_rows", parts[0], p);
        offsets.push_back(n * c);
        n += p.shape()[0];
    }
    std::vector<double> out;
    out.reserve(n * c);
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    return make_result({n, c}, std::move(out), parts, [offsets](Node& self) {
        for (std::size_t k = 0; k < self.inputs.size(); ++k) {
            Node& in = *self.inputs[k];
            if (!in.requires_grad) continue;
            for (std::size_t i = 0; i < in.value.size(); ++i) in.grad[i] += self.grad[offsets[k] + i];
        }
    });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
    require_matrix(a, "slice_rows");
    const std::size_t c = a.shape()[1];
    if (begin > end || end > a.shape()[0]) {
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") outside " + shape_to_string(a.shape()));
    }
    std::vector<double> out(a.data().begin() + begin * c, a.data().begin() + end * c);
    return make_result({end - begin, c}, std::move(out), {a}, [begin, c](Node& self) {
        Node& A = *self.inputs[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[begin * c + i] += self.grad[i];
    });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
    require_matrix(a, "slice_cols");
    const std::size_t n = a.shape()[0], c = a.shape()[1];
    if (begin > end || end > c) {
        throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") outside " + shape_to_string(a.shape()));
    }
    const std::size_t w = end - begin;
    std::vector<double> out(n * w);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < w; ++j) out[r * w + j] = a[r * c + begin + j];
    return make_result({n, w}, std::move(out), {a}, [n, c, w, begin](Node& self) {
        Node& A = *self.inputs[0];
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < w; ++j) A.grad[r * c + begin + j] += self.grad[r * w + j];
    });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices) {
    require_matrix(a, "gather_rows");
    const std::size_t n = a.shape()[0], c = a.shape()[1];
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    std::vector<double> out(idx.size() * c);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= n) {
            throw DimensionError("gather_rows: index " + std::to_string(idx[r]) + " outside " +
                                 shape_to_string(a.shape()));
        }
        std::copy_n(a.data().begin() + idx[r] * c, c, out.begin() + r * c);
    }
    const std::size_t rows = idx.size();
    return make_result({rows, c}, std::move(out), {a}, [idx = std::move(idx), c](Node& self) {
        Node& A = *self.inputs[0];
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t j = 0; j < c; ++j) A.grad[idx[r] * c + j] += self.grad[r * c + j];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.size()) {
        throw DimensionError("reshape: " + shape_to_string(a.shape()) + " cannot become " + shape_to_string(shape));
    }
    std::vector<double> out(a.data().begin(), a.data().end());
    return make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
        Node& A = *self.inputs[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i];
    });
}

Tensor relu(const Tensor& a) {
    return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("leaky_relu: alpha must lie in [0, 1)");
    return unary(
        a, [alpha](double x) { return x >= 0 ? x : alpha * x; },
        [alpha](double x, double) { return x >= 0 ? 1.0 : alpha; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor log_sigmoid(const Tensor& a) {
    return unary(
        a, [](double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); },
        [](double x, double) { return stable_sigmoid(-x); });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return make_result({1}, {s}, {a}, [](Node& self) {
        Node& A = *self.inputs[0];
        for (double& g : A.grad) g += self.grad[0];
    });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw DimensionError("mean of an empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor max_over(const Tensor& a, const std::vector<std::vector<std::size_t>>& sets) {
    require_matrix(a, "max_over");
    const std::size_t n = a.shape()[0], c = a.shape()[1];
    std::vector<double> out(sets.size() * c);
    std::vector<std::size_t> arg(sets.size() * c);
    for (std::size_t v = 0; v < sets.size(); ++v) {
        if (sets[v].empty()) throw DimensionError("max_over: empty set for row " + std::to_string(v));
        for (std::size_t j = 0; j < c; ++j) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_row = sets[v].front();
            for (std::size_t r : sets[v]) {
                if (r >= n) throw DimensionError("max_over: row index outside " + shape_to_string(a.shape()));
                const double x = a[r * c + j];
                if (x > best) {
                    best = x;
                    best_row = r;
                }
            }
            out[v * c + j] = best;
            arg[v * c + j] = best_row;
        }
    }
    const std::size_t rows = sets.size();
    return make_result({rows, c}, std::move(out), {a}, [arg = std::move(arg), c](Node& self) {
        Node& A = *self.inputs[0];
        for (std::size_t k = 0; k < arg.size(); ++k) A.grad[arg[k] * c + k % c] += self.grad[k];
    });
}

Tensor l2_normalize_rows(const Tensor& a) {
    require_matrix(a, "l2_normalize_rows");
    const std::size_t n = a.shape()[0], c = a.shape()[1];
    std::vector<double> out(a.size(), 0.0);
    std::vector<double> norms(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += a[r * c + j] * a[r * c + j];
        norms[r] = std::sqrt(s);
        if (norms[r] > 0)
            for (std::size_t j = 0; j < c; ++j) out[r * c + j] = a[r * c + j] / norms[r];
    }
    return make_result(a.shape(), std::move(out), {a}, [norms = std::move(norms), n, c](Node& self) {
        Node& A = *self.inputs[0];
        for (std::size_t r = 0; r < n; ++r) {
            if (norms[r] == 0) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += self.value[r * c + j] * self.grad[r * c + j];
            for (std::size_t j = 0; j < c; ++j)
                A.grad[r * c + j] += (self.grad[r * c + j] - self.value[r * c + j] * dot) / norms[r];
        }
    });
}

Tensor log_softmax_rows(const Tensor& logits) {
    require_matrix(logits, "log_softmax_rows");
    const std::size_t n = logits.shape()[0], c = logits.shape()[1];
    std::vector<double> out(logits.size());
    for (std::size_t r = 0; r < n; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, logits[r * c + j]);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(logits[r * c + j] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t j = 0; j < c; ++j) out[r * c + j] = logits[r * c + j] - lse;
    }
    return make_result(logits.shape(), std::move(out), {logits}, [n, c](Node& self) {
        Node& X = *self.inputs[0];
        for (std::size_t r = 0; r < n; ++r) {
            double gs = 0.0;
            for (std::size_t j = 0; j < c; ++j) gs += self.grad[r * c + j];
            for (std::size_t j = 0; j < c; ++j)
                X.grad[r * c + j] += self.grad[r * c + j] - std::exp(self.value[r * c + j]) * gs;
        }
    });
}

Tensor masked_softmax_rows(const Tensor& scores, std::span<const unsigned char> mask) {
    require_matrix(scores, "masked_softmax_rows");
    const std::size_t n = scores.shape()[0], c = scores.shape()[1];
    if (mask.size() != scores.size()) throw DimensionError("masked_softmax_rows: mask size differs from scores");
    std::vector<unsigned char> m(mask.begin(), mask.end());
    std::vector<double> out(scores.size(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c; ++j)
            if (m[r * c + j]) mx = std::max(mx, scores[r * c + j]);
        if (!std::isfinite(mx)) throw DimensionError("masked_softmax_rows: row " + std::to_string(r) + " is fully masked");
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j)
            if (m[r * c + j]) s += (out[r * c + j] = std::exp(scores[r * c + j] - mx));
        for (std::size_t j = 0; j < c; ++j) out[r * c + j] /= s;
    }
    return make_result(scores.shape(), std::move(out), {scores}, [n, c, m = std::move(m)](Node& self) {
        Node& S = *self.inputs[0];
        for (std::size_t r = 0; r < n; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += self.value[r * c + j] * self.grad[r * c + j];
            for (std::size_t j = 0; j < c; ++j)
                if (m[r * c + j]) S.grad[r * c + j] += self.value[r * c + j] * (self.grad[r * c + j] - dot);
        }
    });
}

Tensor nll_loss(const Tensor& log_probs, std::span<const int> targets) {
    require_matrix(log_probs, "nll_loss");
    const std::size_t n = log_probs.shape()[0], c = log_probs.shape()[1];
    if (targets.size() != n) {
        throw DimensionError("nll_loss: " + std::to_string(targets.size()) + " targets for " +
                             shape_to_string(log_probs.shape()));
    }
    std::vector<int> t(targets.begin(), targets.end());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] < 0 || static_cast<std::size_t>(t[i]) >= c) {
            throw std::out_of_range("nll_loss: label " + std::to_string(t[i]) + " outside [0, " + std::to_string(c) + ")");
        }
        s -= log_probs[i * c + static_cast<std::size_t>(t[i])];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    return make_result({1}, {s * inv_n}, {log_probs}, [t = std::move(t), c, inv_n](Node& self) {
        Node& L = *self.inputs[0];
        for (std::size_t i = 0; i < t.size(); ++i) L.grad[i * c + static_cast<std::size_t>(t[i])] -= self.grad[0] * inv_n;
    });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
    return nll_loss(log_softmax_rows(logits), targets);
}

Tensor batch_standardize(const Tensor& x, double eps, std::vector<double>* batch_mean, std::vector<double>* batch_var) {
    require_matrix(x, "batch_standardize");
    const std::size_t n = x.shape()[0], c = x.shape()[1];
    std::vector<double> mu(c, 0.0), var(c, 0.0), inv_std(c);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) mu[j] += x[r * c + j];
    for (double& m : mu) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) {
            const double d = x[r * c + j] - mu[j];
            var[j] += d * d;
        }
    for (std::size_t j = 0; j < c; ++j) {
        var[j] /= static_cast<double>(n);
        inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
    }
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) out[r * c + j] = (x[r * c + j] - mu[j]) * inv_std[j];
    if (batch_mean) *batch_mean = mu;
    if (batch_var) *batch_var = var;
    return make_result(x.shape(), std::move(out), {x}, [n, c, inv_std = std::move(inv_std)](Node& self) {
        Node& X = *self.inputs[0];
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < c; ++j) {
            double g_mean = 0.0, gx_mean = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                g_mean += self.grad[r * c + j];
                gx_mean += self.grad[r * c + j] * self.value[r * c + j];
            }
            g_mean *= inv_n;
            gx_mean *= inv_n;
            for (std::size_t r = 0; r < n; ++r)
                X.grad[r * c + j] += inv_std[j] * (self.grad[r * c + j] - g_mean - self.value[r * c + j] * gx_mean);
        }
    });
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_matrix(x, "conv1d");
    if (weight.rank() != 3) throw DimensionError("conv1d: weight must be (kernels x in_ch x width), got " + shape_to_string(weight.shape()));
    const std::size_t len = x.shape()[0], in_ch = x.shape()[1];
    const std::size_t kernels = weight.shape()[0], width = weight.shape()[2];
    if (weight.shape()[1] != in_ch) mismatch("conv1d", x, weight);
    if (bias.size() != kernels) mismatch("conv1d", weight, bias);
    if (len < width) {
        throw DimensionError("conv1d: sequence length " + std::to_string(len) + " shorter than kernel width " +
                             std::to_string(width));
    }
    const std::size_t out_len = len - width + 1;
    std::vector<double> out(out_len * kernels);
    auto X = x.data();
    auto W = weight.data();
    for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t k = 0; k < kernels; ++k) {
            double acc = bias[k];
            for (std::size_t ch = 0; ch < in_ch; ++ch)
                for (std::size_t j = 0; j < width; ++j) acc += W[(k * in_ch + ch) * width + j] * X[(t + j) * in_ch + ch];
            out[t * kernels + k] = acc;
        }
    return make_result({out_len, kernels}, std::move(out), {x, weight, bias},
                       [out_len, kernels, in_ch, width](Node& self) {
                           Node& X = *self.inputs[0];
                           Node& W = *self.inputs[1];
                           Node& B = *self.inputs[2];
                           for (std::size_t t = 0; t < out_len; ++t)
                               for (std::size_t k = 0; k < kernels; ++k) {
                                   const double g = self.grad[t * kernels + k];
                                   if (B.requires_grad) B.grad[k] += g;
                                   for (std::size_t ch = 0; ch < in_ch; ++ch)
                                       for (std::size_t j = 0; j < width; ++j) {
                                           const std::size_t wi = (k * in_ch + ch) * width + j;
                                           const std::size_t xi = (t + j) * in_ch + ch;
                                           if (W.requires_grad) W.grad[wi] += g * X.value[xi];
                                           if (X.requires_grad) X.grad[xi] += g * W.value[wi];
                                       }
                               }
                       });
}

namespace {

struct LstmTrace {
    std::size_t steps = 0, in = 0, hidden = 0;
    // Per step: activated gates i, f, g, o (4H), cell state (H), tanh(cell) (H).
    std::vector<double> gates, cell, cell_tanh;
};

}  // namespace

Tensor lstm_sequence(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& bias) {
    require_matrix(x, "lstm_sequence");
    require_matrix(w_ih, "lstm_sequence");
    require_matrix(w_hh, "lstm_sequence");
    const std::size_t T = x.shape()[0], in = x.shape()[1], H = w_hh.shape()[1];
    if (w_ih.shape()[0] != 4 * H || w_ih.shape()[1] != in) mismatch("lstm_sequence", x, w_ih);
    if (w_hh.shape()[0] != 4 * H) mismatch("lstm_sequence", w_ih, w_hh);
    if (bias.size() != 4 * H) mismatch("lstm_sequence", w_ih, bias);

    auto trace = std::make_shared<LstmTrace>();
    trace->steps = T;
    trace->in = in;
    trace->hidden = H;
    trace->gates.resize(T * 4 * H);
    trace->cell.resize(T * H);
    trace->cell_tanh.resize(T * H);

    std::vector<double> out(T * H);
    std::vector<double> z(4 * H);
    auto X = x.data();
    auto Wi = w_ih.data();
    auto Wh = w_hh.data();
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t r = 0; r < 4 * H; ++r) {
            double acc = bias[r];
            for (std::size_t k = 0; k < in; ++k) acc += Wi[r * in + k] * X[t * in + k];
            if (t > 0)
                for (std::size_t k = 0; k < H; ++k) acc += Wh[r * H + k] * out[(t - 1) * H + k];
            z[r] = acc;
        }
        double* gate = &trace->gates[t * 4 * H];
        for (std::size_t k = 0; k < H; ++k) {
            gate[k] = stable_sigmoid(z[k]);
            gate[H + k] = stable_sigmoid(z[H + k]);
            gate[2 * H + k] = std::tanh(z[2 * H + k]);
            gate[3 * H + k] = stable_sigmoid(z[3 * H + k]);
            const double c_prev = t > 0 ? trace->cell[(t - 1) * H + k] : 0.0;
            const double c = gate[H + k] * c_prev + gate[k] * gate[2 * H + k];
            trace->cell[t * H + k] = c;
            trace->cell_tanh[t * H + k] = std::tanh(c);
            out[t * H + k] = gate[3 * H + k] * trace->cell_tanh[t * H + k];
        }
    }

    return make_result({T, H}, std::move(out), {x, w_ih, w_hh, bias}, [trace](Node& self) {
        Node& X = *self.inputs[0];
        Node& Wi = *self.inputs[1];
        Node& Wh = *self.inputs[2];
        Node& B = *self.inputs[3];
        const std::size_t T = trace->steps, in = trace->in, H = trace->hidden;
        std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dz(4 * H);
        for (std::size_t s = T; s-- > 0;) {
            const double* gate = &trace->gates[s * 4 * H];
            for (std::size_t k = 0; k < H; ++k) {
                const double i = gate[k], f = gate[H + k], g = gate[2 * H + k], o = gate[3 * H + k];
                const double th = trace->cell_tanh[s * H + k];
                const double c_prev = s > 0 ? trace->cell[(s - 1) * H + k] : 0.0;
                const double dh = self.grad[s * H + k] + dh_next[k];
                const double dc = dh * o * (1.0 - th * th) + dc_next[k];
                dz[k] = dc * g * i * (1.0 - i);
                dz[H + k] = dc * c_prev * f * (1.0 - f);
                dz[2 * H + k] = dc * i * (1.0 - g * g);
                dz[3 * H + k] = dh * th * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            std::fill(dh_next.begin(), dh_next.end(), 0.0);
            for (std::size_t r = 0; r < 4 * H; ++r) {
                const double d = dz[r];
                if (d == 0.0) continue;
                if (B.requires_grad) B.grad[r] += d;
                for (std::size_t k = 0; k < in; ++k) {
                    if (Wi.requires_grad) Wi.grad[r * in + k] += d * X.value[s * in + k];
                    if (X.requires_grad) X.grad[s * in + k] += d * Wi.value[r * in + k];
                }
                if (s > 0)
                    for (std::size_t k = 0; k < H; ++k) {
                        if (Wh.requires_grad) Wh.grad[r * H + k] += d * self.value[(s - 1) * H + k];
                        dh_next[k] += d * Wh.value[r * H + k];
                    }
            }
        }
    });
}

}  // namespace sagechain::ops
