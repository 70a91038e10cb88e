#include "tmsc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "tmsc/special.hpp"

namespace tmsc {

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

namespace {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension in " + shape_str(shape));
        n *= d;
    }
    return n;
}

void require_2d(const Tensor& t, const char* op) {
    if (t.shape().size() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected 2-D tensor, got " +
                                    shape_str(t.shape()));
    }
}

[[noreturn]] void shape_error(const char* op, const std::vector<int>& a,
                              const std::vector<int>& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) +
                                " vs " + shape_str(b));
}

}  // namespace

Tensor make_op(std::vector<int> shape, std::vector<float> data, std::vector<Tensor> parents,
               std::function<void(Tensor::Node&)> backward_fn) {
    auto node = std::make_shared<Tensor::Node>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    for (const auto& p : parents) {
        node->parents.push_back(p.node());
        if (p.requires_grad()) node->requires_grad = true;
    }
    if (node->requires_grad) node->backward_fn = std::move(backward_fn);
    return Tensor(std::move(node));
}

// --- construction ------------------------------------------------------------

Tensor Tensor::zeros(const std::vector<int>& shape, bool requires_grad) {
    return from_data(shape, std::vector<float>(shape_numel(shape), 0.0f), requires_grad);
}

Tensor Tensor::full(const std::vector<int>& shape, float value, bool requires_grad) {
    return from_data(shape, std::vector<float>(shape_numel(shape), value), requires_grad);
}

Tensor Tensor::from_data(const std::vector<int>& shape, std::vector<float> data,
                         bool requires_grad) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
        throw std::invalid_argument("tensor: " + std::to_string(data.size()) +
                                    " values do not fill shape " + shape_str(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

// --- accessors ---------------------------------------------------------------

const std::vector<int>& Tensor::shape() const { return node_->shape; }
int64_t Tensor::numel() const { return node_->numel(); }

int Tensor::rows() const {
    require_2d(*this, "rows");
    return node_->shape[0];
}

int Tensor::cols() const {
    require_2d(*this, "cols");
    return node_->shape[1];
}

const std::vector<float>& Tensor::data() const { return node_->data; }
std::vector<float>& Tensor::mutable_data() { return node_->data; }
bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::has_grad() const { return node_->grad.size() == node_->data.size(); }

const std::vector<float>& Tensor::grad() const {
    if (!has_grad()) throw std::runtime_error("tensor: gradient not populated");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (has_grad()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

float Tensor::value() const {
    if (numel() != 1) {
        throw std::invalid_argument("tensor: value() on non-scalar of shape " +
                                    shape_str(node_->shape));
    }
    return node_->data[0];
}

float Tensor::at(int64_t i) const { return node_->data.at(static_cast<size_t>(i)); }

float Tensor::at2(int r, int c) const {
    require_2d(*this, "at2");
    return node_->data.at(static_cast<size_t>(r) * node_->shape[1] + c);
}

// --- backward ----------------------------------------------------------------

void Tensor::backward() const {
    if (!defined()) throw std::runtime_error("backward: undefined tensor");
    if (numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(node_->shape));
    }
    if (!node_->requires_grad) return;

    // Iterative post-order DFS; each node visited exactly once.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    node_->ensure_grad();
    node_->grad[0] += 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
}

// --- op helpers ----------------------------------------------------------------

namespace {

using Node = Tensor::Node;

// Binary elementwise with scalar-vs-tensor broadcast. dfa/dfb give the partial
// derivatives as functions of (a, b).
template <typename F, typename Da, typename Db>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, F f, Da dfa, Db dfb) {
    const bool a_scalar = a.numel() == 1;
    const bool b_scalar = b.numel() == 1;
    if (!a_scalar && !b_scalar && a.shape() != b.shape()) shape_error(name, a.shape(), b.shape());

    const auto& out_shape = a_scalar && !b_scalar ? b.shape() : a.shape();
    const auto& av = a.data();
    const auto& bv = b.data();
    const int64_t n = a_scalar && !b_scalar ? b.numel() : a.numel();

    std::vector<float> out(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        double x = av[a_scalar ? 0 : i];
        double y = bv[b_scalar ? 0 : i];
        out[i] = static_cast<float>(f(x, y));
    }

    return make_op(out_shape, std::move(out), {a, b},
                   [a_scalar, b_scalar, dfa, dfb](Node& node) {
                       Node* pa = node.parents[0].get();
                       Node* pb = node.parents[1].get();
                       const int64_t n = node.numel();
                       if (pa->requires_grad) {
                           pa->ensure_grad();
                           double acc = 0.0;
                           for (int64_t i = 0; i < n; ++i) {
                               double x = pa->data[a_scalar ? 0 : i];
                               double y = pb->data[b_scalar ? 0 : i];
                               double g = static_cast<double>(node.grad[i]) * dfa(x, y);
                               if (a_scalar) acc += g;
                               else pa->grad[i] += static_cast<float>(g);
                           }
                           if (a_scalar) pa->grad[0] += static_cast<float>(acc);
                       }
                       if (pb->requires_grad) {
                           pb->ensure_grad();
                           double acc = 0.0;
                           for (int64_t i = 0; i < n; ++i) {
                               double x = pa->data[a_scalar ? 0 : i];
                               double y = pb->data[b_scalar ? 0 : i];
                               double g = static_cast<double>(node.grad[i]) * dfb(x, y);
                               if (b_scalar) acc += g;
                               else pb->grad[i] += static_cast<float>(g);
                           }
                           if (b_scalar) pb->grad[0] += static_cast<float>(acc);
                       }
                   });
}

// Unary elementwise; df receives (x, out).
template <typename F, typename Df>
Tensor unary_op(const Tensor& a, F f, Df df) {
    const auto& av = a.data();
    std::vector<float> out(av.size());
    for (size_t i = 0; i < av.size(); ++i) out[i] = static_cast<float>(f(static_cast<double>(av[i])));
    return make_op(a.shape(), std::move(out), {a}, [df](Node& node) {
        Node* p = node.parents[0].get();
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (int64_t i = 0; i < node.numel(); ++i) {
            p->grad[i] += static_cast<float>(
                static_cast<double>(node.grad[i]) *
                df(static_cast<double>(p->data[i]), static_cast<double>(node.data[i])));
        }
    });
}

double stable_softplus(double x) {
    // softplus(x) = log(1 + e^x), guarded so large |x| cannot overflow
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

// --- elementwise suite ---------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op("add", a, b, [](double x, double y) { return x + y; },
                     [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op("sub", a, b, [](double x, double y) { return x - y; },
                     [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op("mul", a, b, [](double x, double y) { return x * y; },
                     [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor divide(const Tensor& a, const Tensor& b) {
    return binary_op("divide", a, b, [](double x, double y) { return x / y; },
                     [](double, double y) { return 1.0 / y; },
                     [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, float c) {
    const double cd = c;
    return unary_op(a, [cd](double x) { return cd * x; }, [cd](double, double) { return cd; });
}

Tensor add_scalar(const Tensor& a, float c) {
    const double cd = c;
    return unary_op(a, [cd](double x) { return x + cd; }, [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& a) {
    return unary_op(a, [](double x) { return std::exp(x); },
                    [](double, double out) { return out; });
}

Tensor log(const Tensor& a) {
    return unary_op(a, [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& a) {
    return unary_op(a, [](double x) { return std::tanh(x); },
                    [](double, double out) { return 1.0 - out * out; });
}

Tensor softplus(const Tensor& a) {
    return unary_op(a, [](double x) { return stable_softplus(x); },
                    [](double x, double) { return sigmoid(x); });
}

Tensor digamma(const Tensor& a) {
    return unary_op(a, [](double x) { return digamma(x); },
                    [](double x, double) { return trigamma(x); });
}

Tensor lgamma(const Tensor& a) {
    return unary_op(a, [](double x) { return lgamma_pos(x); },
                    [](double x, double) { return digamma(x); });
}

// --- linear algebra --------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const int m = a.shape()[0], k = a.shape()[1];
    const int k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) shape_error("matmul", a.shape(), b.shape());

    const auto& av = a.data();
    const auto& bv = b.data();
    std::vector<float> out(static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) {
                acc += static_cast<double>(av[i * k + t]) * static_cast<double>(bv[t * n + j]);
            }
            out[static_cast<size_t>(i) * n + j] = static_cast<float>(acc);
        }
    }

    return make_op({m, n}, std::move(out), {a, b}, [m, k, n](Node& node) {
        Node* pa = node.parents[0].get();
        Node* pb = node.parents[1].get();
        if (pa->requires_grad) {
            pa->ensure_grad();
            // dA = G * B^T
            for (int i = 0; i < m; ++i) {
                for (int t = 0; t < k; ++t) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) {
                        acc += static_cast<double>(node.grad[i * n + j]) *
                               static_cast<double>(pb->data[t * n + j]);
                    }
                    pa->grad[i * k + t] += static_cast<float>(acc);
                }
            }
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            // dB = A^T * G
            for (int t = 0; t < k; ++t) {
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < m; ++i) {
                        acc += static_cast<double>(pa->data[i * k + t]) *
                               static_cast<double>(node.grad[i * n + j]);
                    }
                    pb->grad[t * n + j] += static_cast<float>(acc);
                }
            }
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_2d(a, "transpose");
    const int m = a.shape()[0], n = a.shape()[1];
    const auto& av = a.data();
    std::vector<float> out(av.size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(j) * m + i] = av[i * n + j];
    return make_op({n, m}, std::move(out), {a}, [m, n](Node& node) {
        Node* p = node.parents[0].get();
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) p->grad[i * n + j] += node.grad[j * m + i];
    });
}

// --- reductions -------------------------------------------------------------------

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (float v : a.data()) acc += v;
    return make_op({1}, {static_cast<float>(acc)}, {a}, [](Node& node) {
        Node* p = node.parents[0].get();
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (auto& g : p->grad) g += node.grad[0];
    });
}

Tensor mean(const Tensor& a) {
    double acc = 0.0;
    for (float v : a.data()) acc += v;
    const double inv_n = 1.0 / static_cast<double>(a.numel());
    return make_op({1}, {static_cast<float>(acc * inv_n)}, {a}, [inv_n](Node& node) {
        Node* p = node.parents[0].get();
        if (!p->requires_grad) return;
        p->ensure_grad();
        const float g = static_cast<float>(node.grad[0] * inv_n);
        for (auto& pg : p->grad) pg += g;
    });
}

Tensor row_softmax(const Tensor& a) {
    const auto& shp = a.shape();
    if (shp.size() != 1 && shp.size() != 2) {
        throw std::invalid_argument("row_softmax: expected 1-D or 2-D tensor, got " +
                                    shape_str(shp));
    }
    const int rows = shp.size() == 2 ? shp[0] : 1;
    const int cols = shp.size() == 2 ? shp[1] : shp[0];
    const auto& av = a.data();
    std::vector<float> out(av.size());
    for (int r = 0; r < rows; ++r) {
        const float* in = av.data() + static_cast<size_t>(r) * cols;
        double mx = in[0];
        for (int j = 1; j < cols; ++j) mx = std::max<double>(mx, in[j]);
        double denom = 0.0;
        std::vector<double> e(cols);
        for (int j = 0; j < cols; ++j) {
            e[j] = std::exp(static_cast<double>(in[j]) - mx);
            denom += e[j];
        }
        for (int j = 0; j < cols; ++j) {
            out[static_cast<size_t>(r) * cols + j] = static_cast<float>(e[j] / denom);
        }
    }
    return make_op(shp, std::move(out), {a}, [rows, cols](Node& node) {
        Node* p = node.parents[0].get();
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (int r = 0; r < rows; ++r) {
            const float* o = node.data.data() + static_cast<size_t>(r) * cols;
            const float* g = node.grad.data() + static_cast<size_t>(r) * cols;
            double dsum = 0.0;
            for (int j = 0; j < cols; ++j) dsum += static_cast<double>(g[j]) * o[j];
            float* pg = p->grad.data() + static_cast<size_t>(r) * cols;
            for (int j = 0; j < cols; ++j) {
                pg[j] += static_cast<float>(static_cast<double>(o[j]) * (g[j] - dsum));
            }
        }
    });
}

// --- structural ops ------------------------------------------------------------------

Tensor reshape(const Tensor& a, const std::vector<int>& shape) {
    if (shape_numel(shape) != a.numel()) {
        throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " +
                                    shape_str(shape));
    }
    std::vector<float> out = a.data();
    return make_op(shape, std::move(out), {a}, [](Node& node) {
        Node* p = node.parents[0].get();
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (int64_t i = 0; i < node.numel(); ++i) p->grad[i] += node.grad[i];
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
    int cols = -1, total_rows = 0;
    for (const auto& t : parts) {
        require_2d(t, "concat_rows");
        if (cols < 0) cols = t.shape()[1];
        if (t.shape()[1] != cols) shape_error("concat_rows", parts[0].shape(), t.shape());
        total_rows += t.shape()[0];
    }
    std::vector<float> out;
    out.reserve(static_cast<size_t>(total_rows) * cols);
    for (const auto& t : parts) out.insert(out.end(), t.data().begin(), t.data().end());
    return make_op({total_rows, cols}, std::move(out), parts, [](Node& node) {
        size_t offset = 0;
        for (auto& parent : node.parents) {
            Node* p = parent.get();
            const size_t n = p->data.size();
            if (p->requires_grad) {
                p->ensure_grad();
                for (size_t i = 0; i < n; ++i) p->grad[i] += node.grad[offset + i];
            }
            offset += n;
        }
    });
}

Tensor take_row(const Tensor& a, int row) {
    require_2d(a, "take_row");
    const int m = a.shape()[0], n = a.shape()[1];
    if (row < 0 || row >= m) {
        throw std::invalid_argument("take_row: row " + std::to_string(row) +
                                    " out of range for " + shape_str(a.shape()));
    }
    std::vector<float> out(a.data().begin() + static_cast<size_t>(row) * n,
                           a.data().begin() + static_cast<size_t>(row + 1) * n);
    return make_op({1, n}, std::move(out), {a}, [row, n](Node& node) {
        Node* p = node.parents[0].get();
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (int j = 0; j < n; ++j) p->grad[static_cast<size_t>(row) * n + j] += node.grad[j];
    });
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    require_2d(a, "add_rowvec");
    const int m = a.shape()[0], n = a.shape()[1];
    if (v.numel() != n) shape_error("add_rowvec", a.shape(), v.shape());
    const auto& av = a.data();
    const auto& vv = v.data();
    std::vector<float> out(av.size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out[static_cast<size_t>(i) * n + j] =
                static_cast<float>(static_cast<double>(av[i * n + j]) + vv[j]);
    return make_op(a.shape(), std::move(out), {a, v}, [m, n](Node& node) {
        Node* pa = node.parents[0].get();
        Node* pv = node.parents[1].get();
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (int64_t i = 0; i < node.numel(); ++i) pa->grad[i] += node.grad[i];
        }
        if (pv->requires_grad) {
            pv->ensure_grad();
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int i = 0; i < m; ++i) acc += node.grad[static_cast<size_t>(i) * n + j];
                pv->grad[j] += static_cast<float>(acc);
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
    require_2d(x, "layer_norm");
    const int m = x.shape()[0], n = x.shape()[1];
    if (gamma.numel() != n) shape_error("layer_norm", x.shape(), gamma.shape());
    if (beta.numel() != n) shape_error("layer_norm", x.shape(), beta.shape());
    constexpr double eps = 1e-5;

    const auto& xv = x.data();
    const auto& gv = gamma.data();
    const auto& bv = beta.data();
    std::vector<float> out(xv.size());
    // normalized values and inverse stds are needed again in backward
    auto xhat = std::make_shared<std::vector<double>>(xv.size());
    auto inv_std = std::make_shared<std::vector<double>>(m);
    for (int r = 0; r < m; ++r) {
        const float* in = xv.data() + static_cast<size_t>(r) * n;
        double mu = 0.0;
        for (int j = 0; j < n; ++j) mu += in[j];
        mu /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            double d = in[j] - mu;
            var += d * d;
        }
        var /= n;
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = inv;
        for (int j = 0; j < n; ++j) {
            double h = (in[j] - mu) * inv;
            (*xhat)[static_cast<size_t>(r) * n + j] = h;
            out[static_cast<size_t>(r) * n + j] = static_cast<float>(gv[j] * h + bv[j]);
        }
    }

    return make_op(x.shape(), std::move(out), {x, gamma, beta},
                   [m, n, xhat, inv_std](Node& node) {
                       Node* px = node.parents[0].get();
                       Node* pg = node.parents[1].get();
                       Node* pb = node.parents[2].get();
                       if (pg->requires_grad) {
                           pg->ensure_grad();
                           for (int j = 0; j < n; ++j) {
                               double acc = 0.0;
                               for (int r = 0; r < m; ++r)
                                   acc += static_cast<double>(node.grad[static_cast<size_t>(r) * n + j]) *
                                          (*xhat)[static_cast<size_t>(r) * n + j];
                               pg->grad[j] += static_cast<float>(acc);
                           }
                       }
                       if (pb->requires_grad) {
                           pb->ensure_grad();
                           for (int j = 0; j < n; ++j) {
                               double acc = 0.0;
                               for (int r = 0; r < m; ++r)
                                   acc += node.grad[static_cast<size_t>(r) * n + j];
                               pb->grad[j] += static_cast<float>(acc);
                           }
                       }
                       if (px->requires_grad) {
                           px->ensure_grad();
                           for (int r = 0; r < m; ++r) {
                               const size_t base = static_cast<size_t>(r) * n;
                               double mean_dh = 0.0, mean_dh_xhat = 0.0;
                               std::vector<double> dh(n);
                               for (int j = 0; j < n; ++j) {
                                   dh[j] = static_cast<double>(node.grad[base + j]) *
                                           pg->data[j];
                                   mean_dh += dh[j];
                                   mean_dh_xhat += dh[j] * (*xhat)[base + j];
                               }
                               mean_dh /= n;
                               mean_dh_xhat /= n;
                               for (int j = 0; j < n; ++j) {
                                   px->grad[base + j] += static_cast<float>(
                                       (*inv_std)[r] *
                                       (dh[j] - mean_dh - (*xhat)[base + j] * mean_dh_xhat));
                               }
                           }
                       }
                   });
}

Tensor dot(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("dot", a.shape(), b.shape());
    return sum(mul(a, b));
}

// --- optimizer --------------------------------------------------------------------

void sgd_step(const std::vector<Tensor>& params, float lr) {
    if (lr < 0.0f) throw std::invalid_argument("sgd_step: negative learning rate");
    for (const auto& p : params) {
        if (!p.has_grad()) {
            throw std::runtime_error("sgd_step: parameter of shape " + shape_str(p.shape()) +
                                     " has no gradient");
        }
    }
    for (const auto& p : params) {
        auto node = p.node();
        for (size_t i = 0; i < node->data.size(); ++i) {
            node->data[i] -= lr * node->grad[i];
        }
        std::fill(node->grad.begin(), node->grad.end(), 0.0f);
    }
}

}  // namespace tmsc
