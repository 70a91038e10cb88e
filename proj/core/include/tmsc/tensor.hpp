#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tmsc {

// Dense float32 tensor with reverse-mode differentiation. Values are computed
// eagerly; each op records a backward closure on the node it creates.
// Accumulation inside matrix multiplies and reductions is double precision,
// stored results are float32.
//
// Broadcasting is restricted to scalar-vs-tensor; anything else is a shape
// error. Tensors behave as shared handles: copies alias the same node.
class Tensor {
public:
    struct Node {
        std::vector<int> shape;
        std::vector<float> data;
        std::vector<float> grad;  // allocated on first use, same length as data
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        std::function<void(Node&)> backward_fn;

        int64_t numel() const { return static_cast<int64_t>(data.size()); }
        void ensure_grad() {
            if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
        }
    };

    Tensor() = default;

    static Tensor zeros(const std::vector<int>& shape, bool requires_grad = false);
    static Tensor full(const std::vector<int>& shape, float value, bool requires_grad = false);
    static Tensor from_data(const std::vector<int>& shape, std::vector<float> data,
                            bool requires_grad = false);
    static Tensor scalar(float value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const;
    int64_t numel() const;
    int rows() const;  // 2-D only
    int cols() const;  // 2-D only

    const std::vector<float>& data() const;
    std::vector<float>& mutable_data();  // leaf initialization / optimizer only
    bool requires_grad() const;
    bool has_grad() const;
    const std::vector<float>& grad() const;
    void zero_grad();

    float value() const;         // single-element tensors
    float at(int64_t i) const;   // flat index
    float at2(int r, int c) const;

    // Runs reverse-mode accumulation from this scalar into every reachable
    // tensor that requires grad. Repeated calls accumulate.
    void backward() const;

    std::shared_ptr<Node> node() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    std::shared_ptr<Node> node_;

    friend Tensor make_op(std::vector<int> shape, std::vector<float> data,
                          std::vector<Tensor> parents,
                          std::function<void(Tensor::Node&)> backward_fn);
};

// --- elementwise / linear op suite -----------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor divide(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float c);       // c * a
Tensor add_scalar(const Tensor& a, float c);  // a + c

Tensor matmul(const Tensor& a, const Tensor& b);  // 2-D x 2-D
Tensor transpose(const Tensor& a);                // 2-D

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor digamma(const Tensor& a);  // elementwise, entries must be > 0
Tensor lgamma(const Tensor& a);   // elementwise, entries must be > 0

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar
Tensor row_softmax(const Tensor& a);  // 1-D == one row, or per row of a 2-D

Tensor reshape(const Tensor& a, const std::vector<int>& shape);
Tensor concat_rows(const std::vector<Tensor>& parts);  // 2-D, equal widths
Tensor take_row(const Tensor& a, int row);             // -> 1 x cols
Tensor add_rowvec(const Tensor& a, const Tensor& v);   // v broadcast over rows

// Row-wise layer normalization with learned scale/shift, eps = 1e-5.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta);

// sum(a * b); shapes must match exactly.
Tensor dot(const Tensor& a, const Tensor& b);

// --- optimizer --------------------------------------------------------------

// p <- p - lr * p.grad for every parameter, then zeroes the grads.
// A parameter without an accumulated gradient is an error.
void sgd_step(const std::vector<Tensor>& params, float lr);

std::string shape_str(const std::vector<int>& shape);

}  // namespace tmsc
