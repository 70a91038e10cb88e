#include "tmsc/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tmsc/special.hpp"

namespace tmsc {

namespace {

void require_one_hot(const std::vector<float>& y) {
    int ones = 0;
    for (float v : y) {
        if (v == 1.0f) ++ones;
        else if (v != 0.0f) {
            throw std::invalid_argument("loss: label vector is not one-hot (entry " +
                                        std::to_string(v) + ")");
        }
    }
    if (ones != 1) {
        throw std::invalid_argument("loss: label vector has " + std::to_string(ones) +
                                    " ones, expected exactly 1");
    }
}

void require_alpha(const Tensor& alpha, const char* fn) {
    for (float a : alpha.data()) {
        if (!(a >= 1.0f)) {
            throw std::invalid_argument(std::string(fn) + ": alpha entry " + std::to_string(a) +
                                        " below 1");
        }
    }
}

Tensor one_hot_tensor(const std::vector<float>& y, const std::vector<int>& shape) {
    return Tensor::from_data(shape, y);
}

}  // namespace

Tensor ace_loss(const Tensor& alpha, const std::vector<float>& one_hot) {
    require_alpha(alpha, "ace_loss");
    if (static_cast<int64_t>(one_hot.size()) != alpha.numel()) {
        throw std::invalid_argument("ace_loss: label size " + std::to_string(one_hot.size()) +
                                    " vs alpha " + shape_str(alpha.shape()));
    }
    require_one_hot(one_hot);
    Tensor y = one_hot_tensor(one_hot, alpha.shape());
    Tensor psi_strength = digamma(sum(alpha));
    // sum_i y_i (psi(S) - psi(alpha_i))
    return sum(mul(y, sub(psi_strength, digamma(alpha))));
}

Tensor kl_uniform(const Tensor& alpha_tilde) {
    require_alpha(alpha_tilde, "kl_uniform");
    const auto k = static_cast<float>(alpha_tilde.numel());
    Tensor strength = sum(alpha_tilde);
    Tensor log_beta = sub(lgamma(strength), sum(lgamma(alpha_tilde)));
    const float lgamma_k = static_cast<float>(lgamma_pos(k));
    Tensor digamma_gap = sub(digamma(alpha_tilde), digamma(strength));
    Tensor weighted = sum(mul(add_scalar(alpha_tilde, -1.0f), digamma_gap));
    return add(sub(log_beta, Tensor::scalar(lgamma_k)), weighted);
}

Tensor masked_alpha(const Tensor& alpha, const std::vector<float>& one_hot) {
    require_one_hot(one_hot);
    Tensor y = one_hot_tensor(one_hot, alpha.shape());
    // y + (1 - y) * alpha keeps the ground-truth coordinate at exactly 1
    return add(y, mul(sub(Tensor::scalar(1.0f), y), alpha));
}

Tensor view_loss(const Tensor& alpha, const std::vector<float>& one_hot, double lambda,
                 bool ace_on_alpha_tilde) {
    if (lambda < 0.0) throw std::invalid_argument("view_loss: lambda must be >= 0");
    Tensor alpha_tilde = masked_alpha(alpha, one_hot);
    Tensor ace = ace_loss(ace_on_alpha_tilde ? alpha_tilde : alpha, one_hot);
    if (lambda == 0.0) return ace;
    return add(ace, scale(kl_uniform(alpha_tilde), static_cast<float>(lambda)));
}

TotalLoss total_loss(const Tensor& alpha_fused, const Tensor& alpha_v1, const Tensor& alpha_v2,
                     const std::vector<float>& one_hot, double lambda,
                     bool ace_on_alpha_tilde) {
    if (alpha_fused.numel() != alpha_v1.numel() || alpha_v1.numel() != alpha_v2.numel()) {
        throw std::invalid_argument("total_loss: class counts differ across views: " +
                                    shape_str(alpha_fused.shape()) + ", " +
                                    shape_str(alpha_v1.shape()) + ", " +
                                    shape_str(alpha_v2.shape()));
    }

    TotalLoss out;
    out.breakdown.lambda = lambda;
    Tensor pieces[3];
    const Tensor* alphas[3] = {&alpha_fused, &alpha_v1, &alpha_v2};
    double* aces[3] = {&out.breakdown.ace_fused, &out.breakdown.ace_v1, &out.breakdown.ace_v2};
    double* kls[3] = {&out.breakdown.kl_fused, &out.breakdown.kl_v1, &out.breakdown.kl_v2};
    for (int i = 0; i < 3; ++i) {
        Tensor alpha_tilde = masked_alpha(*alphas[i], one_hot);
        Tensor ace = ace_loss(ace_on_alpha_tilde ? alpha_tilde : *alphas[i], one_hot);
        Tensor kl = kl_uniform(alpha_tilde);
        *aces[i] = ace.value();
        *kls[i] = kl.value();
        pieces[i] = add(ace, scale(kl, static_cast<float>(lambda)));
    }
    out.loss = add(add(pieces[0], pieces[1]), pieces[2]);
    out.breakdown.total = out.loss.value();
    return out;
}

double lambda_schedule(int epoch) {
    if (epoch < 0) throw std::invalid_argument("lambda_schedule: negative epoch");
    return std::min(1.0, static_cast<double>(epoch) / 10.0);
}

}  // namespace tmsc
