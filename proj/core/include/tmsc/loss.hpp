#pragma once

#include <vector>

#include "tmsc/tensor.hpp"

namespace tmsc {

// Per-term values of the total training objective, recorded for logging.
struct LossBreakdown {
    double ace_fused = 0.0, kl_fused = 0.0;
    double ace_v1 = 0.0, kl_v1 = 0.0;
    double ace_v2 = 0.0, kl_v2 = 0.0;
    double lambda = 0.0;
    double total = 0.0;
};

// Adjusted cross-entropy psi(S) - psi(alpha_c) for the true class c.
// y must be one-hot; alpha entries must be >= 1.
Tensor ace_loss(const Tensor& alpha, const std::vector<float>& one_hot);

// KL[Dir(alpha_tilde) || Dir(1)] in closed form; entries must be >= 1.
Tensor kl_uniform(const Tensor& alpha_tilde);

// alpha with the true-class coordinate pinned to 1: y + (1 - y) * alpha.
Tensor masked_alpha(const Tensor& alpha, const std::vector<float>& one_hot);

// L_v = ace + lambda * KL(alpha_tilde). When ace_on_alpha_tilde is set, the
// cross-entropy term is evaluated on alpha_tilde as well (the paper's literal
// notation) instead of on alpha.
Tensor view_loss(const Tensor& alpha, const std::vector<float>& one_hot, double lambda,
                 bool ace_on_alpha_tilde = false);

struct TotalLoss {
    Tensor loss;
    LossBreakdown breakdown;
};

// Sum of the view losses over {fused, view 1, view 2}, shared lambda.
TotalLoss total_loss(const Tensor& alpha_fused, const Tensor& alpha_v1, const Tensor& alpha_v2,
                     const std::vector<float>& one_hot, double lambda,
                     bool ace_on_alpha_tilde = false);

// Annealing weight min(1, epoch / 10), epochs counted from 0.
double lambda_schedule(int epoch);

}  // namespace tmsc
