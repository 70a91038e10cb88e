#pragma once

#include <cstdint>
#include <vector>

#include "tmsc/tensor.hpp"

namespace tmsc {

// Dirichlet parameters alpha_k = e_k + 1 with strength S = sum(alpha).
struct DirichletParams {
    std::vector<double> alpha;
    double strength = 0.0;
};

// Subjective-logic mass: per-class beliefs plus an explicit uncertainty,
// sum(b) + u == 1.
struct Opinion {
    std::vector<double> belief;
    double uncertainty = 0.0;

    int classes() const { return static_cast<int>(belief.size()); }
};

struct EvidenceHeadParams {
    Tensor weight;  // K x d
    Tensor bias;    // 1 x K

    std::vector<Tensor> parameters() const { return {weight, bias}; }
};

EvidenceHeadParams init_evidence_head(int classes, int embed_dim, uint64_t seed);

// e = softplus(z W^T + b); strictly positive.
Tensor evidence_head(const Tensor& z, const EvidenceHeadParams& params);

// --- value-level opinion algebra (inference and reporting) -------------------

struct EvidentialState {
    DirichletParams dirichlet;
    Opinion opinion;
};

// alpha = e + 1, b = e / S, u = K / S.
EvidentialState opinion_from_evidence(const std::vector<double>& evidence);

// Inverse map: S = K / u, e = b * S, alpha = e + 1. Requires u > 0.
DirichletParams alpha_from_opinion(const Opinion& opinion);

// Reduced Dempster-Shafer combination of two opinions over the same classes.
// Rejects (near-)total conflict, where the normalizer 1 - C vanishes.
Opinion ds_combine(const Opinion& a, const Opinion& b);

// Decision-level averaging baseline: mean of (b, u), renormalized.
Opinion avg_combine(const Opinion& a, const Opinion& b);

// --- graph-level path (training) ---------------------------------------------

// Belief/uncertainty tensors carrying gradients: belief is 1 x K, uncertainty
// a scalar.
struct OpinionT {
    Tensor belief;
    Tensor uncertainty;
};

OpinionT opinion_from_evidence_t(const Tensor& evidence);
Tensor alpha_from_evidence_t(const Tensor& evidence);  // e + 1
Tensor alpha_from_opinion_t(const OpinionT& opinion);  // b * (K / u) + 1
OpinionT ds_combine_t(const OpinionT& a, const OpinionT& b);
OpinionT avg_combine_t(const OpinionT& a, const OpinionT& b);

Opinion opinion_values(const OpinionT& op);

}  // namespace tmsc
