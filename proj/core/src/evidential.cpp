#include "tmsc/evidential.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tmsc/rng.hpp"

namespace tmsc {

namespace {

constexpr double kConflictGuard = 1.0 - 1e-9;

void require_same_classes(const Opinion& a, const Opinion& b) {
    if (a.belief.size() != b.belief.size()) {
        throw std::invalid_argument("ds_combine: class counts differ, " +
                                    std::to_string(a.belief.size()) + " vs " +
                                    std::to_string(b.belief.size()));
    }
}

}  // namespace

EvidenceHeadParams init_evidence_head(int classes, int embed_dim, uint64_t seed) {
    if (classes <= 0 || embed_dim <= 0) {
        throw std::invalid_argument("evidence_head: dimensions must be positive");
    }
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    std::vector<float> w(static_cast<size_t>(classes) * embed_dim);
    for (auto& x : w) x = static_cast<float>(rng.truncated_normal() * scale);
    EvidenceHeadParams p;
    p.weight = Tensor::from_data({classes, embed_dim}, std::move(w), true);
    p.bias = Tensor::full({1, classes}, 0.0f, true);
    return p;
}

Tensor evidence_head(const Tensor& z, const EvidenceHeadParams& params) {
    return softplus(add(matmul(z, transpose(params.weight)), params.bias));
}

// --- value-level --------------------------------------------------------------

EvidentialState opinion_from_evidence(const std::vector<double>& evidence) {
    if (evidence.empty()) throw std::invalid_argument("opinion_from_evidence: empty evidence");
    const auto k = static_cast<double>(evidence.size());
    EvidentialState state;
    state.dirichlet.alpha.reserve(evidence.size());
    double strength = 0.0;
    for (double e : evidence) {
        if (e < 0.0) {
            throw std::invalid_argument("opinion_from_evidence: negative evidence " +
                                        std::to_string(e));
        }
        state.dirichlet.alpha.push_back(e + 1.0);
        strength += e + 1.0;
    }
    state.dirichlet.strength = strength;
    state.opinion.belief.reserve(evidence.size());
    for (double e : evidence) state.opinion.belief.push_back(e / strength);
    state.opinion.uncertainty = k / strength;
    return state;
}

DirichletParams alpha_from_opinion(const Opinion& opinion) {
    if (opinion.belief.empty()) throw std::invalid_argument("alpha_from_opinion: empty opinion");
    if (!(opinion.uncertainty > 0.0)) {
        throw std::invalid_argument("alpha_from_opinion: uncertainty must be > 0, got " +
                                    std::to_string(opinion.uncertainty));
    }
    const double strength = static_cast<double>(opinion.classes()) / opinion.uncertainty;
    DirichletParams d;
    d.alpha.reserve(opinion.belief.size());
    for (double b : opinion.belief) d.alpha.push_back(b * strength + 1.0);
    d.strength = 0.0;
    for (double a : d.alpha) d.strength += a;
    return d;
}

Opinion ds_combine(const Opinion& a, const Opinion& b) {
    require_same_classes(a, b);
    const size_t k = a.belief.size();
    double sum_a = 0.0, sum_b = 0.0, sum_ab = 0.0;
    for (size_t i = 0; i < k; ++i) {
        sum_a += a.belief[i];
        sum_b += b.belief[i];
        sum_ab += a.belief[i] * b.belief[i];
    }
    const double conflict = sum_a * sum_b - sum_ab;  // sum_{i != j} b_i^1 b_j^2
    if (conflict >= kConflictGuard) {
        throw std::runtime_error("ds_combine: total conflict, C = " + std::to_string(conflict));
    }
    const double norm = 1.0 / (1.0 - conflict);
    Opinion out;
    out.belief.resize(k);
    for (size_t i = 0; i < k; ++i) {
        out.belief[i] = norm * (a.belief[i] * b.belief[i] + a.belief[i] * b.uncertainty +
                                b.belief[i] * a.uncertainty);
    }
    out.uncertainty = norm * a.uncertainty * b.uncertainty;
    return out;
}

Opinion avg_combine(const Opinion& a, const Opinion& b) {
    require_same_classes(a, b);
    Opinion out;
    out.belief.resize(a.belief.size());
    double mass = 0.0;
    for (size_t i = 0; i < a.belief.size(); ++i) {
        out.belief[i] = 0.5 * (a.belief[i] + b.belief[i]);
        mass += out.belief[i];
    }
    out.uncertainty = 0.5 * (a.uncertainty + b.uncertainty);
    mass += out.uncertainty;
    for (auto& v : out.belief) v /= mass;
    out.uncertainty /= mass;
    return out;
}

// --- graph-level ---------------------------------------------------------------

OpinionT opinion_from_evidence_t(const Tensor& evidence) {
    const auto k = static_cast<float>(evidence.numel());
    Tensor alpha = add_scalar(evidence, 1.0f);
    Tensor strength = sum(alpha);
    OpinionT out;
    out.belief = divide(evidence, strength);
    out.uncertainty = divide(Tensor::scalar(k), strength);
    return out;
}

Tensor alpha_from_evidence_t(const Tensor& evidence) { return add_scalar(evidence, 1.0f); }

Tensor alpha_from_opinion_t(const OpinionT& opinion) {
    const auto k = static_cast<float>(opinion.belief.numel());
    Tensor strength = divide(Tensor::scalar(k), opinion.uncertainty);
    return add_scalar(mul(opinion.belief, strength), 1.0f);
}

OpinionT ds_combine_t(const OpinionT& a, const OpinionT& b) {
    if (a.belief.shape() != b.belief.shape()) {
        throw std::invalid_argument("ds_combine: belief shapes differ, " +
                                    shape_str(a.belief.shape()) + " vs " +
                                    shape_str(b.belief.shape()));
    }
    Tensor conflict = sub(mul(sum(a.belief), sum(b.belief)), sum(mul(a.belief, b.belief)));
    if (conflict.value() >= kConflictGuard) {
        throw std::runtime_error("ds_combine: total conflict, C = " +
                                 std::to_string(conflict.value()));
    }
    Tensor norm = sub(Tensor::scalar(1.0f), conflict);
    OpinionT out;
    Tensor joint = add(mul(a.belief, b.belief),
                       add(mul(a.belief, b.uncertainty), mul(b.belief, a.uncertainty)));
    out.belief = divide(joint, norm);
    out.uncertainty = divide(mul(a.uncertainty, b.uncertainty), norm);
    return out;
}

OpinionT avg_combine_t(const OpinionT& a, const OpinionT& b) {
    if (a.belief.shape() != b.belief.shape()) {
        throw std::invalid_argument("avg_combine: belief shapes differ, " +
                                    shape_str(a.belief.shape()) + " vs " +
                                    shape_str(b.belief.shape()));
    }
    Tensor belief = scale(add(a.belief, b.belief), 0.5f);
    Tensor uncertainty = scale(add(a.uncertainty, b.uncertainty), 0.5f);
    Tensor mass = add(sum(belief), uncertainty);
    OpinionT out;
    out.belief = divide(belief, mass);
    out.uncertainty = divide(uncertainty, mass);
    return out;
}

Opinion opinion_values(const OpinionT& op) {
    Opinion out;
    out.belief.assign(op.belief.data().begin(), op.belief.data().end());
    out.uncertainty = op.uncertainty.value();
    return out;
}

}  // namespace tmsc
