#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tmsc {

// K x K counts, rows = true class, columns = predicted class.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<int64_t> counts;

    explicit ConfusionMatrix(int k = 0)
        : classes(k), counts(static_cast<size_t>(k) * k, 0) {}

    int64_t& at(int truth, int predicted) {
        return counts[static_cast<size_t>(truth) * classes + predicted];
    }
    int64_t at(int truth, int predicted) const {
        return counts[static_cast<size_t>(truth) * classes + predicted];
    }
    int64_t total() const;
};

struct MetricsReport {
    double acc = 0.0;
    double macro_f1 = 0.0;
    double kappa = 0.0;
    double mcc = 0.0;
    std::vector<double> per_class_f1;

    // One-line tab-separated record: acc, macro_f1, kappa, mcc.
    std::string tsv_line() const;
    std::string pretty() const;
};

// Accuracy, macro-F1, Cohen's kappa and the multiclass Matthews correlation
// (covariance form). Degenerate denominators evaluate to 0.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

}  // namespace tmsc
