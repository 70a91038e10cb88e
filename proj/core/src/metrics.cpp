#include "tmsc/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace tmsc {

int64_t ConfusionMatrix::total() const {
    int64_t n = 0;
    for (int64_t c : counts) n += c;
    return n;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    const int k = cm.classes;
    const int64_t n = cm.total();
    if (k <= 0 || n <= 0) throw std::invalid_argument("compute_metrics: empty confusion matrix");
    for (int64_t c : cm.counts) {
        if (c < 0) throw std::invalid_argument("compute_metrics: negative count");
    }

    std::vector<int64_t> row_sum(k, 0), col_sum(k, 0);
    int64_t diag = 0;
    for (int i = 0; i < k; ++i) {
        diag += cm.at(i, i);
        for (int j = 0; j < k; ++j) {
            row_sum[i] += cm.at(i, j);
            col_sum[j] += cm.at(i, j);
        }
    }

    MetricsReport r;
    r.acc = static_cast<double>(diag) / n;

    r.per_class_f1.resize(k, 0.0);
    double f1_sum = 0.0;
    for (int i = 0; i < k; ++i) {
        const double tp = static_cast<double>(cm.at(i, i));
        const double precision = col_sum[i] > 0 ? tp / col_sum[i] : 0.0;
        const double recall = row_sum[i] > 0 ? tp / row_sum[i] : 0.0;
        const double f1 = precision + recall > 0.0
                              ? 2.0 * precision * recall / (precision + recall)
                              : 0.0;
        r.per_class_f1[i] = f1;
        f1_sum += f1;
    }
    r.macro_f1 = f1_sum / k;

    // chance agreement from the marginal products
    double pe = 0.0;
    for (int i = 0; i < k; ++i) {
        pe += static_cast<double>(row_sum[i]) * col_sum[i];
    }
    pe /= static_cast<double>(n) * n;
    r.kappa = pe < 1.0 ? (r.acc - pe) / (1.0 - pe) : 0.0;

    // multiclass MCC, covariance form
    double num = static_cast<double>(diag) * n;
    double sum_rc = 0.0, sum_rr = 0.0, sum_cc = 0.0;
    for (int i = 0; i < k; ++i) {
        num -= static_cast<double>(row_sum[i]) * col_sum[i];
        sum_rc += static_cast<double>(row_sum[i]) * col_sum[i];
        sum_rr += static_cast<double>(row_sum[i]) * row_sum[i];
        sum_cc += static_cast<double>(col_sum[i]) * col_sum[i];
    }
    const double dn = static_cast<double>(n);
    const double den = std::sqrt((dn * dn - sum_cc) * (dn * dn - sum_rr));
    r.mcc = den > 0.0 ? num / den : 0.0;
    return r;
}

std::string MetricsReport::tsv_line() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%.6f\t%.6f", acc, macro_f1, kappa, mcc);
    return buf;
}

std::string MetricsReport::pretty() const {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "acc      %.4f\nmacro_f1 %.4f\nkappa    %.4f\nmcc      %.4f\n",
                  acc, macro_f1, kappa, mcc);
    out = buf;
    for (size_t i = 0; i < per_class_f1.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "f1[%zu]    %.4f\n", i, per_class_f1[i]);
        out += buf;
    }
    return out;
}

}  // namespace tmsc
