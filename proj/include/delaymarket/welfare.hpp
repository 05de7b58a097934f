#pragma once

#include "delaymarket/common.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace delaymarket {

// Inequality indices over strictly positive outcome vectors and the social
// welfare functions built from them: SWF = exp(-index) * mean.

inline double outcome_mean(const std::vector<double>& y) {
    if (y.empty()) throw std::invalid_argument("outcome vector is empty");
    return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

// Generalized entropy index with parameter kappa outside {0, 1}:
//   GE_k = 1/(n k (k-1)) * sum[(y_i / mean)^k - 1]
// expm1 keeps precision for kappa near 0, where GE converges to Theil-L.
inline double ge_index(const std::vector<double>& y, double kappa) {
    if (kappa == 0.0 || kappa == 1.0)
        throw std::invalid_argument("ge_index: kappa in {0,1}; use theil_l for the kappa->0 limit");
    const double mean = outcome_mean(y);
    double sum = 0.0;
    for (double v : y) {
        if (v <= 0.0) throw std::domain_error("ge_index: outcomes must be strictly positive");
        sum += std::expm1(kappa * std::log(v / mean));
    }
    const double n = static_cast<double>(y.size());
    return sum / (n * kappa * (kappa - 1.0));
}

// Theil-L index: -1/n * sum ln(y_i / mean)
inline double theil_l(const std::vector<double>& y) {
    const double mean = outcome_mean(y);
    double sum = 0.0;
    for (double v : y) {
        if (v <= 0.0) throw std::domain_error("theil_l: outcomes must be strictly positive");
        sum += std::log(v / mean);
    }
    return -sum / static_cast<double>(y.size());
}

struct WelfareReport {
    double mean = 0.0;
    double ge = 0.0;
    double theil = 0.0;
    double equality_ge = 1.0;    // exp(-ge)
    double equality_theil = 1.0; // exp(-theil)
    double swf_ge = 0.0;         // equality_ge * mean
    double swf_theil = 0.0;      // equality_theil * mean
    double applied_shift = 0.0;  // affine shift applied by sanitization, 0 if none
};

inline WelfareReport swf(const std::vector<double>& y, double kappa, double applied_shift = 0.0) {
    WelfareReport r;
    r.mean = outcome_mean(y);
    r.ge = ge_index(y, kappa);
    r.theil = theil_l(y);
    r.equality_ge = std::exp(-r.ge);
    r.equality_theil = std::exp(-r.theil);
    r.swf_ge = r.equality_ge * r.mean;
    r.swf_theil = r.equality_theil * r.mean;
    r.applied_shift = applied_shift;
    return r;
}

struct SanitizedOutcomes {
    std::vector<double> values;
    double applied_shift = 0.0;
};

// Profits can be zero or negative while the indices need strict positivity.
// If any value is <= 0, shift the whole vector up by -min plus a margin of
// eps_fraction * mean(|y|), falling back to eps_fraction * unit_floor when
// every value is exactly zero.
inline SanitizedOutcomes sanitize_outcomes(const std::vector<double>& y, double eps_fraction,
                                           double unit_floor = 1.0) {
    if (y.empty()) throw std::invalid_argument("sanitize_outcomes: empty vector");
    double min_v = y[0];
    double abs_sum = 0.0;
    for (double v : y) {
        min_v = std::min(min_v, v);
        abs_sum += std::fabs(v);
    }
    if (min_v > 0.0) return SanitizedOutcomes{y, 0.0};
    double margin = eps_fraction * (abs_sum / static_cast<double>(y.size()));
    if (margin == 0.0) margin = eps_fraction * unit_floor;
    const double shift = -min_v + margin;
    SanitizedOutcomes out;
    out.applied_shift = shift;
    out.values.reserve(y.size());
    for (double v : y) out.values.push_back(v + shift);
    return out;
}

} // namespace delaymarket
