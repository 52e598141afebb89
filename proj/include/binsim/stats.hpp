#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

// Small statistical checks used by the coupling experiments.

namespace binsim {

struct KsResult {
    double d_stat = 0.0;    // sup_z (F_later(z) - F_earlier(z))
    double critical = 0.0;  // one-sided two-sample Smirnov threshold
    double alpha = 0.0;
    bool reject = false;
};

// Tests H0: `earlier` is stochastically dominated by `later`
// (Pr[earlier >= z] <= Pr[later >= z] for all z, i.e. F_earlier >= F_later).
// The statistic is the largest violation of that CDF ordering; H0 is
// rejected when it exceeds sqrt(-ln(alpha) * (n1+n2) / (2*n1*n2)).
inline KsResult ks_dominated_by(const std::vector<double>& earlier,
                                const std::vector<double>& later,
                                double alpha = 0.01) {
    if (earlier.empty() || later.empty())
        throw std::invalid_argument("ks_dominated_by: empty sample");
    if (alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("ks_dominated_by: alpha must be in (0,1)");
    std::vector<double> a = earlier;
    std::vector<double> b = later;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t ia = 0;
    std::size_t ib = 0;
    // Evaluate F_b - F_a just after each sample point of the merged order.
    while (ia < a.size() || ib < b.size()) {
        double z;
        if (ib == b.size() || (ia < a.size() && a[ia] <= b[ib]))
            z = a[ia];
        else
            z = b[ib];
        while (ia < a.size() && a[ia] <= z) ++ia;
        while (ib < b.size() && b[ib] <= z) ++ib;
        d = std::max(d, static_cast<double>(ib) / nb - static_cast<double>(ia) / na);
    }
    KsResult result;
    result.d_stat = d;
    result.alpha = alpha;
    result.critical = std::sqrt(-std::log(alpha) * (na + nb) / (2.0 * na * nb));
    result.reject = d > result.critical;
    return result;
}

}  // namespace binsim
