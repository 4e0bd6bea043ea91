#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "tensor.hpp"

namespace dancelift::diff {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero components
/// from dominating through round-off alone.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares `analytic` (gradient of loss() w.r.t. `values`) with central
/// differences. The step is relative for entries larger than 1 in magnitude.
/// `values` is perturbed in place and restored.
inline GradCheckResult check_gradient(const std::function<double()>& loss, std::span<double> values,
                                      std::span<const double> analytic, double step = 1e-5,
                                      double floor = 1e-6) {
    GradCheckResult r;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x0 = values[i];
        const double h = step * std::max(1.0, std::abs(x0));
        values[i] = x0 + h;
        const double lp = loss();
        values[i] = x0 - h;
        const double lm = loss();
        values[i] = x0;
        const double num = (lp - lm) / (2.0 * h);
        const double err = relative_error(analytic[i], num, floor);
        if (err > r.max_relative_error) {
            r.max_relative_error = err;
            r.worst_index = i;
        }
        ++r.checked;
    }
    return r;
}

} // namespace dancelift::diff
