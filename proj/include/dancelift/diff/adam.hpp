#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace dancelift::diff {

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;

    AdamState() = default;
    explicit AdamState(double learning_rate) : lr(learning_rate) {}
};

/// Bias-corrected Adam update of a flat parameter vector. The moment buffers
/// are sized on the first call and must keep that size afterwards.
inline void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads) {
    require(params.size() == grads.size(), "adam_step: parameter/gradient size mismatch");
    if (s.m.empty()) {
        s.m.assign(params.size(), 0.0);
        s.v.assign(params.size(), 0.0);
    }
    require(s.m.size() == params.size(), "adam_step: parameter count changed between steps");
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
        s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
        const double mh = s.m[i] / c1;
        const double vh = s.v[i] / c2;
        params[i] -= s.lr * mh / (std::sqrt(vh) + s.eps);
    }
}

/// Same update over a list of parameters, treated as one concatenated vector.
inline void adam_step(AdamState& s, std::span<Parameter* const> params) {
    std::size_t total = 0;
    for (const Parameter* p : params) {
        require(p->grad.size() == p->value.size(),
                "adam_step: gradient of '" + p->name + "' has the wrong size");
        total += p->value.size();
    }
    std::vector<double> x, g;
    x.reserve(total);
    g.reserve(total);
    for (const Parameter* p : params) {
        x.insert(x.end(), p->value.values().begin(), p->value.values().end());
        g.insert(g.end(), p->grad.values().begin(), p->grad.values().end());
    }
    adam_step(s, std::span<double>(x), std::span<const double>(g));
    std::size_t off = 0;
    for (Parameter* p : params) {
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(off), p->value.size(), p->value.values().begin());
        off += p->value.size();
    }
}

} // namespace dancelift::diff
