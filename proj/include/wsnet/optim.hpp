#pragma once

#include "wsnet/network.hpp"
#include "wsnet/tensor.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace wsnet {

// Adam with bias correction; one state slot per parameter block.
struct AdamState {
    std::vector<std::vector<double>> m, v;
    std::int64_t step = 0;

    void init(const std::vector<ParamRef>& blocks) {
        m.clear();
        v.clear();
        for (const ParamRef& b : blocks) {
            m.emplace_back(b.values->size(), 0.0);
            v.emplace_back(b.values->size(), 0.0);
        }
        step = 0;
    }
};

inline void adam_step(std::vector<ParamRef>& blocks, AdamState& state,
                      const TrainHyper& hyper) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
        ParamRef& b = blocks[bi];
        if (!b.grad) continue;  // running stats are not optimized
        std::vector<double>& m = state.m[bi];
        std::vector<double>& v = state.v[bi];
        for (size_t i = 0; i < b.values->size(); ++i) {
            const double g = (*b.grad)[i];
            if (!std::isfinite(g))
                throw runtime_failure("adam: non-finite gradient in block '" + b.name + "'");
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            (*b.values)[i] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
        }
    }
}

} // namespace wsnet
