#pragma once

#include <cmath>
#include <cstdint>

#include "wuglab/model.hpp"

namespace wuglab {

struct OptimizerConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0; // decoupled
    int64_t warmup_steps = 24000;
    int batch = 16;
    int grad_accum = 4;
    int epochs = 18; // realized via the pre-concatenated stream

    void validate() const {
        if (warmup_steps < 0) throw Error("warmup_steps must be >= 0");
        if (batch < 1 || grad_accum < 1) throw Error("batch and grad_accum must be >= 1");
    }
};

// Linear warmup to lr, then linear decay to zero at total_steps. When the
// run ends before warmup completes (tiny streams), the warmup ramp applies
// throughout.
inline double lr_at(int64_t step, int64_t total_steps, int64_t warmup_steps, double lr) {
    double warm = warmup_steps > 0 ? static_cast<double>(step) / static_cast<double>(warmup_steps)
                                   : std::numeric_limits<double>::infinity();
    double decay = total_steps > warmup_steps
                       ? std::max(0.0, static_cast<double>(total_steps - step) /
                                           static_cast<double>(total_steps - warmup_steps))
                       : std::numeric_limits<double>::infinity();
    double factor = std::min(warm, decay);
    if (!std::isfinite(factor)) factor = 1.0;
    return lr * factor;
}

template <class T>
struct AdamState {
    ModelParams<T> m, v;
    int64_t step = 0;

    void build(const ModelConfig& cfg) {
        m.build(cfg);
        v.build(cfg);
        m.zero_all();
        v.zero_all();
    }
};

// One decoupled-weight-decay Adam update at learning rate lr_t; `state.step`
// must already be advanced to the current (1-based) step for bias correction.
template <class T>
void adamw_step(ModelParams<T>& params, ModelParams<T>& grads, AdamState<T>& state,
                const OptimizerConfig& oc, double lr_t) {
    const T b1 = static_cast<T>(oc.beta1);
    const T b2 = static_cast<T>(oc.beta2);
    const T eps = static_cast<T>(oc.adam_eps);
    const T wd = static_cast<T>(oc.weight_decay);
    const T lr = static_cast<T>(lr_t);
    const T bc1 = T(1) - static_cast<T>(std::pow(oc.beta1, static_cast<double>(state.step)));
    const T bc2 = T(1) - static_cast<T>(std::pow(oc.beta2, static_cast<double>(state.step)));

    auto pd = params.directory();
    auto gd = grads.directory();
    auto md = state.m.directory();
    auto vd = state.v.directory();
    for (size_t ti = 0; ti < pd.size(); ++ti) {
        T* p = pd[ti].tensor->a.data();
        T* g = gd[ti].tensor->a.data();
        T* m = md[ti].tensor->a.data();
        T* v = vd[ti].tensor->a.data();
        const int n = static_cast<int>(pd[ti].tensor->size());
        parallel_for(n, [&](int i0, int i1) {
            for (int i = i0; i < i1; ++i) {
                m[i] = b1 * m[i] + (T(1) - b1) * g[i];
                v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
                T mhat = m[i] / bc1;
                T vhat = v[i] / bc2;
                p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
            }
        });
    }
}

} // namespace wuglab
