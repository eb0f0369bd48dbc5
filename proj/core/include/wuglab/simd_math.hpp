#pragma once

// Vectorized float transcendentals for the hot activation loops. Polynomial
// forms with a fixed evaluation order keep results bitwise reproducible.
// The double path (used by gradient checks) stays on libm.

#include <cmath>
#include <cstring>

#include "wuglab/tensor.hpp"

namespace wuglab {

#ifdef WUGLAB_VEC8

namespace simd {

using vec8i = int __attribute__((vector_size(32)));

inline vec8f splat(float v) { return vec8f{v, v, v, v, v, v, v, v}; }

inline vec8f min8(vec8f a, vec8f b) { return a < b ? a : b; }
inline vec8f max8(vec8f a, vec8f b) { return a > b ? a : b; }

// expf, Cephes-style: range reduce by log 2, degree-5 polynomial, scale by
// 2^n through the exponent bits. Accurate to ~2 ulp on [-87, 88].
inline vec8f exp8(vec8f x) {
    const vec8f log2e = splat(1.44269504088896341f);
    const vec8f c1 = splat(0.693359375f);
    const vec8f c2 = splat(-2.12194440e-4f);
    x = min8(x, splat(88.3762626647949f));
    x = max8(x, splat(-87.3365478515625f));

    vec8f fx = x * log2e + splat(0.5f);
    vec8i emm0 = __builtin_convertvector(fx, vec8i);
    vec8f etmp = __builtin_convertvector(emm0, vec8f);
    vec8f mask = etmp > fx ? splat(1.0f) : splat(0.0f);
    vec8f fn = etmp - mask; // floor(fx)

    x -= fn * c1;
    x -= fn * c2;

    vec8f z = x * x;
    vec8f y = splat(1.9875691500e-4f);
    y = y * x + splat(1.3981999507e-3f);
    y = y * x + splat(8.3334519073e-3f);
    y = y * x + splat(4.1665795894e-2f);
    y = y * x + splat(1.6666665459e-1f);
    y = y * x + splat(5.0000001201e-1f);
    y = y * z + x + splat(1.0f);

    vec8i n = __builtin_convertvector(fn, vec8i);
    n = n + 0x7f;
    n = n << 23;
    vec8f pow2n;
    std::memcpy(&pow2n, &n, sizeof(pow2n));
    return y * pow2n;
}

// erf via the Abramowitz-Stegun rational approximation (abs error 1.5e-7).
inline vec8f erf8(vec8f x) {
    const vec8f a1 = splat(0.254829592f);
    const vec8f a2 = splat(-0.284496736f);
    const vec8f a3 = splat(1.421413741f);
    const vec8f a4 = splat(-1.453152027f);
    const vec8f a5 = splat(1.061405429f);
    const vec8f p = splat(0.3275911f);

    vec8f sign = x < splat(0.0f) ? splat(-1.0f) : splat(1.0f);
    vec8f ax = x * sign;
    vec8f t = splat(1.0f) / (splat(1.0f) + p * ax);
    vec8f poly = ((((a5 * t + a4) * t + a3) * t + a2) * t + a1) * t;
    vec8f y = splat(1.0f) - poly * exp8(splat(-1.0f) * ax * ax);
    return sign * y;
}

inline vec8f gelu8(vec8f x) {
    const vec8f inv_sqrt2 = splat(0.70710678118654752f);
    return splat(0.5f) * x * (splat(1.0f) + erf8(x * inv_sqrt2));
}

inline vec8f gelu_grad8(vec8f x) {
    const vec8f inv_sqrt2 = splat(0.70710678118654752f);
    const vec8f inv_sqrt2pi = splat(0.39894228040143268f);
    vec8f cdf = splat(0.5f) * (splat(1.0f) + erf8(x * inv_sqrt2));
    vec8f pdf = exp8(splat(-0.5f) * x * x) * inv_sqrt2pi;
    return cdf + x * pdf;
}

} // namespace simd

#endif // WUGLAB_VEC8

// out[i] = gelu(in[i])
template <class T>
void gelu_apply(T* out, const T* in, size_t n) {
    size_t i = 0;
#ifdef WUGLAB_VEC8
    if constexpr (std::is_same_v<T, float>) {
        for (; i + 8 <= n; i += 8) {
            store8(out + i, simd::gelu8(load8(in + i)));
        }
    }
#endif
    for (; i < n; ++i) {
        out[i] = T(0.5) * in[i] * (T(1) + std::erf(in[i] * T(M_SQRT1_2)));
    }
}

// dx[i] *= gelu'(pre[i])
template <class T>
void gelu_grad_apply(T* dx, const T* pre, size_t n) {
    size_t i = 0;
#ifdef WUGLAB_VEC8
    if constexpr (std::is_same_v<T, float>) {
        for (; i + 8 <= n; i += 8) {
            store8(dx + i, load8(dx + i) * simd::gelu_grad8(load8(pre + i)));
        }
    }
#endif
    for (; i < n; ++i) {
        T x = pre[i];
        T cdf = T(0.5) * (T(1) + std::erf(x * T(M_SQRT1_2)));
        T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014326779);
        dx[i] *= cdf + x * pdf;
    }
}

} // namespace wuglab
