#pragma once

#include <cassert>
#include <cstdint>
#include <cstring>
#include <type_traits>
#include <vector>

#include "wuglab/parallel.hpp"

namespace wuglab {

// Row-major dense matrix. Vectors are 1 x n.
template <class T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, T(0)) {}

    T* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const T* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
    T& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    T at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return a.size(); }
    void zero() { std::fill(a.begin(), a.end(), T(0)); }
    void reshape(int r, int c) {
        rows = r;
        cols = c;
        a.resize(static_cast<size_t>(r) * c);
    }
};

#if defined(__GNUC__) && (defined(__x86_64__) || defined(__aarch64__))
#define WUGLAB_VEC8 1
using vec8f = float __attribute__((vector_size(32)));

inline vec8f load8(const float* p) {
    vec8f v;
    std::memcpy(&v, p, sizeof(v));
    return v;
}
inline void store8(float* p, vec8f v) { std::memcpy(p, &v, sizeof(v)); }
inline float hsum8(vec8f v) {
    return ((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7]));
}
#endif

// Dot product with a fixed accumulation order, so results stay bitwise
// reproducible run to run while using SIMD lanes where available.
template <class T>
inline T dot8(const T* x, const T* y, int n) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 += x[i + 0] * y[i + 0];
        s1 += x[i + 1] * y[i + 1];
        s2 += x[i + 2] * y[i + 2];
        s3 += x[i + 3] * y[i + 3];
        s4 += x[i + 4] * y[i + 4];
        s5 += x[i + 5] * y[i + 5];
        s6 += x[i + 6] * y[i + 6];
        s7 += x[i + 7] * y[i + 7];
    }
    T tail = 0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return (((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))) + tail;
}

#ifdef WUGLAB_VEC8
template <>
inline float dot8<float>(const float* x, const float* y, int n) {
    vec8f acc0 = {0, 0, 0, 0, 0, 0, 0, 0};
    vec8f acc1 = {0, 0, 0, 0, 0, 0, 0, 0};
    int i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 += load8(x + i) * load8(y + i);
        acc1 += load8(x + i + 8) * load8(y + i + 8);
    }
    if (i + 8 <= n) {
        acc0 += load8(x + i) * load8(y + i);
        i += 8;
    }
    float s = hsum8(acc0 + acc1);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}
#endif

template <class T>
inline void axpy(T* y, T alpha, const T* x, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

namespace detail {

// c_row[j] = dot(a_row, b[j]) + bias[j]; four output columns per pass so
// the a_row loads amortize across accumulators.
template <class T>
void nt_row(T* c, const T* a, const T* b, const T* bias, int n_out, int k) {
    int j = 0;
#ifdef WUGLAB_VEC8
    if constexpr (std::is_same_v<T, float>) {
        for (; j + 4 <= n_out; j += 4) {
            const float* b0 = b + static_cast<size_t>(j) * k;
            const float* b1 = b0 + k;
            const float* b2 = b1 + k;
            const float* b3 = b2 + k;
            vec8f s0 = {0, 0, 0, 0, 0, 0, 0, 0}, s1 = s0, s2 = s0, s3 = s0;
            int kk = 0;
            for (; kk + 8 <= k; kk += 8) {
                vec8f va = load8(a + kk);
                s0 += va * load8(b0 + kk);
                s1 += va * load8(b1 + kk);
                s2 += va * load8(b2 + kk);
                s3 += va * load8(b3 + kk);
            }
            float r0 = hsum8(s0), r1 = hsum8(s1), r2 = hsum8(s2), r3 = hsum8(s3);
            for (; kk < k; ++kk) {
                r0 += a[kk] * b0[kk];
                r1 += a[kk] * b1[kk];
                r2 += a[kk] * b2[kk];
                r3 += a[kk] * b3[kk];
            }
            if (bias) {
                r0 += bias[j];
                r1 += bias[j + 1];
                r2 += bias[j + 2];
                r3 += bias[j + 3];
            }
            c[j] = r0;
            c[j + 1] = r1;
            c[j + 2] = r2;
            c[j + 3] = r3;
        }
    }
#endif
    for (; j < n_out; ++j) {
        T v = dot8(a, b + static_cast<size_t>(j) * k, k);
        c[j] = bias ? v + bias[j] : v;
    }
}

// y[0..n) += a0*x0 + a1*x1 + a2*x2 + a3*x3 (single read-modify-write pass)
template <class T>
void axpy4(T* y, T a0, const T* x0, T a1, const T* x1, T a2, const T* x2, T a3, const T* x3,
           int n) {
    int i = 0;
#ifdef WUGLAB_VEC8
    if constexpr (std::is_same_v<T, float>) {
        vec8f va0 = {a0, a0, a0, a0, a0, a0, a0, a0};
        vec8f va1 = {a1, a1, a1, a1, a1, a1, a1, a1};
        vec8f va2 = {a2, a2, a2, a2, a2, a2, a2, a2};
        vec8f va3 = {a3, a3, a3, a3, a3, a3, a3, a3};
        for (; i + 8 <= n; i += 8) {
            vec8f vy = load8(y + i);
            vy += va0 * load8(x0 + i);
            vy += va1 * load8(x1 + i);
            vy += va2 * load8(x2 + i);
            vy += va3 * load8(x3 + i);
            store8(y + i, vy);
        }
    }
#endif
    for (; i < n; ++i) y[i] += a0 * x0[i] + a1 * x1[i] + a2 * x2[i] + a3 * x3[i];
}

} // namespace detail

// C[M,N] = A[M,K] * B[N,K]^T (+ bias[N] if given). Linear-layer forward
// with weights stored [out, in].
template <class T>
void matmul_nt(Mat<T>& c, const Mat<T>& a, const Mat<T>& b, const Mat<T>* bias = nullptr) {
    assert(a.cols == b.cols);
    c.reshape(a.rows, b.rows);
    const int K = a.cols;
    const T* bias_ptr = bias ? bias->a.data() : nullptr;
    parallel_for(a.rows, [&](int r0, int r1) {
        for (int i = r0; i < r1; ++i) {
            detail::nt_row(c.row(i), a.row(i), b.a.data(), bias_ptr, b.rows, K);
        }
    });
}

// C[M,N] += A[M,K] * B[K,N]. Backward of a linear layer wrt its input
// (A = dY, B = W with rows [out, in] read as K x N).
template <class T>
void matmul_nn_acc(Mat<T>& c, const Mat<T>& a, const Mat<T>& b) {
    assert(a.cols == b.rows);
    assert(c.rows == a.rows && c.cols == b.cols);
    parallel_for(a.rows, [&](int r0, int r1) {
        for (int i = r0; i < r1; ++i) {
            const T* ai = a.row(i);
            T* ci = c.row(i);
            int k = 0;
            for (; k + 4 <= a.cols; k += 4) {
                detail::axpy4(ci, ai[k], b.row(k), ai[k + 1], b.row(k + 1), ai[k + 2],
                              b.row(k + 2), ai[k + 3], b.row(k + 3), b.cols);
            }
            for (; k < a.cols; ++k) {
                if (ai[k] != T(0)) axpy(ci, ai[k], b.row(k), b.cols);
            }
        }
    });
}

// C[K,N] += A[M,K]^T * B[M,N]. Weight-gradient accumulation
// (A = dY with K = out features, B = X with N = in features).
template <class T>
void matmul_tn_acc(Mat<T>& c, const Mat<T>& a, const Mat<T>& b) {
    assert(a.rows == b.rows);
    assert(c.rows == a.cols && c.cols == b.cols);
    parallel_for(a.cols, [&](int k0, int k1) {
        int m = 0;
        for (; m + 4 <= a.rows; m += 4) {
            const T* a0 = a.row(m);
            const T* a1 = a.row(m + 1);
            const T* a2 = a.row(m + 2);
            const T* a3 = a.row(m + 3);
            const T* b0 = b.row(m);
            const T* b1 = b.row(m + 1);
            const T* b2 = b.row(m + 2);
            const T* b3 = b.row(m + 3);
            for (int k = k0; k < k1; ++k) {
                detail::axpy4(c.row(k), a0[k], b0, a1[k], b1, a2[k], b2, a3[k], b3, b.cols);
            }
        }
        for (; m < a.rows; ++m) {
            const T* am = a.row(m);
            const T* bm = b.row(m);
            for (int k = k0; k < k1; ++k) {
                if (am[k] != T(0)) axpy(c.row(k), am[k], bm, b.cols);
            }
        }
    });
}

// column sums of A added into out[cols]
template <class T>
void colsum_acc(Mat<T>& out, const Mat<T>& a) {
    assert(out.cols == a.cols && out.rows == 1);
    for (int m = 0; m < a.rows; ++m) axpy(out.row(0), T(1), a.row(m), a.cols);
}

} // namespace wuglab
