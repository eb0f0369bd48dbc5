#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "wuglab/errors.hpp"
#include "wuglab/rng.hpp"
#include "wuglab/simd_math.hpp"
#include "wuglab/tensor.hpp"

namespace wuglab {

// Compact encoder-only masked LM. Post-LN transformer blocks, learned
// absolute positions, GELU feed-forward, LM head tied to the token
// embedding. Templated on the scalar so the same code runs in 32-bit for
// training and 64-bit for finite-difference gradient checks.
struct ModelConfig {
    int layers = 8;
    int heads = 8;
    int hidden = 512;
    double dropout = 0.1;
    double layer_norm_eps = 1e-12;
    double init_std = 0.02;
    int max_seq_len = 128;
    int vocab_size = 9600;

    int ffn_dim() const { return 4 * hidden; }
    int head_dim() const { return hidden / heads; }

    void validate() const {
        if (hidden % heads != 0) throw Error("hidden must be divisible by heads");
        if (init_std <= 0) throw Error("init_std must be positive");
        if (layers < 1 || hidden < 1 || vocab_size < 1) throw Error("bad model config");
    }
};

enum class InitKind { normal, zeros, ones };

template <class T>
struct NamedTensor {
    std::string name;
    Mat<T>* tensor;
    InitKind init;
};

template <class T>
struct ModelParams {
    Mat<T> tok_emb, pos_emb;
    Mat<T> emb_ln_g, emb_ln_b;

    struct Layer {
        Mat<T> wq, bq, wk, bk, wv, bv, wo, bo;
        Mat<T> ln1_g, ln1_b;
        Mat<T> w1, b1, w2, b2;
        Mat<T> ln2_g, ln2_b;
    };
    std::vector<Layer> layers;

    Mat<T> head_w, head_b, head_ln_g, head_ln_b, lm_bias;

    void build(const ModelConfig& cfg) {
        int H = cfg.hidden, F = cfg.ffn_dim(), V = cfg.vocab_size;
        tok_emb = Mat<T>(V, H);
        pos_emb = Mat<T>(cfg.max_seq_len, H);
        emb_ln_g = Mat<T>(1, H);
        emb_ln_b = Mat<T>(1, H);
        layers.assign(static_cast<size_t>(cfg.layers), {});
        for (auto& l : layers) {
            l.wq = Mat<T>(H, H); l.bq = Mat<T>(1, H);
            l.wk = Mat<T>(H, H); l.bk = Mat<T>(1, H);
            l.wv = Mat<T>(H, H); l.bv = Mat<T>(1, H);
            l.wo = Mat<T>(H, H); l.bo = Mat<T>(1, H);
            l.ln1_g = Mat<T>(1, H); l.ln1_b = Mat<T>(1, H);
            l.w1 = Mat<T>(F, H); l.b1 = Mat<T>(1, F);
            l.w2 = Mat<T>(H, F); l.b2 = Mat<T>(1, H);
            l.ln2_g = Mat<T>(1, H); l.ln2_b = Mat<T>(1, H);
        }
        head_w = Mat<T>(H, H);
        head_b = Mat<T>(1, H);
        head_ln_g = Mat<T>(1, H);
        head_ln_b = Mat<T>(1, H);
        lm_bias = Mat<T>(1, V);
    }

    std::vector<NamedTensor<T>> directory() {
        std::vector<NamedTensor<T>> d;
        d.push_back({"tok_emb", &tok_emb, InitKind::normal});
        d.push_back({"pos_emb", &pos_emb, InitKind::normal});
        d.push_back({"emb_ln_g", &emb_ln_g, InitKind::ones});
        d.push_back({"emb_ln_b", &emb_ln_b, InitKind::zeros});
        for (size_t i = 0; i < layers.size(); ++i) {
            auto& l = layers[i];
            std::string p = "layers." + std::to_string(i) + ".";
            d.push_back({p + "wq", &l.wq, InitKind::normal});
            d.push_back({p + "bq", &l.bq, InitKind::zeros});
            d.push_back({p + "wk", &l.wk, InitKind::normal});
            d.push_back({p + "bk", &l.bk, InitKind::zeros});
            d.push_back({p + "wv", &l.wv, InitKind::normal});
            d.push_back({p + "bv", &l.bv, InitKind::zeros});
            d.push_back({p + "wo", &l.wo, InitKind::normal});
            d.push_back({p + "bo", &l.bo, InitKind::zeros});
            d.push_back({p + "ln1_g", &l.ln1_g, InitKind::ones});
            d.push_back({p + "ln1_b", &l.ln1_b, InitKind::zeros});
            d.push_back({p + "w1", &l.w1, InitKind::normal});
            d.push_back({p + "b1", &l.b1, InitKind::zeros});
            d.push_back({p + "w2", &l.w2, InitKind::normal});
            d.push_back({p + "b2", &l.b2, InitKind::zeros});
            d.push_back({p + "ln2_g", &l.ln2_g, InitKind::ones});
            d.push_back({p + "ln2_b", &l.ln2_b, InitKind::zeros});
        }
        d.push_back({"head_w", &head_w, InitKind::normal});
        d.push_back({"head_b", &head_b, InitKind::zeros});
        d.push_back({"head_ln_g", &head_ln_g, InitKind::ones});
        d.push_back({"head_ln_b", &head_ln_b, InitKind::zeros});
        d.push_back({"lm_bias", &lm_bias, InitKind::zeros});
        return d;
    }

    void zero_all() {
        for (auto& nt : directory()) nt.tensor->zero();
    }
};

template <class T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t rng_seed) {
    cfg.validate();
    ModelParams<T> p;
    p.build(cfg);
    Rng rng(rng_seed);
    for (auto& nt : p.directory()) {
        switch (nt.init) {
            case InitKind::normal:
                for (auto& x : nt.tensor->a) x = static_cast<T>(rng.normal(0.0, cfg.init_std));
                break;
            case InitKind::zeros:
                nt.tensor->zero();
                break;
            case InitKind::ones:
                std::fill(nt.tensor->a.begin(), nt.tensor->a.end(), T(1));
                break;
        }
    }
    return p;
}

// ---- batches ----

struct Batch {
    int bsz = 0;
    int seq = 0;                // padded length
    std::vector<int> ids;       // bsz*seq
    std::vector<uint8_t> valid; // 1 for real tokens (incl. bos/eos)

    int at(int b, int t) const { return ids[static_cast<size_t>(b) * seq + t]; }
};

struct Label {
    int row = 0;    // b*seq + t
    int target = 0; // original token id
};

// ---- math helpers ----

template <class T>
struct LnCache {
    std::vector<T> mean, rstd;
};

template <class T>
void layernorm_forward(Mat<T>& out, LnCache<T>& cache, const Mat<T>& in, const Mat<T>& g,
                       const Mat<T>& b, T eps) {
    out.rows = in.rows;
    out.cols = in.cols;
    out.a.resize(in.size());
    cache.mean.resize(static_cast<size_t>(in.rows));
    cache.rstd.resize(static_cast<size_t>(in.rows));
    const int H = in.cols;
    parallel_for(in.rows, [&](int r0, int r1) {
        for (int r = r0; r < r1; ++r) {
            const T* x = in.row(r);
            T mu = 0;
            for (int i = 0; i < H; ++i) mu += x[i];
            mu /= T(H);
            T var = 0;
            for (int i = 0; i < H; ++i) {
                T d = x[i] - mu;
                var += d * d;
            }
            var /= T(H);
            T rstd = T(1) / std::sqrt(var + eps);
            cache.mean[static_cast<size_t>(r)] = mu;
            cache.rstd[static_cast<size_t>(r)] = rstd;
            T* y = out.row(r);
            for (int i = 0; i < H; ++i) {
                y[i] = g.a[static_cast<size_t>(i)] * ((x[i] - mu) * rstd) + b.a[static_cast<size_t>(i)];
            }
        }
    });
}

template <class T>
void layernorm_backward(Mat<T>& dx, Mat<T>& dg, Mat<T>& db, const Mat<T>& dy, const Mat<T>& in,
                        const LnCache<T>& cache, const Mat<T>& g) {
    const int H = in.cols;
    // dg/db are shared accumulators; keep that reduction in fixed row order.
    for (int r = 0; r < in.rows; ++r) {
        const T* x = in.row(r);
        const T* dyr = dy.row(r);
        T mu = cache.mean[static_cast<size_t>(r)];
        T rstd = cache.rstd[static_cast<size_t>(r)];
        for (int i = 0; i < H; ++i) {
            T xhat = (x[i] - mu) * rstd;
            dg.a[static_cast<size_t>(i)] += dyr[i] * xhat;
            db.a[static_cast<size_t>(i)] += dyr[i];
        }
    }
    dx.rows = in.rows;
    dx.cols = H;
    dx.a.resize(in.size());
    parallel_for(in.rows, [&](int r0, int r1) {
        for (int r = r0; r < r1; ++r) {
            const T* x = in.row(r);
            const T* dyr = dy.row(r);
            T* dxr = dx.row(r);
            T mu = cache.mean[static_cast<size_t>(r)];
            T rstd = cache.rstd[static_cast<size_t>(r)];
            T sum_dxhat = 0, sum_dxhat_xhat = 0;
            for (int i = 0; i < H; ++i) {
                T xhat = (x[i] - mu) * rstd;
                T dxhat = dyr[i] * g.a[static_cast<size_t>(i)];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat;
            }
            T inv_h = T(1) / T(H);
            for (int i = 0; i < H; ++i) {
                T xhat = (x[i] - mu) * rstd;
                T dxhat = dyr[i] * g.a[static_cast<size_t>(i)];
                dxr[i] = rstd * (dxhat - sum_dxhat * inv_h - xhat * sum_dxhat_xhat * inv_h);
            }
        }
    });
}

// Inverted dropout; mask entries are 0 or 1/(1-p). Mask values are drawn
// sequentially so the RNG stream does not depend on the thread count.
template <class T>
void dropout_forward(Mat<T>& x, Mat<T>& mask, T p, Rng& rng) {
    mask.rows = x.rows;
    mask.cols = x.cols;
    mask.a.resize(x.size());
    T scale = T(1) / (T(1) - p);
    for (size_t i = 0; i < x.a.size(); ++i) {
        T m = rng.uniform() < static_cast<double>(p) ? T(0) : scale;
        mask.a[i] = m;
        x.a[i] *= m;
    }
}

template <class T>
void apply_mask(Mat<T>& dx, const Mat<T>& mask) {
    if (mask.a.empty()) return;
    for (size_t i = 0; i < dx.a.size(); ++i) dx.a[i] *= mask.a[i];
}

// ---- activations ----

template <class T>
struct LayerActs {
    Mat<T> q, k, v;
    Mat<T> probs;      // [(b*heads + h)*seq + t, seq], pre-dropout softmax
    Mat<T> probs_mask; // attention-prob dropout mask (empty in eval mode)
    Mat<T> ctx;
    Mat<T> attn_mask;  // dropout mask on the projected attention output
    Mat<T> res1;
    LnCache<T> ln1;
    Mat<T> x_mid;
    Mat<T> ffn_pre, ffn_act;
    Mat<T> ffn_mask;
    Mat<T> res2;
    LnCache<T> ln2;
    Mat<T> x_out;
};

template <class T>
struct Acts {
    Mat<T> emb; // tok+pos, pre-LN
    LnCache<T> ln0;
    Mat<T> x0;  // post-LN, post-dropout: input to layer 0
    Mat<T> emb_mask;
    std::vector<LayerActs<T>> layers;

    std::vector<int> head_rows;
    Mat<T> head_in; // gathered final states
    Mat<T> head_pre, head_act;
    LnCache<T> head_ln;
    Mat<T> head_norm;
    Mat<T> logits; // [P, V]

    const Mat<T>& final_x() const { return layers.back().x_out; }
};

// ---- forward ----

template <class T>
void forward_encoder(const ModelConfig& cfg, const ModelParams<T>& p, const Batch& batch,
                     bool train, Rng* dropout_rng, Acts<T>& acts) {
    if (batch.seq > cfg.max_seq_len) {
        throw SequenceTooLong("sequence length " + std::to_string(batch.seq) + " exceeds max " +
                              std::to_string(cfg.max_seq_len));
    }
    const int H = cfg.hidden, B = batch.bsz, S = batch.seq, N = B * S;
    const int heads = cfg.heads, dh = cfg.head_dim();
    const T scale = T(1) / std::sqrt(T(dh));
    const T eps = static_cast<T>(cfg.layer_norm_eps);
    const T drop = static_cast<T>(cfg.dropout);
    const bool use_dropout = train && cfg.dropout > 0.0;

    acts.emb = Mat<T>(N, H);
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < S; ++t) {
            int row = b * S + t;
            const T* te = p.tok_emb.row(batch.ids[static_cast<size_t>(row)]);
            const T* pe = p.pos_emb.row(t);
            T* e = acts.emb.row(row);
            for (int i = 0; i < H; ++i) e[i] = te[i] + pe[i];
        }
    }
    layernorm_forward(acts.x0, acts.ln0, acts.emb, p.emb_ln_g, p.emb_ln_b, eps);
    if (use_dropout) dropout_forward(acts.x0, acts.emb_mask, drop, *dropout_rng);

    acts.layers.assign(static_cast<size_t>(cfg.layers), {});
    const Mat<T>* x = &acts.x0;
    for (int li = 0; li < cfg.layers; ++li) {
        const auto& L = p.layers[static_cast<size_t>(li)];
        auto& A = acts.layers[static_cast<size_t>(li)];
        const Mat<T>& x_in = *x;

        matmul_nt(A.q, x_in, L.wq, &L.bq);
        matmul_nt(A.k, x_in, L.wk, &L.bk);
        matmul_nt(A.v, x_in, L.wv, &L.bv);

        A.probs = Mat<T>(B * heads * S, S);
        parallel_for(B * heads, [&](int w0, int w1) {
            std::vector<T> scores(static_cast<size_t>(S));
            for (int w = w0; w < w1; ++w) {
                int b = w / heads, h = w % heads;
                int off = h * dh;
                for (int t = 0; t < S; ++t) {
                    const T* qr = A.q.row(b * S + t) + off;
                    T maxv = -std::numeric_limits<T>::infinity();
                    for (int u = 0; u < S; ++u) {
                        T s;
                        if (batch.valid[static_cast<size_t>(b * S + u)]) {
                            s = dot8(qr, A.k.row(b * S + u) + off, dh) * scale;
                        } else {
                            s = T(-1e9);
                        }
                        scores[static_cast<size_t>(u)] = s;
                        if (s > maxv) maxv = s;
                    }
                    T denom = 0;
                    for (int u = 0; u < S; ++u) {
                        T e = std::exp(scores[static_cast<size_t>(u)] - maxv);
                        scores[static_cast<size_t>(u)] = e;
                        denom += e;
                    }
                    T* pr = A.probs.row(w * S + t);
                    for (int u = 0; u < S; ++u) pr[u] = scores[static_cast<size_t>(u)] / denom;
                }
            }
        });
        if (use_dropout) {
            A.probs_mask.reshape(A.probs.rows, A.probs.cols);
            T pscale = T(1) / (T(1) - drop);
            for (size_t i = 0; i < A.probs_mask.a.size(); ++i) {
                A.probs_mask.a[i] =
                    dropout_rng->uniform() < static_cast<double>(drop) ? T(0) : pscale;
            }
        }

        A.ctx = Mat<T>(N, H);
        const bool prob_mask = !A.probs_mask.a.empty();
        parallel_for(B * heads, [&](int w0, int w1) {
            for (int w = w0; w < w1; ++w) {
                int b = w / heads, h = w % heads;
                int off = h * dh;
                for (int t = 0; t < S; ++t) {
                    const T* pr = A.probs.row(w * S + t);
                    const T* pm = prob_mask ? A.probs_mask.row(w * S + t) : nullptr;
                    T* ct = A.ctx.row(b * S + t) + off;
                    for (int u = 0; u < S; ++u) {
                        T prd = pm ? pr[u] * pm[u] : pr[u];
                        if (prd != T(0)) axpy(ct, prd, A.v.row(b * S + u) + off, dh);
                    }
                }
            }
        });

        Mat<T> a_out;
        matmul_nt(a_out, A.ctx, L.wo, &L.bo);
        if (use_dropout) dropout_forward(a_out, A.attn_mask, drop, *dropout_rng);

        A.res1.reshape(N, H);
        for (size_t i = 0; i < A.res1.a.size(); ++i) A.res1.a[i] = x_in.a[i] + a_out.a[i];
        layernorm_forward(A.x_mid, A.ln1, A.res1, L.ln1_g, L.ln1_b, eps);

        matmul_nt(A.ffn_pre, A.x_mid, L.w1, &L.b1);
        A.ffn_act.reshape(A.ffn_pre.rows, A.ffn_pre.cols);
        gelu_apply(A.ffn_act.a.data(), A.ffn_pre.a.data(), A.ffn_pre.a.size());
        Mat<T> f_out;
        matmul_nt(f_out, A.ffn_act, L.w2, &L.b2);
        if (use_dropout) dropout_forward(f_out, A.ffn_mask, drop, *dropout_rng);

        A.res2.reshape(N, H);
        for (size_t i = 0; i < A.res2.a.size(); ++i) A.res2.a[i] = A.x_mid.a[i] + f_out.a[i];
        layernorm_forward(A.x_out, A.ln2, A.res2, L.ln2_g, L.ln2_b, eps);

        x = &A.x_out;
    }
}

// LM head over a subset of positions (rows into the flattened batch).
template <class T>
void forward_head(const ModelConfig& cfg, const ModelParams<T>& p, Acts<T>& acts,
                  const std::vector<int>& rows) {
    const int H = cfg.hidden;
    acts.head_rows = rows;
    acts.head_in = Mat<T>(static_cast<int>(rows.size()), H);
    const Mat<T>& fx = acts.final_x();
    for (size_t i = 0; i < rows.size(); ++i) {
        std::memcpy(acts.head_in.row(static_cast<int>(i)), fx.row(rows[i]),
                    sizeof(T) * static_cast<size_t>(H));
    }
    matmul_nt(acts.head_pre, acts.head_in, p.head_w, &p.head_b);
    acts.head_act.reshape(acts.head_pre.rows, acts.head_pre.cols);
    gelu_apply(acts.head_act.a.data(), acts.head_pre.a.data(), acts.head_pre.a.size());
    layernorm_forward(acts.head_norm, acts.head_ln, acts.head_act, p.head_ln_g, p.head_ln_b,
                      static_cast<T>(cfg.layer_norm_eps));
    matmul_nt(acts.logits, acts.head_norm, p.tok_emb, &p.lm_bias);
}

// Full-vocabulary logits at every position: (bsz * seq, vocab).
template <class T>
Mat<T> forward_full_logits(const ModelConfig& cfg, const ModelParams<T>& p, const Batch& batch) {
    Acts<T> acts;
    forward_encoder(cfg, p, batch, /*train=*/false, nullptr, acts);
    std::vector<int> rows(static_cast<size_t>(batch.bsz) * batch.seq);
    for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    forward_head(cfg, p, acts, rows);
    return std::move(acts.logits);
}

// ---- loss and explicit backward ----

// Mean cross-entropy over the labeled positions; gradients for every
// parameter tensor are accumulated into `grads` (callers zero them).
template <class T>
double loss_and_grad(const ModelConfig& cfg, const ModelParams<T>& p, const Batch& batch,
                     const std::vector<Label>& labels, bool train, Rng* dropout_rng,
                     ModelParams<T>& grads) {
    if (labels.empty()) throw NoLabeledPositions("loss_and_grad requires >= 1 labeled position");

    Acts<T> acts;
    forward_encoder(cfg, p, batch, train, dropout_rng, acts);
    std::vector<int> rows(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) rows[i] = labels[i].row;
    forward_head(cfg, p, acts, rows);

    const int P = static_cast<int>(labels.size());
    const int V = cfg.vocab_size;
    const int H = cfg.hidden;
    const int B = batch.bsz, S = batch.seq, N = B * S;
    const int heads = cfg.heads, dh = cfg.head_dim();
    const T scale = T(1) / std::sqrt(T(dh));

    // Softmax cross-entropy; dlogits overwrites the logits buffer.
    double total_loss = 0.0;
    Mat<T>& dlogits = acts.logits;
    for (int i = 0; i < P; ++i) {
        T* row = dlogits.row(i);
        T maxv = row[0];
        for (int v = 1; v < V; ++v) maxv = std::max(maxv, row[v]);
        double denom = 0.0;
        for (int v = 0; v < V; ++v) denom += std::exp(static_cast<double>(row[v] - maxv));
        int target = labels[static_cast<size_t>(i)].target;
        double logprob = static_cast<double>(row[target] - maxv) - std::log(denom);
        total_loss -= logprob;
        T inv = T(1.0 / P);
        for (int v = 0; v < V; ++v) {
            double soft = std::exp(static_cast<double>(row[v] - maxv)) / denom;
            row[v] = static_cast<T>(soft) * inv;
        }
        row[target] -= inv;
    }
    double mean_loss = total_loss / P;
    if (!std::isfinite(mean_loss)) throw Error("non-finite training loss");

    // ---- head backward ----
    Mat<T> d_head_norm(P, H);
    matmul_nn_acc(d_head_norm, dlogits, p.tok_emb);
    matmul_tn_acc(grads.tok_emb, dlogits, acts.head_norm);
    colsum_acc(grads.lm_bias, dlogits);

    Mat<T> d_head_act;
    layernorm_backward(d_head_act, grads.head_ln_g, grads.head_ln_b, d_head_norm, acts.head_act,
                       acts.head_ln, p.head_ln_g);
    gelu_grad_apply(d_head_act.a.data(), acts.head_pre.a.data(), d_head_act.a.size());
    matmul_tn_acc(grads.head_w, d_head_act, acts.head_in);
    colsum_acc(grads.head_b, d_head_act);
    Mat<T> d_head_in(P, H);
    matmul_nn_acc(d_head_in, d_head_act, p.head_w);

    Mat<T> dx(N, H);
    for (int i = 0; i < P; ++i) {
        axpy(dx.row(acts.head_rows[static_cast<size_t>(i)]), T(1), d_head_in.row(i), H);
    }

    // ---- layers backward ----
    for (int li = cfg.layers - 1; li >= 0; --li) {
        const auto& L = p.layers[static_cast<size_t>(li)];
        auto& G = grads.layers[static_cast<size_t>(li)];
        auto& A = acts.layers[static_cast<size_t>(li)];
        const Mat<T>& x_in =
            li == 0 ? acts.x0 : acts.layers[static_cast<size_t>(li - 1)].x_out;

        Mat<T> d_res2;
        layernorm_backward(d_res2, G.ln2_g, G.ln2_b, dx, A.res2, A.ln2, L.ln2_g);

        // res2 = x_mid + dropout(ffn_out)
        Mat<T> d_ffn_out = d_res2;
        apply_mask(d_ffn_out, A.ffn_mask);

        matmul_tn_acc(G.w2, d_ffn_out, A.ffn_act);
        colsum_acc(G.b2, d_ffn_out);
        Mat<T> d_ffn_act(N, cfg.ffn_dim());
        matmul_nn_acc(d_ffn_act, d_ffn_out, L.w2);
        gelu_grad_apply(d_ffn_act.a.data(), A.ffn_pre.a.data(), d_ffn_act.a.size());
        matmul_tn_acc(G.w1, d_ffn_act, A.x_mid);
        colsum_acc(G.b1, d_ffn_act);

        Mat<T> d_x_mid = d_res2; // residual branch
        matmul_nn_acc(d_x_mid, d_ffn_act, L.w1);

        Mat<T> d_res1;
        layernorm_backward(d_res1, G.ln1_g, G.ln1_b, d_x_mid, A.res1, A.ln1, L.ln1_g);

        // res1 = x_in + dropout(attn_out)
        Mat<T> d_attn_out = d_res1;
        apply_mask(d_attn_out, A.attn_mask);

        matmul_tn_acc(G.wo, d_attn_out, A.ctx);
        colsum_acc(G.bo, d_attn_out);
        Mat<T> d_ctx(N, H);
        matmul_nn_acc(d_ctx, d_attn_out, L.wo);

        Mat<T> dq(N, H), dk(N, H), dv(N, H);
        const bool prob_mask = !A.probs_mask.a.empty();
        parallel_for(B * heads, [&](int w0, int w1) {
            std::vector<T> dp(static_cast<size_t>(S)), ds(static_cast<size_t>(S));
            for (int w = w0; w < w1; ++w) {
                int b = w / heads, h = w % heads;
                int off = h * dh;
                for (int t = 0; t < S; ++t) {
                    const T* dct = d_ctx.row(b * S + t) + off;
                    const T* pr = A.probs.row(w * S + t);
                    const T* pm = prob_mask ? A.probs_mask.row(w * S + t) : nullptr;
                    // d(post-dropout probs), routed back through the mask
                    for (int u = 0; u < S; ++u) {
                        T dpd = dot8(dct, A.v.row(b * S + u) + off, dh);
                        dp[static_cast<size_t>(u)] = pm ? dpd * pm[u] : dpd;
                    }
                    // softmax backward on pre-dropout probs
                    T inner = 0;
                    for (int u = 0; u < S; ++u) inner += pr[u] * dp[static_cast<size_t>(u)];
                    for (int u = 0; u < S; ++u) {
                        ds[static_cast<size_t>(u)] = pr[u] * (dp[static_cast<size_t>(u)] - inner);
                    }
                    T* dqr = dq.row(b * S + t) + off;
                    for (int u = 0; u < S; ++u) {
                        T dsu = ds[static_cast<size_t>(u)] * scale;
                        if (dsu != T(0)) axpy(dqr, dsu, A.k.row(b * S + u) + off, dh);
                    }
                    // dk/dv accumulate over t; (b,h) column slices are disjoint
                    // across workers so these writes stay race-free.
                    for (int u = 0; u < S; ++u) {
                        T dsu = ds[static_cast<size_t>(u)] * scale;
                        if (dsu != T(0)) axpy(dk.row(b * S + u) + off, dsu, A.q.row(b * S + t) + off, dh);
                        T prd = pm ? pr[u] * pm[u] : pr[u];
                        if (prd != T(0)) axpy(dv.row(b * S + u) + off, prd, dct, dh);
                    }
                }
            }
        });

        Mat<T> d_x_in = d_res1; // residual branch
        matmul_tn_acc(G.wq, dq, x_in);
        colsum_acc(G.bq, dq);
        matmul_nn_acc(d_x_in, dq, L.wq);
        matmul_tn_acc(G.wk, dk, x_in);
        colsum_acc(G.bk, dk);
        matmul_nn_acc(d_x_in, dk, L.wk);
        matmul_tn_acc(G.wv, dv, x_in);
        colsum_acc(G.bv, dv);
        matmul_nn_acc(d_x_in, dv, L.wv);

        dx = std::move(d_x_in);
    }

    // ---- embedding backward ----
    apply_mask(dx, acts.emb_mask);
    Mat<T> d_emb;
    layernorm_backward(d_emb, grads.emb_ln_g, grads.emb_ln_b, dx, acts.emb, acts.ln0, p.emb_ln_g);
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < S; ++t) {
            int row = b * S + t;
            if (!batch.valid[static_cast<size_t>(row)]) continue;
            axpy(grads.tok_emb.row(batch.ids[static_cast<size_t>(row)]), T(1), d_emb.row(row), H);
            axpy(grads.pos_emb.row(t), T(1), d_emb.row(row), H);
        }
    }

    return mean_loss;
}

} // namespace wuglab
