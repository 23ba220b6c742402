#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "m2d/dataset.hpp"
#include "m2d/errors.hpp"
#include "m2d/kernels.hpp"
#include "m2d/rng.hpp"
#include "m2d/types.hpp"

namespace m2d {

enum class Architecture { CompactConv, RecurrentNet };

const char* architecture_name(Architecture a);

struct ModelSpec {
    Architecture arch = Architecture::CompactConv;
    int channels = 16;
    int window = 125;
    int classes = kNumClasses;

    // CompactConv: temporal filtering, spatial filtering over all
    // channels, square activation, mean pool, log, dense readout.
    int temporal_kernels = 8;  // F1
    int temporal_length = 13;  // taps per temporal kernel
    int spatial_kernels = 8;   // F2
    int pool_length = 25;
    int pool_stride = 12;

    // RecurrentNet: gated recurrent layer, final hidden state to dense.
    int hidden = 64;

    void validate() const;
    int conv_time() const { return window - temporal_length + 1; }
    int pool_bins() const { return (conv_time() - pool_length) / pool_stride + 1; }
};

enum class ClassWeighting { Uniform, InverseFrequency };

struct TrainConfig {
    int batch_size = 128;
    int max_epochs = 100;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    ClassWeighting weighting = ClassWeighting::InverseFrequency;
    std::uint64_t seed = 42;
    int patience = 0;  // 0 disables early stopping

    void validate() const;
};

enum class Parallelism { Serial, Parallel };

template <class T>
struct Batch {
    std::size_t n = 0;
    std::vector<T> x;        // n * C * W
    std::vector<int> labels; // class indices in [0, classes)
};

// Row-wise softmax with the max-subtraction trick.
template <class T>
void softmax_row(const T* logits, int k, T* probs) {
    T mx = logits[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
    T sum = T(0);
    for (int i = 0; i < k; ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (int i = 0; i < k; ++i) probs[i] /= sum;
}

// Mean over the batch of w[y_i] * (-log p_i[y_i]), computed from logits.
template <class T>
T weighted_cross_entropy(const T* logits, const std::vector<int>& labels, int k,
                         const std::vector<T>& class_weights) {
    T total = T(0);
    std::vector<T> probs(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= k) raise(ErrorKind::InvalidInput, "loss: label outside [0, K)");
        softmax_row(logits + i * static_cast<std::size_t>(k), k, probs.data());
        total += class_weights[static_cast<std::size_t>(y)] *
                 (-std::log(std::max(probs[static_cast<std::size_t>(y)],
                                     std::numeric_limits<T>::min())));
    }
    return total / static_cast<T>(labels.size());
}

namespace detail {

// Flat parameter offsets. The order here is the on-disk checkpoint order.
struct ConvLayout {
    std::size_t wt, bt, ws, bs, wd, bd, total;
};

struct GruLayout {
    std::size_t wz, wr, wn, uz, ur, un, bz, br, bn, wd, bd, total;
};

inline ConvLayout conv_layout(const ModelSpec& s) {
    ConvLayout l{};
    const auto f1 = static_cast<std::size_t>(s.temporal_kernels);
    const auto f2 = static_cast<std::size_t>(s.spatial_kernels);
    const auto c = static_cast<std::size_t>(s.channels);
    const auto k = static_cast<std::size_t>(s.temporal_length);
    const auto u = static_cast<std::size_t>(s.pool_bins());
    const auto cls = static_cast<std::size_t>(s.classes);
    l.wt = 0;
    l.bt = l.wt + f1 * k;
    l.ws = l.bt + f1;
    l.bs = l.ws + f2 * f1 * c;
    l.wd = l.bs + f2;
    l.bd = l.wd + cls * f2 * u;
    l.total = l.bd + cls;
    return l;
}

inline GruLayout gru_layout(const ModelSpec& s) {
    GruLayout l{};
    const auto c = static_cast<std::size_t>(s.channels);
    const auto h = static_cast<std::size_t>(s.hidden);
    const auto cls = static_cast<std::size_t>(s.classes);
    l.wz = 0;
    l.wr = l.wz + h * c;
    l.wn = l.wr + h * c;
    l.uz = l.wn + h * c;
    l.ur = l.uz + h * h;
    l.un = l.ur + h * h;
    l.bz = l.un + h * h;
    l.br = l.bz + h;
    l.bn = l.br + h;
    l.wd = l.bn + h;
    l.bd = l.wd + cls * h;
    l.total = l.bd + cls;
    return l;
}

template <class T>
struct ConvWorkspace {
    std::vector<T> y1, y2, pooled, logp;        // forward
    std::vector<T> da, dy2, dy1;                // backward
};

template <class T>
struct GruWorkspace {
    std::vector<T> z, r, n, h;                  // W x H each
    std::vector<T> xt, az, ar, an, rh;          // per-step temps
    std::vector<T> dh, dz, dn, dr, daz, dar, dan, drh, dh_prev;
};

template <class T>
void conv_forward(const ModelSpec& s, const ConvLayout& l, const T* params, const T* x,
                  ConvWorkspace<T>& ws, T* logits) {
    const int c = s.channels;
    const int w = s.window;
    const int f1 = s.temporal_kernels;
    const int f2 = s.spatial_kernels;
    const int k = s.temporal_length;
    const int w1 = s.conv_time();
    const int u = s.pool_bins();
    const int pl = s.pool_length;
    const int ps = s.pool_stride;

    ws.y1.resize(static_cast<std::size_t>(f1) * c * w1);
    ws.y2.resize(static_cast<std::size_t>(f2) * w1);
    ws.pooled.resize(static_cast<std::size_t>(f2) * u);
    ws.logp.resize(static_cast<std::size_t>(f2) * u);

    const T* wt = params + l.wt;
    const T* bt = params + l.bt;
    for (int f = 0; f < f1; ++f)
        for (int ch = 0; ch < c; ++ch) {
            const T* xc = x + static_cast<std::size_t>(ch) * w;
            T* y = ws.y1.data() + (static_cast<std::size_t>(f) * c + ch) * w1;
            for (int t = 0; t < w1; ++t) {
                T acc = bt[f];
                for (int j = 0; j < k; ++j) acc += wt[f * k + j] * xc[t + j];
                y[t] = acc;
            }
        }

    const T* wsp = params + l.ws;
    const T* bs = params + l.bs;
    for (int g = 0; g < f2; ++g) {
        T* y = ws.y2.data() + static_cast<std::size_t>(g) * w1;
        for (int t = 0; t < w1; ++t) y[t] = bs[g];
        for (int f = 0; f < f1; ++f)
            for (int ch = 0; ch < c; ++ch) {
                const T wv = wsp[(static_cast<std::size_t>(g) * f1 + f) * c + ch];
                const T* y1 = ws.y1.data() + (static_cast<std::size_t>(f) * c + ch) * w1;
                for (int t = 0; t < w1; ++t) y[t] += wv * y1[t];
            }
    }

    const T inv_l = T(1) / static_cast<T>(pl);
    for (int g = 0; g < f2; ++g) {
        const T* y = ws.y2.data() + static_cast<std::size_t>(g) * w1;
        for (int b = 0; b < u; ++b) {
            T acc = T(0);
            for (int j = 0; j < pl; ++j) {
                const T v = y[b * ps + j];
                acc += v * v;
            }
            const T p = acc * inv_l;
            ws.pooled[static_cast<std::size_t>(g) * u + b] = p;
            ws.logp[static_cast<std::size_t>(g) * u + b] = std::log(p + T(1e-6));
        }
    }

    const T* wd = params + l.wd;
    const T* bd = params + l.bd;
    const int feat = f2 * u;
    for (int cls = 0; cls < s.classes; ++cls) {
        T acc = bd[cls];
        for (int i = 0; i < feat; ++i) acc += wd[cls * feat + i] * ws.logp[static_cast<std::size_t>(i)];
        logits[cls] = acc;
    }
}

template <class T>
void conv_backward(const ModelSpec& s, const ConvLayout& l, const T* params, const T* x,
                   ConvWorkspace<T>& ws, const T* dlogits, T* grad) {
    const int c = s.channels;
    const int w = s.window;
    const int f1 = s.temporal_kernels;
    const int f2 = s.spatial_kernels;
    const int k = s.temporal_length;
    const int w1 = s.conv_time();
    const int u = s.pool_bins();
    const int pl = s.pool_length;
    const int ps = s.pool_stride;
    const int feat = f2 * u;

    T* dwd = grad + l.wd;
    T* dbd = grad + l.bd;
    ws.da.assign(static_cast<std::size_t>(f2) * u, T(0));
    for (int cls = 0; cls < s.classes; ++cls) {
        dbd[cls] += dlogits[cls];
        const T* wd = params + l.wd + static_cast<std::size_t>(cls) * feat;
        for (int i = 0; i < feat; ++i) {
            dwd[cls * feat + i] += dlogits[cls] * ws.logp[static_cast<std::size_t>(i)];
            ws.da[static_cast<std::size_t>(i)] += wd[i] * dlogits[cls];
        }
    }
    // through log(p + eps) and the mean pool into dy2
    ws.dy2.assign(static_cast<std::size_t>(f2) * w1, T(0));
    const T inv_l = T(1) / static_cast<T>(pl);
    for (int g = 0; g < f2; ++g) {
        const T* y = ws.y2.data() + static_cast<std::size_t>(g) * w1;
        T* dy = ws.dy2.data() + static_cast<std::size_t>(g) * w1;
        for (int b = 0; b < u; ++b) {
            const T dp = ws.da[static_cast<std::size_t>(g) * u + b] /
                         (ws.pooled[static_cast<std::size_t>(g) * u + b] + T(1e-6));
            const T scale = dp * inv_l;
            for (int j = 0; j < pl; ++j) dy[b * ps + j] += scale * T(2) * y[b * ps + j];
        }
    }

    T* dws = grad + l.ws;
    T* dbs = grad + l.bs;
    ws.dy1.assign(static_cast<std::size_t>(f1) * c * w1, T(0));
    const T* wsp = params + l.ws;
    for (int g = 0; g < f2; ++g) {
        const T* dy = ws.dy2.data() + static_cast<std::size_t>(g) * w1;
        T acc_b = T(0);
        for (int t = 0; t < w1; ++t) acc_b += dy[t];
        dbs[g] += acc_b;
        for (int f = 0; f < f1; ++f)
            for (int ch = 0; ch < c; ++ch) {
                const std::size_t wi = (static_cast<std::size_t>(g) * f1 + f) * c + ch;
                const T* y1 = ws.y1.data() + (static_cast<std::size_t>(f) * c + ch) * w1;
                T* dy1 = ws.dy1.data() + (static_cast<std::size_t>(f) * c + ch) * w1;
                T acc_w = T(0);
                const T wv = wsp[wi];
                for (int t = 0; t < w1; ++t) {
                    acc_w += dy[t] * y1[t];
                    dy1[t] += wv * dy[t];
                }
                dws[wi] += acc_w;
            }
    }

    T* dwt = grad + l.wt;
    T* dbt = grad + l.bt;
    for (int f = 0; f < f1; ++f) {
        T acc_b = T(0);
        for (int ch = 0; ch < c; ++ch) {
            const T* dy1 = ws.dy1.data() + (static_cast<std::size_t>(f) * c + ch) * w1;
            const T* xc = x + static_cast<std::size_t>(ch) * w;
            for (int j = 0; j < k; ++j) {
                T acc = T(0);
                for (int t = 0; t < w1; ++t) acc += dy1[t] * xc[t + j];
                dwt[f * k + j] += acc;
            }
            for (int t = 0; t < w1; ++t) acc_b += dy1[t];
        }
        dbt[f] += acc_b;
    }
}

template <class T>
T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <class T>
void gru_forward(const ModelSpec& s, const GruLayout& l, const T* params, const T* x,
                 GruWorkspace<T>& ws, T* logits) {
    const int c = s.channels;
    const int w = s.window;
    const int h = s.hidden;
    const std::size_t hs = static_cast<std::size_t>(h);

    ws.z.resize(static_cast<std::size_t>(w) * hs);
    ws.r.resize(static_cast<std::size_t>(w) * hs);
    ws.n.resize(static_cast<std::size_t>(w) * hs);
    ws.h.resize(static_cast<std::size_t>(w) * hs);
    ws.xt.resize(static_cast<std::size_t>(c));
    ws.az.resize(hs);
    ws.ar.resize(hs);
    ws.an.resize(hs);
    ws.rh.resize(hs);

    const T* wz = params + l.wz;
    const T* wr = params + l.wr;
    const T* wn = params + l.wn;
    const T* uz = params + l.uz;
    const T* ur = params + l.ur;
    const T* un = params + l.un;
    const T* bz = params + l.bz;
    const T* br = params + l.br;
    const T* bn = params + l.bn;

    std::vector<T> h_prev(hs, T(0));
    for (int t = 0; t < w; ++t) {
        for (int ch = 0; ch < c; ++ch) ws.xt[static_cast<std::size_t>(ch)] = x[static_cast<std::size_t>(ch) * w + t];
        for (int i = 0; i < h; ++i) {
            T az = bz[i];
            T ar = br[i];
            T an = bn[i];
            for (int ch = 0; ch < c; ++ch) {
                const T xv = ws.xt[static_cast<std::size_t>(ch)];
                az += wz[i * c + ch] * xv;
                ar += wr[i * c + ch] * xv;
                an += wn[i * c + ch] * xv;
            }
            for (int j = 0; j < h; ++j) {
                az += uz[i * h + j] * h_prev[static_cast<std::size_t>(j)];
                ar += ur[i * h + j] * h_prev[static_cast<std::size_t>(j)];
            }
            ws.az[static_cast<std::size_t>(i)] = az;
            ws.ar[static_cast<std::size_t>(i)] = ar;
            ws.an[static_cast<std::size_t>(i)] = an;  // input part; recurrent part below
        }
        T* zt = ws.z.data() + static_cast<std::size_t>(t) * hs;
        T* rt = ws.r.data() + static_cast<std::size_t>(t) * hs;
        T* nt = ws.n.data() + static_cast<std::size_t>(t) * hs;
        T* ht = ws.h.data() + static_cast<std::size_t>(t) * hs;
        for (int i = 0; i < h; ++i) {
            zt[i] = sigmoid(ws.az[static_cast<std::size_t>(i)]);
            rt[i] = sigmoid(ws.ar[static_cast<std::size_t>(i)]);
        }
        for (int i = 0; i < h; ++i) ws.rh[static_cast<std::size_t>(i)] = rt[i] * h_prev[static_cast<std::size_t>(i)];
        for (int i = 0; i < h; ++i) {
            T an = ws.an[static_cast<std::size_t>(i)];
            for (int j = 0; j < h; ++j) an += un[i * h + j] * ws.rh[static_cast<std::size_t>(j)];
            nt[i] = std::tanh(an);
            ht[i] = (T(1) - zt[i]) * nt[i] + zt[i] * h_prev[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < h; ++i) h_prev[static_cast<std::size_t>(i)] = ht[i];
    }

    const T* wd = params + l.wd;
    const T* bd = params + l.bd;
    const T* hT = ws.h.data() + static_cast<std::size_t>(w - 1) * hs;
    for (int cls = 0; cls < s.classes; ++cls) {
        T acc = bd[cls];
        for (int i = 0; i < h; ++i) acc += wd[cls * h + i] * hT[i];
        logits[cls] = acc;
    }
}

template <class T>
void gru_backward(const ModelSpec& s, const GruLayout& l, const T* params, const T* x,
                  GruWorkspace<T>& ws, const T* dlogits, T* grad) {
    const int c = s.channels;
    const int w = s.window;
    const int h = s.hidden;
    const std::size_t hs = static_cast<std::size_t>(h);

    const T* uz = params + l.uz;
    const T* ur = params + l.ur;
    const T* un = params + l.un;
    const T* wd = params + l.wd;

    ws.dh.assign(hs, T(0));
    ws.dz.resize(hs);
    ws.dn.resize(hs);
    ws.dr.resize(hs);
    ws.daz.resize(hs);
    ws.dar.resize(hs);
    ws.dan.resize(hs);
    ws.drh.resize(hs);
    ws.dh_prev.resize(hs);

    T* gwd = grad + l.wd;
    T* gbd = grad + l.bd;
    const T* hT = ws.h.data() + static_cast<std::size_t>(w - 1) * hs;
    for (int cls = 0; cls < s.classes; ++cls) {
        gbd[cls] += dlogits[cls];
        for (int i = 0; i < h; ++i) {
            gwd[cls * h + i] += dlogits[cls] * hT[i];
            ws.dh[static_cast<std::size_t>(i)] += wd[cls * h + i] * dlogits[cls];
        }
    }

    T* gwz = grad + l.wz;
    T* gwr = grad + l.wr;
    T* gwn = grad + l.wn;
    T* guz = grad + l.uz;
    T* gur = grad + l.ur;
    T* gun = grad + l.un;
    T* gbz = grad + l.bz;
    T* gbr = grad + l.br;
    T* gbn = grad + l.bn;

    for (int t = w - 1; t >= 0; --t) {
        const T* zt = ws.z.data() + static_cast<std::size_t>(t) * hs;
        const T* rt = ws.r.data() + static_cast<std::size_t>(t) * hs;
        const T* nt = ws.n.data() + static_cast<std::size_t>(t) * hs;
        const T* h_prev = t > 0 ? ws.h.data() + static_cast<std::size_t>(t - 1) * hs : nullptr;

        auto hp = [&](int i) { return h_prev != nullptr ? h_prev[i] : T(0); };

        for (int i = 0; i < h; ++i) {
            const T dh = ws.dh[static_cast<std::size_t>(i)];
            const T dn = dh * (T(1) - zt[i]);
            ws.dan[static_cast<std::size_t>(i)] = dn * (T(1) - nt[i] * nt[i]);
            const T dz = dh * (hp(i) - nt[i]);
            ws.daz[static_cast<std::size_t>(i)] = dz * zt[i] * (T(1) - zt[i]);
        }
        for (int j = 0; j < h; ++j) {
            T acc = T(0);
            for (int i = 0; i < h; ++i) acc += un[i * h + j] * ws.dan[static_cast<std::size_t>(i)];
            ws.drh[static_cast<std::size_t>(j)] = acc;
        }
        for (int i = 0; i < h; ++i) {
            ws.dr[static_cast<std::size_t>(i)] = ws.drh[static_cast<std::size_t>(i)] * hp(i);
            ws.dar[static_cast<std::size_t>(i)] =
                ws.dr[static_cast<std::size_t>(i)] * rt[i] * (T(1) - rt[i]);
        }
        for (int j = 0; j < h; ++j) {
            T acc = ws.dh[static_cast<std::size_t>(j)] * zt[j] +
                    ws.drh[static_cast<std::size_t>(j)] * rt[j];
            for (int i = 0; i < h; ++i) {
                acc += uz[i * h + j] * ws.daz[static_cast<std::size_t>(i)];
                acc += ur[i * h + j] * ws.dar[static_cast<std::size_t>(i)];
            }
            ws.dh_prev[static_cast<std::size_t>(j)] = acc;
        }

        for (int ch = 0; ch < c; ++ch) ws.xt[static_cast<std::size_t>(ch)] = x[static_cast<std::size_t>(ch) * w + t];
        for (int i = 0; i < h; ++i) {
            const T daz = ws.daz[static_cast<std::size_t>(i)];
            const T dar = ws.dar[static_cast<std::size_t>(i)];
            const T dan = ws.dan[static_cast<std::size_t>(i)];
            for (int ch = 0; ch < c; ++ch) {
                const T xv = ws.xt[static_cast<std::size_t>(ch)];
                gwz[i * c + ch] += daz * xv;
                gwr[i * c + ch] += dar * xv;
                gwn[i * c + ch] += dan * xv;
            }
            for (int j = 0; j < h; ++j) {
                const T hpv = hp(j);
                guz[i * h + j] += daz * hpv;
                gur[i * h + j] += dar * hpv;
                gun[i * h + j] += dan * rt[j] * hpv;  // rh_j = r_j * h_prev_j
            }
            gbz[i] += daz;
            gbr[i] += dar;
            gbn[i] += dan;
        }
        for (int i = 0; i < h; ++i) ws.dh[static_cast<std::size_t>(i)] = ws.dh_prev[static_cast<std::size_t>(i)];
    }
}

}  // namespace detail

// A compact trainable classifier with a flat parameter vector and analytic
// gradients. T is float for training and double for gradient checks.
template <class T>
class Network {
public:
    explicit Network(const ModelSpec& spec) : spec_(spec) {
        spec_.validate();
        if (spec_.arch == Architecture::CompactConv) {
            const auto l = detail::conv_layout(spec_);
            params_.assign(l.total, T(0));
        } else {
            const auto l = detail::gru_layout(spec_);
            params_.assign(l.total, T(0));
        }
    }

    const ModelSpec& spec() const { return spec_; }
    std::size_t param_count() const { return params_.size(); }
    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }

    // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases, seeded.
    void init_params(std::uint64_t seed) {
        Rng rng = Rng(seed).fork("init");
        auto fill = [&](std::size_t offset, std::size_t count, int fan_in, int fan_out) {
            const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            for (std::size_t i = 0; i < count; ++i)
                params_[offset + i] = static_cast<T>(rng.uniform(-a, a));
        };
        if (spec_.arch == Architecture::CompactConv) {
            const auto l = detail::conv_layout(spec_);
            const int k = spec_.temporal_length;
            fill(l.wt, l.bt - l.wt, k, k * spec_.temporal_kernels);
            fill(l.ws, l.bs - l.ws, spec_.temporal_kernels * spec_.channels,
                 spec_.spatial_kernels);
            fill(l.wd, l.bd - l.wd, spec_.spatial_kernels * spec_.pool_bins(), spec_.classes);
        } else {
            const auto l = detail::gru_layout(spec_);
            const int c = spec_.channels;
            const int h = spec_.hidden;
            fill(l.wz, l.uz - l.wz, c, h);   // all three input matrices
            fill(l.uz, l.bz - l.uz, h, h);   // all three recurrent matrices
            fill(l.wd, l.bd - l.wd, h, spec_.classes);
        }
    }

    // Logits for a batch, n x classes.
    void logits(const Batch<T>& batch, T* out, Parallelism par = Parallelism::Parallel) const {
        check_batch(batch);
        const std::size_t stride = static_cast<std::size_t>(spec_.channels) * spec_.window;
        auto run = [&](std::size_t i) {
            if (spec_.arch == Architecture::CompactConv) {
                static thread_local detail::ConvWorkspace<T> ws;
                detail::conv_forward(spec_, detail::conv_layout(spec_), params_.data(),
                                     batch.x.data() + i * stride, ws,
                                     out + i * static_cast<std::size_t>(spec_.classes));
            } else {
                static thread_local detail::GruWorkspace<T> ws;
                detail::gru_forward(spec_, detail::gru_layout(spec_), params_.data(),
                                    batch.x.data() + i * stride, ws,
                                    out + i * static_cast<std::size_t>(spec_.classes));
            }
        };
        if (par == Parallelism::Parallel)
            kernels::parallel_batch(batch.n, run);
        else
            kernels::serial_batch(batch.n, run);
    }

    // Mean weighted cross-entropy over the batch plus its gradient with
    // respect to every parameter. Per-example gradients are reduced in
    // batch-index order, so the result is independent of thread count.
    T loss_and_grad(const Batch<T>& batch, const std::vector<T>& class_weights, T* grad,
                    Parallelism par = Parallelism::Parallel) const {
        check_batch(batch);
        if (class_weights.size() != static_cast<std::size_t>(spec_.classes))
            raise(ErrorKind::InvalidInput, "loss: class weight count mismatch");
        const std::size_t p = params_.size();
        const std::size_t stride = static_cast<std::size_t>(spec_.channels) * spec_.window;
        const std::size_t k = static_cast<std::size_t>(spec_.classes);
        // Validate labels before entering the parallel region; exceptions
        // must not cross an OpenMP boundary.
        for (int y : batch.labels)
            if (y < 0 || y >= spec_.classes)
                raise(ErrorKind::InvalidInput, "loss: label outside [0, K)");

        std::vector<T> per_grad(batch.n * p, T(0));
        std::vector<T> per_loss(batch.n, T(0));
        const T inv_n = T(1) / static_cast<T>(batch.n);

        auto run = [&](std::size_t i) {
            const int y = batch.labels[i];
            const T wy = class_weights[static_cast<std::size_t>(y)];
            const T* x = batch.x.data() + i * stride;
            T lg[16];
            T probs[16];
            T dlg[16];
            if (spec_.arch == Architecture::CompactConv) {
                static thread_local detail::ConvWorkspace<T> ws;
                const auto layout = detail::conv_layout(spec_);
                detail::conv_forward(spec_, layout, params_.data(), x, ws, lg);
                softmax_row(lg, spec_.classes, probs);
                for (std::size_t j = 0; j < k; ++j)
                    dlg[j] = wy * inv_n * (probs[j] - (static_cast<int>(j) == y ? T(1) : T(0)));
                detail::conv_backward(spec_, layout, params_.data(), x, ws, dlg,
                                      per_grad.data() + i * p);
            } else {
                static thread_local detail::GruWorkspace<T> ws;
                const auto layout = detail::gru_layout(spec_);
                detail::gru_forward(spec_, layout, params_.data(), x, ws, lg);
                softmax_row(lg, spec_.classes, probs);
                for (std::size_t j = 0; j < k; ++j)
                    dlg[j] = wy * inv_n * (probs[j] - (static_cast<int>(j) == y ? T(1) : T(0)));
                detail::gru_backward(spec_, layout, params_.data(), x, ws, dlg,
                                     per_grad.data() + i * p);
            }
            per_loss[i] = wy * (-std::log(std::max(probs[static_cast<std::size_t>(y)],
                                                   std::numeric_limits<T>::min())));
        };
        if (par == Parallelism::Parallel)
            kernels::parallel_batch(batch.n, run);
        else
            kernels::serial_batch(batch.n, run);

        kernels::reduce_rows(per_grad, batch.n, p, grad);
        T loss = T(0);
        for (std::size_t i = 0; i < batch.n; ++i) loss += per_loss[i];
        loss *= inv_n;
        for (std::size_t j = 0; j < p; ++j)
            if (!std::isfinite(grad[j]))
                raise(ErrorKind::Numerical, "non-finite gradient in " +
                                                std::string(architecture_name(spec_.arch)));
        return loss;
    }

private:
    void check_batch(const Batch<T>& batch) const {
        const std::size_t stride = static_cast<std::size_t>(spec_.channels) * spec_.window;
        if (batch.x.size() != batch.n * stride)
            raise(ErrorKind::Shape,
                  "batch shape mismatch: expected n*" + std::to_string(stride) + " values, got " +
                      std::to_string(batch.x.size()) + " for n=" + std::to_string(batch.n));
        if (batch.labels.size() != batch.n)
            raise(ErrorKind::Shape, "batch label count mismatch");
        if (spec_.classes > 16) raise(ErrorKind::Shape, "more than 16 classes unsupported");
    }

    ModelSpec spec_;
    std::vector<T> params_;
};

// Standard Adam with bias correction on a flat parameter vector.
template <class T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    long long t = 0;
};

template <class T>
void adam_step(std::vector<T>& params, const T* grad, AdamState<T>& state,
               const TrainConfig& cfg) {
    const std::size_t p = params.size();
    if (state.m.size() != p) {
        state.m.assign(p, T(0));
        state.v.assign(p, T(0));
        state.t = 0;
    }
    ++state.t;
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T eps = static_cast<T>(cfg.eps);
    const T lr = static_cast<T>(cfg.lr);
    const T bc1 = T(1) - std::pow(b1, static_cast<T>(state.t));
    const T bc2 = T(1) - std::pow(b2, static_cast<T>(state.t));
    for (std::size_t i = 0; i < p; ++i) {
        state.m[i] = b1 * state.m[i] + (T(1) - b1) * grad[i];
        state.v[i] = b2 * state.v[i] + (T(1) - b2) * grad[i] * grad[i];
        const T mhat = state.m[i] / bc1;
        const T vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        if (!std::isfinite(params[i]))
            raise(ErrorKind::Training, "parameter diverged during Adam step");
    }
}

struct Checkpoint {
    ModelSpec spec;
    std::vector<float> params;
    int epoch = -1;
    double val_macro_f1 = 0.0;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_macro_f1 = 0.0;
    double val_balanced_accuracy = 0.0;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EpochLog> log;
};

// Seeded shuffles, batches of cfg.batch_size (final partial batch kept),
// checkpoint at the best validation macro-F1 (ties keep the earlier
// epoch).
TrainResult train(const ModelSpec& spec, const TrainConfig& cfg,
                  const std::vector<Example>& train_set, const std::vector<Example>& val_set,
                  Parallelism par = Parallelism::Parallel);

// Argmax class indices; ties resolve to the lowest class index.
std::vector<int> predict(const Checkpoint& ckpt, const std::vector<Example>& examples,
                         Parallelism par = Parallelism::Parallel);

std::vector<int> predict(const Network<float>& net, const std::vector<Example>& examples,
                         Parallelism par = Parallelism::Parallel);

// Inverse-frequency weights N_total / (K * N_k) over the training labels;
// absent classes get weight 0.
std::vector<float> class_weights(const std::vector<Example>& train_set,
                                 ClassWeighting weighting, int classes);

Batch<float> make_batch(const std::vector<Example>& examples,
                        const std::vector<std::size_t>& indices, const ModelSpec& spec);

// Checkpoint file, magic M2DC, little-endian.
void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace m2d
