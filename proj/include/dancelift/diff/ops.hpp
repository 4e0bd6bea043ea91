#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "graph.hpp"

namespace dancelift::diff {

namespace detail {

inline void same_shape(const Graph& g, Var a, Var b, const char* op) {
    require(g.shape(a) == g.shape(b), std::string(op) + ": shape mismatch " + g.shape(a).str() +
                                          " vs " + g.shape(b).str());
}

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace detail

// ---- elementwise -----------------------------------------------------------

inline Var add(Var a, Var b) {
    Graph& g = *a.graph;
    detail::same_shape(g, a, b, "add");
    Tensor out = g.value(a);
    out.mat() += g.value(b).mat();
    return g.record(std::move(out), {a, b}, [a, b](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        if (g.requires_grad(a.id)) g.accumulate(a.id).mat() += go.mat();
        if (g.requires_grad(b.id)) g.accumulate(b.id).mat() += go.mat();
    });
}

inline Var sub(Var a, Var b) {
    Graph& g = *a.graph;
    detail::same_shape(g, a, b, "sub");
    Tensor out = g.value(a);
    out.mat() -= g.value(b).mat();
    return g.record(std::move(out), {a, b}, [a, b](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        if (g.requires_grad(a.id)) g.accumulate(a.id).mat() += go.mat();
        if (g.requires_grad(b.id)) g.accumulate(b.id).mat() -= go.mat();
    });
}

inline Var mul(Var a, Var b) {
    Graph& g = *a.graph;
    detail::same_shape(g, a, b, "mul");
    Tensor out = g.value(a);
    out.mat().array() *= g.value(b).mat().array();
    return g.record(std::move(out), {a, b}, [a, b](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        if (g.requires_grad(a.id))
            g.accumulate(a.id).mat().array() += go.mat().array() * g.value(b).mat().array();
        if (g.requires_grad(b.id))
            g.accumulate(b.id).mat().array() += go.mat().array() * g.value(a).mat().array();
    });
}

inline Var scale(Var a, double s) {
    Graph& g = *a.graph;
    Tensor out = g.value(a);
    out.mat() *= s;
    return g.record(std::move(out), {a}, [a, s](Graph& g, int self) {
        g.accumulate(a.id).mat() += s * g.grad(self).mat();
    });
}

namespace detail {

template <class F, class DF>
Var unary(Var a, F f, DF df_from_out) {
    Graph& g = *a.graph;
    Tensor out = g.value(a);
    for (double& x : out.values()) x = f(x);
    return g.record(std::move(out), {a}, [a, df_from_out](Graph& g, int self) {
        const Tensor& y = g.value(self);
        const Tensor& go = g.grad(self);
        Tensor& ga = g.accumulate(a.id);
        for (std::size_t i = 0; i < y.size(); ++i) ga[i] += go[i] * df_from_out(y[i], g.value(a)[i]);
    });
}

} // namespace detail

inline Var tanh(Var a) {
    return detail::unary(
        a, [](double x) { return std::tanh(x); }, [](double y, double) { return 1.0 - y * y; });
}

inline Var sigmoid(Var a) {
    return detail::unary(
        a, [](double x) { return detail::sigmoid(x); }, [](double y, double) { return y * (1.0 - y); });
}

inline Var relu(Var a) {
    return detail::unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double, double x) { return x > 0.0 ? 1.0 : 0.0; });
}

// ---- reductions ------------------------------------------------------------

inline Var sum(Var a) {
    Graph& g = *a.graph;
    const double s = g.value(a).mat().sum();
    return g.record(Tensor::scalar(s), {a}, [a](Graph& g, int self) {
        g.accumulate(a.id).mat().array() += g.grad(self)[0];
    });
}

inline Var mean(Var a) {
    Graph& g = *a.graph;
    return scale(sum(a), 1.0 / static_cast<double>(g.value(a).size()));
}

/// sum of mask * (a - target)^2; mask may be empty (all ones).
inline Var sum_squared_error(Var a, const Tensor& target, const Tensor* mask = nullptr) {
    Graph& g = *a.graph;
    const Tensor& x = g.value(a);
    require(x.shape() == target.shape(), "sum_squared_error: shape mismatch " + x.shape().str() +
                                             " vs " + target.shape().str());
    require(!mask || mask->shape() == target.shape(), "sum_squared_error: mask shape mismatch");
    Tensor diff(x.shape());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = mask ? (*mask)[i] : 1.0;
        diff[i] = w * (x[i] - target[i]);
        s += diff[i] * (x[i] - target[i]);
    }
    return g.record(Tensor::scalar(s), {a}, [a, diff = std::move(diff)](Graph& g, int self) {
        g.accumulate(a.id).mat() += 2.0 * g.grad(self)[0] * diff.mat();
    });
}

inline Var sum_squares(Var a) {
    Graph& g = *a.graph;
    return sum_squared_error(a, Tensor(g.value(a).shape()));
}

// ---- reshaping -------------------------------------------------------------

/// x[t] - x[t-1] for t = 1..T-1.
inline Var time_diff(Var a) {
    Graph& g = *a.graph;
    const Tensor& x = g.value(a);
    const Shape s = x.shape();
    require(s.time >= 2, "time_diff: need at least two time steps");
    Tensor out(Shape{s.time - 1, s.channel, s.batch});
    for (int t = 1; t < s.time; ++t) out.step(t - 1) = x.step(t) - x.step(t - 1);
    return g.record(std::move(out), {a}, [a](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        Tensor& ga = g.accumulate(a.id);
        for (int t = 0; t < go.shape().time; ++t) {
            ga.step(t + 1) += go.step(t);
            ga.step(t) -= go.step(t);
        }
    });
}

inline Var slice_time(Var a, int t) {
    Graph& g = *a.graph;
    const Tensor& x = g.value(a);
    require(t >= 0 && t < x.shape().time, "slice_time: index out of range");
    Tensor out(Shape{1, x.shape().channel, x.shape().batch});
    out.step(0) = x.step(t);
    return g.record(std::move(out), {a}, [a, t](Graph& g, int self) {
        g.accumulate(a.id).step(t) += g.grad(self).step(0);
    });
}

inline Var stack_time(const std::vector<Var>& steps) {
    require(!steps.empty(), "stack_time: no inputs");
    Graph& g = *steps.front().graph;
    const Shape s0 = g.shape(steps.front());
    require(s0.time == 1, "stack_time: inputs must have a single time step");
    Tensor out(Shape{static_cast<int>(steps.size()), s0.channel, s0.batch});
    for (std::size_t t = 0; t < steps.size(); ++t) {
        require(g.shape(steps[t]) == s0, "stack_time: shape mismatch");
        out.step(static_cast<int>(t)) = g.value(steps[t]).step(0);
    }
    bool needs = false;
    for (const Var& v : steps) needs = needs || g.requires_grad(v.id);
    Var dummy = steps.front();
    for (const Var& v : steps)
        if (g.requires_grad(v.id)) dummy = v;
    return g.record(std::move(out), {dummy}, [steps](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        for (std::size_t t = 0; t < steps.size(); ++t)
            if (g.requires_grad(steps[t].id))
                g.accumulate(steps[t].id).step(0) += go.step(static_cast<int>(t));
    });
}

inline Var slice_channels(Var a, int begin, int count) {
    Graph& g = *a.graph;
    const Tensor& x = g.value(a);
    require(begin >= 0 && count > 0 && begin + count <= x.shape().channel,
            "slice_channels: range out of bounds");
    Tensor out(Shape{x.shape().time, count, x.shape().batch});
    out.mat() = x.mat().middleCols(begin, count);
    return g.record(std::move(out), {a}, [a, begin, count](Graph& g, int self) {
        g.accumulate(a.id).mat().middleCols(begin, count) += g.grad(self).mat();
    });
}

/// Concatenate along the batch axis (inputs share time and channel).
inline Var concat_batch(Var a, Var b) {
    Graph& g = *a.graph;
    const Shape sa = g.shape(a), sb = g.shape(b);
    require(sa.time == sb.time && sa.channel == sb.channel, "concat_batch: shape mismatch");
    Tensor out(Shape{sa.time, sa.channel, sa.batch + sb.batch});
    for (int t = 0; t < sa.time; ++t) {
        out.step(t).topRows(sa.batch) = g.value(a).step(t);
        out.step(t).bottomRows(sb.batch) = g.value(b).step(t);
    }
    return g.record(std::move(out), {a, b}, [a, b, sa, sb](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        for (int t = 0; t < sa.time; ++t) {
            if (g.requires_grad(a.id)) g.accumulate(a.id).step(t) += go.step(t).topRows(sa.batch);
            if (g.requires_grad(b.id)) g.accumulate(b.id).step(t) += go.step(t).bottomRows(sb.batch);
        }
    });
}

/// Batch entries [begin, begin + count).
inline Var slice_batch(Var a, int begin, int count) {
    Graph& g = *a.graph;
    const Tensor& x = g.value(a);
    const Shape s = x.shape();
    require(begin >= 0 && count > 0 && begin + count <= s.batch, "slice_batch: range out of bounds");
    Tensor out(Shape{s.time, s.channel, count});
    for (int t = 0; t < s.time; ++t) out.step(t) = x.step(t).middleRows(begin, count);
    return g.record(std::move(out), {a}, [a, begin, count](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        Tensor& ga = g.accumulate(a.id);
        for (int t = 0; t < go.shape().time; ++t) ga.step(t).middleRows(begin, count) += go.step(t);
    });
}

// ---- layers ----------------------------------------------------------------

/// y = x W^T + b. W: (out, in, 1); b: (1, out, 1).
inline Var dense(Var x, Var w, Var b) {
    Graph& g = *x.graph;
    const Tensor& X = g.value(x);
    const Tensor& W = g.value(w);
    const Tensor& B = g.value(b);
    require(W.shape().channel == X.shape().channel,
            "dense: weight expects " + std::to_string(W.shape().channel) + " inputs, got " +
                std::to_string(X.shape().channel));
    require(B.size() == static_cast<std::size_t>(W.shape().time), "dense: bias size mismatch");
    Tensor out(Shape{X.shape().time, W.shape().time, X.shape().batch});
    out.mat().noalias() = X.mat() * W.mat().transpose();
    out.mat().rowwise() += Eigen::Map<const Eigen::RowVectorXd>(B.values().data(), B.size());
    return g.record(std::move(out), {x, w, b}, [x, w, b](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        if (g.requires_grad(x.id)) g.accumulate(x.id).mat().noalias() += go.mat() * g.value(w).mat();
        if (g.requires_grad(w.id))
            g.accumulate(w.id).mat().noalias() += go.mat().transpose() * g.value(x).mat();
        if (g.requires_grad(b.id)) {
            Tensor& gb = g.accumulate(b.id);
            Eigen::Map<Eigen::RowVectorXd>(gb.values().data(), gb.size()) += go.mat().colwise().sum();
        }
    });
}

enum class Padding { Causal, Centered };

/// Dilated 1D convolution over time with edge-replicated padding.
/// W: (K * out, in, 1), tap k occupying rows [k*out, (k+1)*out); b: (1, out, 1).
/// Causal: y[t] = b + sum_k W_k x[clamp(t - (K-1-k) d)].
/// Centered: offsets (k - (K-1)/2) d, clamped at both ends.
inline Var conv1d(Var x, Var w, Var b, int kernel, int dilation, Padding padding) {
    Graph& g = *x.graph;
    const Tensor& X = g.value(x);
    const Tensor& W = g.value(w);
    const Shape xs = X.shape();
    require(kernel >= 1 && dilation >= 1, "conv1d: kernel and dilation must be positive");
    require(W.shape().time % kernel == 0, "conv1d: weight rows not divisible by kernel size");
    const int out_ch = W.shape().time / kernel;
    require(W.shape().channel == xs.channel,
            "conv1d: weight expects " + std::to_string(W.shape().channel) + " channels, got " +
                std::to_string(xs.channel));
    require(g.value(b).size() == static_cast<std::size_t>(out_ch), "conv1d: bias size mismatch");

    auto source = [=](int t, int k) {
        const int off = padding == Padding::Causal ? (k - (kernel - 1)) * dilation
                                                   : (k - (kernel - 1) / 2) * dilation;
        return std::clamp(t + off, 0, xs.time - 1);
    };

    Tensor out(Shape{xs.time, out_ch, xs.batch});
    const auto& B = g.value(b);
    const Eigen::Map<const Eigen::RowVectorXd> bias(B.values().data(), out_ch);
    for (int t = 0; t < xs.time; ++t) {
        auto y = out.step(t);
        y.rowwise() = bias;
        for (int k = 0; k < kernel; ++k)
            y.noalias() += X.step(source(t, k)) * W.mat().middleRows(k * out_ch, out_ch).transpose();
    }
    return g.record(std::move(out), {x, w, b}, [=](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        const Tensor& X = g.value(x);
        const Tensor& W = g.value(w);
        const bool gx = g.requires_grad(x.id), gw = g.requires_grad(w.id), gbias = g.requires_grad(b.id);
        for (int t = 0; t < xs.time; ++t) {
            const auto gy = go.step(t);
            for (int k = 0; k < kernel; ++k) {
                const int s = source(t, k);
                if (gx)
                    g.accumulate(x.id).step(s).noalias() += gy * W.mat().middleRows(k * out_ch, out_ch);
                if (gw)
                    g.accumulate(w.id).mat().middleRows(k * out_ch, out_ch).noalias() +=
                        gy.transpose() * X.step(s);
            }
            if (gbias) {
                Tensor& gb = g.accumulate(b.id);
                Eigen::Map<Eigen::RowVectorXd>(gb.values().data(), out_ch) += gy.colwise().sum();
            }
        }
    });
}

/// One LSTM step. x: (1, in, B); h, c: (1, H, B); Wx: (4H, in, 1);
/// Wh: (4H, H, 1); b: (1, 4H, 1). Gate order i, f, g, o. Returns (1, 2H, B)
/// holding [h', c'] along channels.
inline Var lstm_cell(Var x, Var h, Var c, Var wx, Var wh, Var b) {
    Graph& g = *x.graph;
    const Tensor& X = g.value(x);
    const Tensor& Hp = g.value(h);
    const Tensor& Cp = g.value(c);
    const int H = Hp.shape().channel;
    const int batch = X.shape().batch;
    require(X.shape().time == 1 && Hp.shape().time == 1 && Cp.shape().time == 1,
            "lstm_cell: inputs must be single time steps");
    require(Cp.shape() == Hp.shape() && Hp.shape().batch == batch, "lstm_cell: state shape mismatch");
    require(g.value(wx).shape().time == 4 * H && g.value(wx).shape().channel == X.shape().channel,
            "lstm_cell: input weight shape mismatch");
    require(g.value(wh).shape().time == 4 * H && g.value(wh).shape().channel == H,
            "lstm_cell: recurrent weight shape mismatch");
    require(g.value(b).size() == static_cast<std::size_t>(4 * H), "lstm_cell: bias size mismatch");

    RowMatrix z = X.mat() * g.value(wx).mat().transpose() + Hp.mat() * g.value(wh).mat().transpose();
    z.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(g.value(b).values().data(), 4 * H);
    // activated gates, kept for backward
    RowMatrix gates(batch, 4 * H);
    Tensor out(Shape{1, 2 * H, batch});
    for (int r = 0; r < batch; ++r) {
        for (int k = 0; k < H; ++k) {
            const double i = detail::sigmoid(z(r, k));
            const double f = detail::sigmoid(z(r, H + k));
            const double gg = std::tanh(z(r, 2 * H + k));
            const double o = detail::sigmoid(z(r, 3 * H + k));
            gates(r, k) = i;
            gates(r, H + k) = f;
            gates(r, 2 * H + k) = gg;
            gates(r, 3 * H + k) = o;
            const double cn = f * Cp.at(0, k, r) + i * gg;
            out.at(0, H + k, r) = cn;
            out.at(0, k, r) = o * std::tanh(cn);
        }
    }
    return g.record(std::move(out), {x, h, c, wx, wh, b},
                    [=, gates = std::move(gates)](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        const Tensor& y = g.value(self);
        const Tensor& Cp = g.value(c);
        RowMatrix dz(batch, 4 * H);
        RowMatrix dc_prev(batch, H);
        for (int r = 0; r < batch; ++r) {
            for (int k = 0; k < H; ++k) {
                const double i = gates(r, k), f = gates(r, H + k), gg = gates(r, 2 * H + k),
                             o = gates(r, 3 * H + k);
                const double cn = y.at(0, H + k, r);
                const double tc = std::tanh(cn);
                const double dh = go.at(0, k, r);
                const double dc = go.at(0, H + k, r) + dh * o * (1.0 - tc * tc);
                dz(r, k) = dc * gg * i * (1.0 - i);
                dz(r, H + k) = dc * Cp.at(0, k, r) * f * (1.0 - f);
                dz(r, 2 * H + k) = dc * i * (1.0 - gg * gg);
                dz(r, 3 * H + k) = dh * tc * o * (1.0 - o);
                dc_prev(r, k) = dc * f;
            }
        }
        if (g.requires_grad(x.id)) g.accumulate(x.id).mat().noalias() += dz * g.value(wx).mat();
        if (g.requires_grad(h.id)) g.accumulate(h.id).mat().noalias() += dz * g.value(wh).mat();
        if (g.requires_grad(c.id)) g.accumulate(c.id).mat() += dc_prev;
        if (g.requires_grad(wx.id))
            g.accumulate(wx.id).mat().noalias() += dz.transpose() * g.value(x).mat();
        if (g.requires_grad(wh.id))
            g.accumulate(wh.id).mat().noalias() += dz.transpose() * g.value(h).mat();
        if (g.requires_grad(b.id)) {
            Tensor& gb = g.accumulate(b.id);
            Eigen::Map<Eigen::RowVectorXd>(gb.values().data(), 4 * H) += dz.colwise().sum();
        }
    });
}

/// Pinhole projection of stacked 3D joints. pts: (T, 3J, B) in mm;
/// cam: (1, 4, 1) = [fx, fy, cx, cy]. Returns (T, 2J, B) pixels.
inline Var project_pinhole(Var pts, Var cam, double min_depth = 100.0) {
    Graph& g = *pts.graph;
    const Tensor& P = g.value(pts);
    const Tensor& C = g.value(cam);
    require(P.shape().channel % 3 == 0, "project_pinhole: channel count must be a multiple of 3");
    require(C.size() == 4, "project_pinhole: camera must hold [fx, fy, cx, cy]");
    const int J = P.shape().channel / 3;
    const Shape s = P.shape();
    Tensor out(Shape{s.time, 2 * J, s.batch});
    for (int t = 0; t < s.time; ++t)
        for (int bb = 0; bb < s.batch; ++bb)
            for (int j = 0; j < J; ++j) {
                const double X = P.at(t, 3 * j, bb), Y = P.at(t, 3 * j + 1, bb), Z = P.at(t, 3 * j + 2, bb);
                if (!(Z > min_depth))
                    fail(ErrorKind::BehindCamera, "project_pinhole: joint " + std::to_string(j) +
                                                      " at depth " + std::to_string(Z));
                out.at(t, 2 * j, bb) = C[0] * X / Z + C[2];
                out.at(t, 2 * j + 1, bb) = C[1] * Y / Z + C[3];
            }
    return g.record(std::move(out), {pts, cam}, [=](Graph& g, int self) {
        const Tensor& go = g.grad(self);
        const Tensor& P = g.value(pts);
        const Tensor& C = g.value(cam);
        const bool gp = g.requires_grad(pts.id), gc = g.requires_grad(cam.id);
        for (int t = 0; t < s.time; ++t)
            for (int bb = 0; bb < s.batch; ++bb)
                for (int j = 0; j < J; ++j) {
                    const double X = P.at(t, 3 * j, bb), Y = P.at(t, 3 * j + 1, bb),
                                 Z = P.at(t, 3 * j + 2, bb);
                    const double gu = go.at(t, 2 * j, bb), gv = go.at(t, 2 * j + 1, bb);
                    if (gp) {
                        Tensor& gpt = g.accumulate(pts.id);
                        gpt.at(t, 3 * j, bb) += gu * C[0] / Z;
                        gpt.at(t, 3 * j + 1, bb) += gv * C[1] / Z;
                        gpt.at(t, 3 * j + 2, bb) -= (gu * C[0] * X + gv * C[1] * Y) / (Z * Z);
                    }
                    if (gc) {
                        Tensor& gcam = g.accumulate(cam.id);
                        gcam[0] += gu * X / Z;
                        gcam[1] += gv * Y / Z;
                        gcam[2] += gu;
                        gcam[3] += gv;
                    }
                }
    });
}

// ---- losses ----------------------------------------------------------------

inline constexpr double kProbClamp = 1e-7;

/// Mean binary cross entropy on probabilities clamped to [1e-7, 1 - 1e-7].
inline Var bce_loss(Var pred, const Tensor& target) {
    Graph& g = *pred.graph;
    const Tensor& p = g.value(pred);
    require(p.shape() == target.shape(),
            "bce_loss: shape mismatch " + p.shape().str() + " vs " + target.shape().str());
    const double n = static_cast<double>(p.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
        loss -= target[i] * std::log(q) + (1.0 - target[i]) * std::log(1.0 - q);
    }
    return g.record(Tensor::scalar(loss / n), {pred}, [pred, target, n](Graph& g, int self) {
        const Tensor& p = g.value(pred);
        const double go = g.grad(self)[0];
        Tensor& gp = g.accumulate(pred.id);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] < kProbClamp || p[i] > 1.0 - kProbClamp) continue;
            gp[i] += go * (-target[i] / p[i] + (1.0 - target[i]) / (1.0 - p[i])) / n;
        }
    });
}

/// Mean softmax cross entropy. logits: (1, C, B); one class index per batch column.
inline Var ce_loss(Var logits, std::span<const int> classes) {
    Graph& g = *logits.graph;
    const Tensor& z = g.value(logits);
    const int C = z.shape().channel, B = z.shape().batch;
    require(z.shape().time == 1, "ce_loss: logits must be a single time step");
    require(static_cast<int>(classes.size()) == B, "ce_loss: one class index per batch entry required");
    RowMatrix probs(B, C);
    double loss = 0.0;
    for (int r = 0; r < B; ++r) {
        require(classes[r] >= 0 && classes[r] < C, "ce_loss: class index out of range");
        const double m = z.step(0).row(r).maxCoeff();
        double s = 0.0;
        for (int k = 0; k < C; ++k) s += std::exp(z.at(0, k, r) - m);
        for (int k = 0; k < C; ++k) probs(r, k) = std::exp(z.at(0, k, r) - m) / s;
        loss -= z.at(0, classes[r], r) - m - std::log(s);
    }
    std::vector<int> cls(classes.begin(), classes.end());
    return g.record(Tensor::scalar(loss / B), {logits},
                    [logits, probs = std::move(probs), cls = std::move(cls), B](Graph& g, int self) {
        const double go = g.grad(self)[0] / B;
        Tensor& gz = g.accumulate(logits.id);
        for (int r = 0; r < B; ++r)
            for (int k = 0; k < probs.cols(); ++k)
                gz.at(0, k, r) += go * (probs(r, k) - (k == cls[r] ? 1.0 : 0.0));
    });
}

} // namespace dancelift::diff
