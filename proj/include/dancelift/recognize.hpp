#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "diffcore.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "pose.hpp"
#include "random.hpp"
#include "taxonomy.hpp"

namespace dancelift {

struct RecognizeConfig {
    int hidden = 64;
    int epochs = 100;
    int batch_clips = 8;          // clips per Adam step; 0 means the whole set
    double learning_rate = 1e-3;
    double threshold = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        require(hidden >= 1, "recognize: hidden size must be positive");
        require(epochs >= 1, "recognize: epochs must be positive");
        require(batch_clips >= 0, "recognize: batch_clips must be non-negative");
        require(learning_rate > 0.0 && std::isfinite(learning_rate), "recognize: learning rate must be positive");
        require(threshold > 0.0 && threshold < 1.0, "recognize: threshold must lie in (0, 1)");
    }
};

/// Single-layer LSTM followed by a dense read-out. Parameters are ordered
/// lstm.wx, lstm.wh, lstm.b, out.w, out.b.
struct SequenceNet {
    int inputs = 0;
    int hidden = 0;
    int outputs = 0;
    std::vector<diff::Parameter> params;

    std::vector<diff::Parameter*> parameters() {
        std::vector<diff::Parameter*> out;
        for (auto& p : params) out.push_back(&p);
        return out;
    }
    std::vector<const diff::Parameter*> parameters() const {
        std::vector<const diff::Parameter*> out;
        for (const auto& p : params) out.push_back(&p);
        return out;
    }
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.value.size();
        return n;
    }
};

struct MovementModel {
    int part = 0;
    RecognizeConfig config;
    SequenceNet net;
    // Per-channel standardization fitted on the training frames.
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;

    int labels() const { return net.outputs; }
};

struct GenreModel {
    RecognizeConfig config;
    SequenceNet net;
};

/// Mean loss at the first step of each epoch, plus the loss after the last step.
struct TrainingLog {
    std::vector<double> loss;
    double initial() const { return loss.front(); }
    double final() const { return loss.back(); }
};

struct MovementTraining {
    MovementModel model;
    TrainingLog log;
};

struct GenreTraining {
    GenreModel model;
    TrainingLog log;
};

namespace detail {

/// Glorot-uniform LSTM and read-out; forget-gate bias starts at 1. A zero
/// read-out gives uniform outputs at initialization.
inline SequenceNet make_sequence_net(int inputs, int hidden, int outputs, bool zero_readout, std::uint64_t seed) {
    SequenceNet net{inputs, hidden, outputs, {}};
    std::mt19937_64 rng(seed);
    auto uniform = [&](std::string name, int rows, int cols, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        diff::Tensor w(diff::Shape{rows, cols, 1});
        for (double& v : w.values()) v = u(rng);
        return diff::Parameter(std::move(name), std::move(w));
    };
    const int G = 4 * hidden;
    net.params.push_back(uniform("lstm.wx", G, inputs, std::sqrt(6.0 / (inputs + hidden))));
    net.params.push_back(uniform("lstm.wh", G, hidden, std::sqrt(6.0 / (2.0 * hidden))));
    diff::Tensor b(diff::Shape{1, G, 1});
    for (int k = hidden; k < 2 * hidden; ++k) b[k] = 1.0;
    net.params.emplace_back("lstm.b", std::move(b));
    if (zero_readout)
        net.params.emplace_back("out.w", diff::Tensor(diff::Shape{outputs, hidden, 1}));
    else
        net.params.push_back(uniform("out.w", outputs, hidden, std::sqrt(6.0 / (hidden + outputs))));
    net.params.emplace_back("out.b", diff::Tensor(diff::Shape{1, outputs, 1}));
    return net;
}

/// Hidden state at every step: (T, H, B).
inline diff::Var lstm_states(diff::Graph& g, const std::vector<diff::Var>& p, diff::Var x, int hidden) {
    const diff::Shape s = g.shape(x);
    diff::Var h = g.constant(diff::Tensor(diff::Shape{1, hidden, s.batch}));
    diff::Var c = h;
    std::vector<diff::Var> hs;
    for (int t = 0; t < s.time; ++t) {
        const diff::Var hc = diff::lstm_cell(diff::slice_time(x, t), h, c, p[0], p[1], p[2]);
        h = diff::slice_channels(hc, 0, hidden);
        c = diff::slice_channels(hc, hidden, hidden);
        hs.push_back(h);
    }
    return diff::stack_time(hs);
}

inline std::vector<diff::Var> bind(diff::Graph& g, SequenceNet& net) {
    std::vector<diff::Var> p;
    for (auto& prm : net.params) p.push_back(g.param(prm));
    return p;
}

/// Per-frame sigmoid outputs (T, L, B).
inline diff::Var movement_forward(diff::Graph& g, SequenceNet& net, diff::Var x) {
    const auto p = bind(g, net);
    const diff::Var h = lstm_states(g, p, x, net.hidden);
    return diff::sigmoid(diff::dense(h, p[3], p[4]));
}

/// Logits read from the last step (1, C, B).
inline diff::Var genre_forward(diff::Graph& g, SequenceNet& net, diff::Var x) {
    const auto p = bind(g, net);
    const diff::Var h = lstm_states(g, p, x, net.hidden);
    return diff::dense(diff::slice_time(h, g.shape(h).time - 1), p[3], p[4]);
}

/// Stacks equally long per-clip tensors (T, C, 1) along the batch axis.
inline diff::Tensor stack_batch(const std::vector<const diff::Tensor*>& xs) {
    const diff::Shape s0 = xs.front()->shape();
    diff::Tensor out(diff::Shape{s0.time, s0.channel, static_cast<int>(xs.size())});
    for (std::size_t b = 0; b < xs.size(); ++b)
        for (int t = 0; t < s0.time; ++t) out.step(t).row(static_cast<long>(b)) = xs[b]->step(t).row(0);
    return out;
}

/// Clip indices grouped by length, groups in ascending length order.
inline std::vector<std::vector<int>> length_groups(const std::vector<diff::Tensor>& xs, const std::vector<int>& ids) {
    std::map<int, std::vector<int>> by_len;
    for (int i : ids) by_len[xs[i].shape().time].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& [len, v] : by_len) out.push_back(std::move(v));
    return out;
}

} // namespace detail

// ---- features ----------------------------------------------------------------

/// Coordinates of the part's joints divided by the mean skeleton height,
/// with each channel's clip mean removed. Centering on the clip-mean root is
/// subsumed by that, and root motion (hips) stays visible. Shape (T, 3|J_e|, 1).
inline diff::Tensor movement_features(const PoseSeq3D& seq, int part) {
    require(part >= 0 && part < kNumParts, "recognize: part out of range");
    require(!seq.empty(), "recognize: empty pose sequence");
    for (const auto& p : seq) require(p.finite(), "recognize: non-finite joint coordinates");
    const auto& J = body_parts()[part].joints;
    const int nj = static_cast<int>(J.size());
    const double h = skeleton_height(seq);
    require(h > 0.0, "recognize: degenerate skeleton");
    diff::Tensor x(diff::Shape{static_cast<int>(seq.size()), 3 * nj, 1});
    for (std::size_t t = 0; t < seq.size(); ++t)
        for (int k = 0; k < nj; ++k)
            for (int d = 0; d < 3; ++d)
                x.at(static_cast<int>(t), 3 * k + d) = seq[t].joints[J[k]][d] / h;
    x.mat().rowwise() -= x.mat().colwise().mean();
    return x;
}

/// Per-frame 154-wide multi-hot input. Shape (T, 154, 1).
inline diff::Tensor genre_features(const LabelSeq& labels) {
    require(!labels.frames.empty(), "genre: empty label sequence");
    diff::Tensor x(diff::Shape{static_cast<int>(labels.frames.size()), kNumLabels, 1});
    for (std::size_t t = 0; t < labels.frames.size(); ++t) {
        const auto& f = labels.frames[t];
        require(f.size() == static_cast<std::size_t>(kNumLabels),
                "genre: frame " + std::to_string(t) + " has " + std::to_string(f.size()) + " labels, expected 154");
        for (int l = 0; l < kNumLabels; ++l) {
            require(f[l] <= 1, "genre: labels must be 0 or 1");
            x.at(static_cast<int>(t), l) = f[l];
        }
    }
    return x;
}

// ---- movement ------------------------------------------------------------------

/// Prepared training set for one part: features and per-frame targets.
struct MovementData {
    int part = 0;
    std::vector<diff::Tensor> inputs;   // (T, 3|J_e|, 1)
    std::vector<diff::Tensor> targets;  // (T, |Y^e|, 1)
};

inline MovementData movement_data(int part, const std::vector<PoseSeq3D>& poses, const std::vector<LabelSeq>& labels) {
    require(part >= 0 && part < kNumParts, "recognize: part out of range");
    require(poses.size() == labels.size(),
            "recognize: " + std::to_string(poses.size()) + " pose clips but " + std::to_string(labels.size()) +
                " label clips");
    MovementData d;
    d.part = part;
    const int L = body_parts()[part].vocab_size;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        require(poses[i].size() == labels[i].frames.size(),
                "recognize: clip " + std::to_string(i) + " has " + std::to_string(poses[i].size()) + " frames but " +
                    std::to_string(labels[i].frames.size()) + " label rows");
        d.inputs.push_back(movement_features(poses[i], part));
        diff::Tensor y(diff::Shape{static_cast<int>(poses[i].size()), L, 1});
        for (std::size_t t = 0; t < poses[i].size(); ++t) {
            require(labels[i].frames[t].size() == static_cast<std::size_t>(kNumLabels),
                    "recognize: label rows must have 154 entries");
            const auto row = labels[i].part_labels(static_cast<int>(t), part);
            for (int l = 0; l < L; ++l) y.at(static_cast<int>(t), l) = row[l] != 0;
        }
        d.targets.push_back(std::move(y));
    }
    return d;
}

inline MovementModel make_movement_model(int part, const RecognizeConfig& cfg) {
    cfg.validate();
    require(part >= 0 && part < kNumParts, "recognize: part out of range");
    MovementModel m;
    m.part = part;
    m.config = cfg;
    m.net = detail::make_sequence_net(3 * static_cast<int>(body_parts()[part].joints.size()), cfg.hidden,
                                      body_parts()[part].vocab_size, false, mix_seed(cfg.seed, 0x3e00 + part));
    m.feature_mean.assign(m.net.inputs, 0.0);
    m.feature_scale.assign(m.net.inputs, 1.0);
    return m;
}

/// Fits the standardization to all frames of `inputs` (channels with no
/// spread keep scale 1).
inline void fit_standardization(MovementModel& m, const std::vector<diff::Tensor>& inputs) {
    const int C = m.net.inputs;
    std::vector<double> sum(C, 0.0), sq(C, 0.0);
    double n = 0.0;
    for (const auto& x : inputs)
        for (int t = 0; t < x.shape().time; ++t, n += 1.0)
            for (int c = 0; c < C; ++c) sum[c] += x.at(t, c), sq[c] += x.at(t, c) * x.at(t, c);
    for (int c = 0; c < C; ++c) {
        const double mu = sum[c] / n, var = std::max(0.0, sq[c] / n - mu * mu);
        m.feature_mean[c] = mu;
        m.feature_scale[c] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
    }
}

inline void standardize(const MovementModel& m, diff::Tensor& x) {
    for (int t = 0; t < x.shape().time; ++t)
        for (int c = 0; c < m.net.inputs; ++c) x.at(t, c) = (x.at(t, c) - m.feature_mean[c]) * m.feature_scale[c];
}

/// Mean BCE over the selected clips (all frames and labels weighted equally).
/// Accumulates parameter gradients when `backward` is set.
inline double movement_loss(MovementModel& m, const MovementData& d, const std::vector<int>& ids, bool backward) {
    if (backward)
        for (auto& p : m.net.params) p.zero_grad();
    double total_cells = 0.0;
    for (int i : ids) total_cells += static_cast<double>(d.targets[i].size());
    double loss = 0.0;
    for (const auto& group : detail::length_groups(d.inputs, ids)) {
        std::vector<const diff::Tensor*> xs, ys;
        for (int i : group) xs.push_back(&d.inputs[i]), ys.push_back(&d.targets[i]);
        const diff::Tensor Y = detail::stack_batch(ys);
        diff::Graph g;
        const diff::Var out = detail::movement_forward(g, m.net, g.constant(detail::stack_batch(xs)));
        const diff::Var l = diff::scale(diff::bce_loss(out, Y), static_cast<double>(Y.size()) / total_cells);
        loss += g.value(l).item();
        if (backward) g.backward(l);
    }
    return loss;
}

namespace detail {

/// Minibatch Adam over shuffled clips. `loss_fn(ids, backward)` returns the
/// mean loss of those clips.
template <class LossFn>
TrainingLog fit(SequenceNet& net, int clips, const RecognizeConfig& cfg, std::uint64_t seed, LossFn&& loss_fn) {
    std::vector<int> all(clips);
    std::iota(all.begin(), all.end(), 0);
    const int bs = cfg.batch_clips == 0 ? clips : std::min(cfg.batch_clips, clips);
    std::mt19937_64 rng(seed);
    diff::AdamState adam(cfg.learning_rate);
    auto params = net.parameters();
    TrainingLog log;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order = all;
        std::shuffle(order.begin(), order.end(), rng);
        for (int s = 0; s < clips; s += bs) {
            std::vector<int> ids(order.begin() + s, order.begin() + std::min(clips, s + bs));
            std::sort(ids.begin(), ids.end());
            const double l = loss_fn(ids, true);
            if (!std::isfinite(l))
                fail(ErrorKind::Divergence, "recognize: non-finite loss in epoch " + std::to_string(epoch));
            if (s == 0) log.loss.push_back(loss_fn(all, false));
            diff::adam_step(adam, params);
        }
    }
    log.loss.push_back(loss_fn(all, false));
    return log;
}

} // namespace detail

inline MovementTraining train_movement(int part, const std::vector<PoseSeq3D>& poses, const std::vector<LabelSeq>& labels,
                                       const RecognizeConfig& cfg = {}) {
    cfg.validate();
    require(poses.size() >= 2, "recognize: at least 2 training clips are required");
    MovementData d = movement_data(part, poses, labels);
    MovementTraining r{make_movement_model(part, cfg), {}};
    fit_standardization(r.model, d.inputs);
    for (auto& x : d.inputs) standardize(r.model, x);
    r.log = detail::fit(r.model.net, static_cast<int>(poses.size()), cfg, mix_seed(cfg.seed, 0x3f00 + part),
                        [&](const std::vector<int>& ids, bool bw) { return movement_loss(r.model, d, ids, bw); });
    return r;
}

/// Models for all 16 parts, trained independently on up to `jobs` threads.
inline std::vector<MovementTraining> train_all_movements(const std::vector<PoseSeq3D>& poses,
                                                         const std::vector<LabelSeq>& labels,
                                                         const RecognizeConfig& cfg = {}, int jobs = 1) {
    std::vector<MovementTraining> out(kNumParts);
    parallel_for(kNumParts, jobs, [&](int e) { out[e] = train_movement(e, poses, labels, cfg); });
    return out;
}

/// Sigmoid outputs per frame (T x |Y^e|).
inline std::vector<std::vector<double>> movement_probabilities(const MovementModel& model, int part,
                                                               const PoseSeq3D& seq) {
    if (part != model.part)
        fail(ErrorKind::InvalidArgument, "recognize: model was trained for part " + std::to_string(model.part) +
                                             ", not part " + std::to_string(part));
    require(!seq.empty(), "recognize: empty pose sequence");
    SequenceNet net = model.net;
    diff::Tensor x = movement_features(seq, part);
    standardize(model, x);
    diff::Graph g;
    const diff::Var out = detail::movement_forward(g, net, g.constant(std::move(x)));
    const diff::Tensor& y = g.value(out);
    std::vector<std::vector<double>> p(seq.size(), std::vector<double>(model.labels()));
    for (std::size_t t = 0; t < seq.size(); ++t)
        for (int l = 0; l < model.labels(); ++l) p[t][l] = y.at(static_cast<int>(t), l);
    return p;
}

/// Per-frame binary labels of one part (threshold on the sigmoid outputs).
inline LabelGrid predict_movement(const MovementModel& model, int part, const PoseSeq3D& seq) {
    const auto p = movement_probabilities(model, part, seq);
    LabelGrid out(p.size(), std::vector<std::uint8_t>(model.labels()));
    for (std::size_t t = 0; t < p.size(); ++t)
        for (int l = 0; l < model.labels(); ++l) out[t][l] = p[t][l] >= model.config.threshold;
    return out;
}

/// Concatenated 154-wide labels from one model per part (indexed by part).
inline LabelSeq predict_movements(const std::vector<MovementModel>& models, const PoseSeq3D& seq) {
    require(models.size() == static_cast<std::size_t>(kNumParts), "recognize: need one model per part");
    LabelSeq out;
    out.frames.assign(seq.size(), std::vector<std::uint8_t>(kNumLabels, 0));
    for (int e = 0; e < kNumParts; ++e) {
        const LabelGrid g = predict_movement(models[e], e, seq);
        for (std::size_t t = 0; t < seq.size(); ++t)
            std::copy(g[t].begin(), g[t].end(), out.frames[t].begin() + label_offset(e));
    }
    return out;
}

// ---- genre ------------------------------------------------------------------------

struct GenreData {
    std::vector<diff::Tensor> inputs;  // (T, 154, 1)
    std::vector<int> genres;
};

inline GenreData genre_data(const std::vector<LabelSeq>& clips) {
    GenreData d;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        require(clips[i].genre >= 0 && clips[i].genre < kNumGenres,
                "genre: clip " + std::to_string(i) + " lacks a genre in [0, 9)");
        d.inputs.push_back(genre_features(clips[i]));
        d.genres.push_back(clips[i].genre);
    }
    return d;
}

inline GenreModel make_genre_model(const RecognizeConfig& cfg) {
    cfg.validate();
    return {cfg, detail::make_sequence_net(kNumLabels, cfg.hidden, kNumGenres, true, mix_seed(cfg.seed, 0x4e00))};
}

/// Mean cross entropy over the selected clips.
inline double genre_loss(GenreModel& m, const GenreData& d, const std::vector<int>& ids, bool backward) {
    if (backward)
        for (auto& p : m.net.params) p.zero_grad();
    double loss = 0.0;
    for (const auto& group : detail::length_groups(d.inputs, ids)) {
        std::vector<const diff::Tensor*> xs;
        std::vector<int> cls;
        for (int i : group) xs.push_back(&d.inputs[i]), cls.push_back(d.genres[i]);
        diff::Graph g;
        const diff::Var z = detail::genre_forward(g, m.net, g.constant(detail::stack_batch(xs)));
        const diff::Var l = diff::scale(diff::ce_loss(z, cls), static_cast<double>(group.size()) / ids.size());
        loss += g.value(l).item();
        if (backward) g.backward(l);
    }
    return loss;
}

inline GenreTraining train_genre(const std::vector<LabelSeq>& clips, const RecognizeConfig& cfg = {}) {
    cfg.validate();
    require(!clips.empty(), "genre: no training clips");
    const GenreData d = genre_data(clips);
    GenreTraining r{make_genre_model(cfg), {}};
    r.log = detail::fit(r.model.net, static_cast<int>(clips.size()), cfg, mix_seed(cfg.seed, 0x4f00),
                        [&](const std::vector<int>& ids, bool bw) { return genre_loss(r.model, d, ids, bw); });
    return r;
}

inline std::vector<double> genre_logits(const GenreModel& model, const LabelSeq& labels) {
    SequenceNet net = model.net;
    diff::Graph g;
    const diff::Var z = detail::genre_forward(g, net, g.constant(genre_features(labels)));
    const auto v = g.value(z).values();
    return {v.begin(), v.end()};
}

/// Argmax over the 9 genres; ties go to the lower index.
inline int predict_genre(const GenreModel& model, const LabelSeq& labels) {
    const auto z = genre_logits(model, labels);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

} // namespace dancelift
