#include "signseq/rnn.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "binary.hpp"
#include "random.hpp"
#include "signseq/errors.hpp"
#include "signseq/parallel.hpp"

namespace signseq {
namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::Map<const Mat>;
using CVec = Eigen::Map<const Vec>;
using MMat = Eigen::Map<Mat>;
using MVec = Eigen::Map<Vec>;

Vec sigmoid(const Vec& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

struct Lstm {
    CMat wx, wh;
    CVec b;
};

struct LstmGrad {
    MMat wx, wh;
    MVec b;
};

struct DirectionTrace {
    Mat gates;  // 4H x L, post-activation
    Mat c;      // H x L
    Mat tanh_c;
    Mat h;
};

struct Trace {
    Eigen::Index steps = 0;
    Mat x;  // D x L
    DirectionTrace fwd, bwd;
    Mat keep_hidden;  // 2H x L dropout scale, empty when inactive
    Vec keep_context;
    Mat states;       // 2H x L after dropout
    Mat proj;         // A x L, tanh(W_a h + b_a)
    Vec attention;    // L
    Vec context;      // 2H before dropout
    Vec context_in;   // 2H after dropout
    Vec probs;
};

struct Views {
    Lstm fwd, bwd;
    CMat att_w;
    CVec att_b, att_v;
    CMat out_w;
    CVec out_b;
};

Views views(const RnnModel& m) {
    const auto L = RnnModel::layout(m.dims);
    const auto D = static_cast<Eigen::Index>(m.dims.input);
    const auto H = static_cast<Eigen::Index>(m.dims.hidden);
    const auto A = static_cast<Eigen::Index>(m.dims.attention);
    const auto K = static_cast<Eigen::Index>(m.dims.classes);
    const double* p = m.params.data();
    return {{CMat(p + L.fwd_wx, 4 * H, D), CMat(p + L.fwd_wh, 4 * H, H), CVec(p + L.fwd_b, 4 * H)},
            {CMat(p + L.bwd_wx, 4 * H, D), CMat(p + L.bwd_wh, 4 * H, H), CVec(p + L.bwd_b, 4 * H)},
            CMat(p + L.att_w, A, 2 * H),
            CVec(p + L.att_b, A),
            CVec(p + L.att_v, A),
            CMat(p + L.out_w, K, 2 * H),
            CVec(p + L.out_b, K)};
}

struct GradViews {
    LstmGrad fwd, bwd;
    MMat att_w;
    MVec att_b, att_v;
    MMat out_w;
    MVec out_b;
};

GradViews grad_views(const RnnModel& m, std::span<double> g) {
    const auto L = RnnModel::layout(m.dims);
    const auto D = static_cast<Eigen::Index>(m.dims.input);
    const auto H = static_cast<Eigen::Index>(m.dims.hidden);
    const auto A = static_cast<Eigen::Index>(m.dims.attention);
    const auto K = static_cast<Eigen::Index>(m.dims.classes);
    double* p = g.data();
    return {{MMat(p + L.fwd_wx, 4 * H, D), MMat(p + L.fwd_wh, 4 * H, H), MVec(p + L.fwd_b, 4 * H)},
            {MMat(p + L.bwd_wx, 4 * H, D), MMat(p + L.bwd_wh, 4 * H, H), MVec(p + L.bwd_b, 4 * H)},
            MMat(p + L.att_w, A, 2 * H),
            MVec(p + L.att_b, A),
            MVec(p + L.att_v, A),
            MMat(p + L.out_w, K, 2 * H),
            MVec(p + L.out_b, K)};
}

void run_lstm(const Lstm& net, const Mat& x, bool reverse, DirectionTrace& tr) {
    const Eigen::Index H = net.wh.cols(), L = x.cols();
    Mat z_in = net.wx * x;
    z_in.colwise() += net.b;
    tr.gates.resize(4 * H, L);
    tr.c.resize(H, L);
    tr.tanh_c.resize(H, L);
    tr.h.resize(H, L);
    Vec h_prev = Vec::Zero(H), c_prev = Vec::Zero(H);
    for (Eigen::Index s = 0; s < L; ++s) {
        const Eigen::Index t = reverse ? L - 1 - s : s;
        const Vec z = z_in.col(t) + net.wh * h_prev;
        const Vec i = sigmoid(z.segment(0, H));
        const Vec f = sigmoid(z.segment(H, H));
        const Vec g = z.segment(2 * H, H).array().tanh().matrix();
        const Vec o = sigmoid(z.segment(3 * H, H));
        const Vec c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
        const Vec tc = c.array().tanh().matrix();
        tr.gates.col(t) << i, f, g, o;
        tr.c.col(t) = c;
        tr.tanh_c.col(t) = tc;
        tr.h.col(t) = o.cwiseProduct(tc);
        h_prev = tr.h.col(t);
        c_prev = c;
    }
}

void backprop_lstm(const Lstm& net, const Mat& x, bool reverse, const DirectionTrace& tr, const Mat& d_h,
                   LstmGrad& grad, GradientFault fault) {
    const Eigen::Index H = net.wh.cols(), L = x.cols();
    Mat dz_all(4 * H, L);
    Mat h_prev_all = Mat::Zero(H, L);
    Vec dh_next = Vec::Zero(H), dc_next = Vec::Zero(H);
    for (Eigen::Index s = L - 1; s >= 0; --s) {
        const Eigen::Index t = reverse ? L - 1 - s : s;
        const Eigen::Index tp = reverse ? t + 1 : t - 1;
        const bool has_prev = s > 0;
        const auto i = tr.gates.col(t).segment(0, H).array();
        const auto f = tr.gates.col(t).segment(H, H).array();
        const auto g = tr.gates.col(t).segment(2 * H, H).array();
        const auto o = tr.gates.col(t).segment(3 * H, H).array();
        const auto tc = tr.tanh_c.col(t).array();
        const Vec c_prev = has_prev ? Vec(tr.c.col(tp)) : Vec::Zero(H);
        if (has_prev) h_prev_all.col(t) = tr.h.col(tp);

        const Vec dh = d_h.col(t) + dh_next;
        const Vec dc = (dc_next.array() + dh.array() * o * (1.0 - tc * tc)).matrix();
        auto dz = dz_all.col(t);
        dz.segment(0, H) = (dc.array() * g * i * (1.0 - i)).matrix();
        if (fault == GradientFault::ForgetGateDerivative)
            dz.segment(H, H) = (dc.array() * c_prev.array()).matrix();
        else
            dz.segment(H, H) = (dc.array() * c_prev.array() * f * (1.0 - f)).matrix();
        dz.segment(2 * H, H) = (dc.array() * i * (1.0 - g * g)).matrix();
        dz.segment(3 * H, H) = (dh.array() * tc * o * (1.0 - o)).matrix();

        dh_next = net.wh.transpose() * dz;
        dc_next = (dc.array() * f).matrix();
    }
    grad.wx.noalias() += dz_all * x.transpose();
    grad.wh.noalias() += dz_all * h_prev_all.transpose();
    grad.b += dz_all.rowwise().sum();
}

Eigen::Index valid_steps(const RnnModel& m, const FeatureSequence& s) {
    if (s.width != m.dims.input)
        throw LengthError("rnn input width " + std::to_string(s.width) + " != model input " +
                          std::to_string(m.dims.input));
    const std::size_t steps = m.mask_padding ? s.length : s.rows();
    if (steps == 0 || steps > s.rows()) throw LengthError("rnn sample has no valid frames");
    return static_cast<Eigen::Index>(steps);
}

Trace forward(const RnnModel& m, const FeatureSequence& s, const BackpropOptions& opt) {
    const Views v = views(m);
    Trace tr;
    tr.steps = valid_steps(m, s);
    const auto D = static_cast<Eigen::Index>(m.dims.input);
    const auto H = static_cast<Eigen::Index>(m.dims.hidden);
    tr.x = Eigen::Map<const Mat>(s.values.data(), D, tr.steps);

    run_lstm(v.fwd, tr.x, false, tr.fwd);
    run_lstm(v.bwd, tr.x, true, tr.bwd);
    tr.states.resize(2 * H, tr.steps);
    tr.states << tr.fwd.h, tr.bwd.h;

    const bool drop = opt.dropout > 0.0;
    if (drop) {
        std::mt19937_64 rng(opt.dropout_seed);
        const double scale = 1.0 / (1.0 - opt.dropout);
        auto draw = [&] { return detail::uniform01(rng) < opt.dropout ? 0.0 : scale; };
        tr.keep_hidden.resize(2 * H, tr.steps);
        for (Eigen::Index j = 0; j < tr.keep_hidden.size(); ++j) tr.keep_hidden(j) = draw();
        tr.keep_context.resize(2 * H);
        for (Eigen::Index j = 0; j < tr.keep_context.size(); ++j) tr.keep_context(j) = draw();
        tr.states = tr.states.cwiseProduct(tr.keep_hidden);
    }

    tr.proj = v.att_w * tr.states;
    tr.proj.colwise() += v.att_b;
    tr.proj = tr.proj.array().tanh().matrix();
    const Vec scores = tr.proj.transpose() * v.att_v;
    const double top = scores.maxCoeff();
    tr.attention = (scores.array() - top).exp().matrix();
    tr.attention /= tr.attention.sum();
    tr.context = tr.states * tr.attention;
    tr.context_in = drop ? Vec(tr.context.cwiseProduct(tr.keep_context)) : tr.context;

    Vec logits = v.out_w * tr.context_in + v.out_b;
    logits.array() -= logits.maxCoeff();
    tr.probs = logits.array().exp().matrix();
    tr.probs /= tr.probs.sum();
    return tr;
}

double loss_of(const Trace& tr, int label) {
    return -std::log(std::max(tr.probs(label), std::numeric_limits<double>::min()));
}

void check_label(const RnnModel& m, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= m.dims.classes)
        throw LabelError("rnn label " + std::to_string(label) + " out of range");
}

}  // namespace

RnnModel::Layout RnnModel::layout(const RnnDims& d) {
    Layout l{};
    std::size_t off = 0;
    auto take = [&](std::size_t n) {
        const std::size_t at = off;
        off += n;
        return at;
    };
    const std::size_t H = d.hidden, D = d.input, A = d.attention, K = d.classes;
    l.fwd_wx = take(4 * H * D);
    l.fwd_wh = take(4 * H * H);
    l.fwd_b = take(4 * H);
    l.bwd_wx = take(4 * H * D);
    l.bwd_wh = take(4 * H * H);
    l.bwd_b = take(4 * H);
    l.att_w = take(A * 2 * H);
    l.att_b = take(A);
    l.att_v = take(A);
    l.out_w = take(K * 2 * H);
    l.out_b = take(K);
    l.total = off;
    return l;
}

RnnModel init_rnn(const RnnDims& dims, std::uint64_t seed, bool mask_padding) {
    if (dims.input == 0 || dims.hidden == 0 || dims.attention == 0 || dims.classes < 2)
        throw InvariantError("rnn dimensions must be positive with at least two classes");
    RnnModel m;
    m.dims = dims;
    m.mask_padding = mask_padding;
    const auto l = RnnModel::layout(dims);
    m.params.assign(l.total, 0.0);
    std::mt19937_64 rng(seed);
    auto glorot = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
        const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (std::size_t i = 0; i < rows * cols; ++i)
            m.params[offset + i] = (2.0 * detail::uniform01(rng) - 1.0) * limit;
    };
    const std::size_t H = dims.hidden, D = dims.input, A = dims.attention, K = dims.classes;
    glorot(l.fwd_wx, 4 * H, D);
    glorot(l.fwd_wh, 4 * H, H);
    glorot(l.bwd_wx, 4 * H, D);
    glorot(l.bwd_wh, 4 * H, H);
    glorot(l.att_w, A, 2 * H);
    glorot(l.att_v, A, 1);
    glorot(l.out_w, K, 2 * H);
    for (std::size_t j = 0; j < H; ++j) {
        m.params[l.fwd_b + H + j] = 1.0;
        m.params[l.bwd_b + H + j] = 1.0;
    }
    return m;
}

RnnOutput predict_rnn(const RnnModel& model, const FeatureSequence& sample) {
    const Trace tr = forward(model, sample, {});
    RnnOutput out;
    out.probabilities.assign(tr.probs.data(), tr.probs.data() + tr.probs.size());
    out.attention.assign(sample.rows(), 0.0);
    for (Eigen::Index t = 0; t < tr.steps; ++t) out.attention[static_cast<std::size_t>(t)] = tr.attention(t);
    return out;
}

int classify_rnn(const RnnModel& model, const FeatureSequence& sample) {
    const auto p = predict_rnn(model, sample).probabilities;
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double sample_loss(const RnnModel& model, const FeatureSequence& sample, int label) {
    check_label(model, label);
    return loss_of(forward(model, sample, {}), label);
}

double loss_and_gradient(const RnnModel& model, const FeatureSequence& sample, int label,
                         std::span<double> grad, const BackpropOptions& options) {
    check_label(model, label);
    if (grad.size() != model.params.size()) throw LengthError("gradient buffer size mismatch");
    const Trace tr = forward(model, sample, options);
    const Views v = views(model);
    GradViews g = grad_views(model, grad);
    const auto H = static_cast<Eigen::Index>(model.dims.hidden);
    const bool drop = options.dropout > 0.0;

    Vec d_logits = tr.probs;
    d_logits(label) -= 1.0;
    g.out_w.noalias() += d_logits * tr.context_in.transpose();
    g.out_b += d_logits;
    Vec d_context = v.out_w.transpose() * d_logits;
    if (drop) d_context = d_context.cwiseProduct(tr.keep_context);

    // Attention pooling.
    const Vec d_attention = tr.states.transpose() * d_context;
    const double mean = tr.attention.dot(d_attention);
    const Vec d_scores = tr.attention.cwiseProduct((d_attention.array() - mean).matrix());
    Mat d_states = d_context * tr.attention.transpose();
    g.att_v.noalias() += tr.proj * d_scores;
    const Mat d_pre = ((v.att_v * d_scores.transpose()).array() * (1.0 - tr.proj.array().square())).matrix();
    g.att_w.noalias() += d_pre * tr.states.transpose();
    g.att_b += d_pre.rowwise().sum();
    d_states.noalias() += v.att_w.transpose() * d_pre;
    if (drop) d_states = d_states.cwiseProduct(tr.keep_hidden);

    backprop_lstm(v.fwd, tr.x, false, tr.fwd, d_states.topRows(H), g.fwd, options.fault);
    backprop_lstm(v.bwd, tr.x, true, tr.bwd, d_states.bottomRows(H), g.bwd, options.fault);
    return loss_of(tr, label);
}

double gradient_check(const RnnModel& model, const FeatureSequence& sample, int label, GradientFault fault,
                      double h, double floor) {
    std::vector<double> analytic(model.params.size(), 0.0);
    BackpropOptions opt;
    opt.fault = fault;
    loss_and_gradient(model, sample, label, analytic, opt);
    RnnModel probe = model;
    double worst = 0.0;
    for (std::size_t k = 0; k < probe.params.size(); ++k) {
        const double saved = probe.params[k];
        probe.params[k] = saved + h;
        const double up = sample_loss(probe, sample, label);
        probe.params[k] = saved - h;
        const double down = sample_loss(probe, sample, label);
        probe.params[k] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double err = std::abs(analytic[k] - numeric) /
                           std::max(std::abs(analytic[k]) + std::abs(numeric), floor);
        worst = std::max(worst, err);
    }
    return worst;
}

double mean_loss(const RnnModel& model, std::span<const FeatureSequence> samples, std::span<const int> labels) {
    if (samples.empty()) throw EmptyInputError("mean_loss: no samples");
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) total += sample_loss(model, samples[i], labels[i]);
    return total / static_cast<double>(samples.size());
}

RnnTrainResult train_rnn(std::span<const FeatureSequence> samples, std::span<const int> labels,
                         const RnnConfig& config, std::size_t class_count,
                         std::span<const FeatureSequence> validation, std::span<const int> validation_labels) {
    if (samples.empty()) throw EmptyInputError("train_rnn: no samples");
    if (samples.size() != labels.size()) throw InvariantError("train_rnn: label count mismatch");
    if (validation.size() != validation_labels.size()) throw InvariantError("train_rnn: validation label mismatch");
    if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ConfigError("dropout", "must lie in [0, 1)");
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
    if (config.batch_size == 0) throw ConfigError("batch_size", "must be positive");

    RnnDims dims{samples.front().width, config.hidden, config.attention, class_count};
    RnnTrainResult result{init_rnn(dims, config.seed, config.mask_padding), {}, 0, false};
    RnnModel& model = result.model;
    const std::size_t P = model.params.size();
    std::vector<double> m1(P, 0.0), m2(P, 0.0), grad(P);
    std::mt19937_64 order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    auto order = detail::iota(samples.size());
    long step = 0;
    double best = std::numeric_limits<double>::infinity();
    const int jobs = std::max(config.jobs, 1);
    std::vector<std::vector<double>> sample_grads;
    std::vector<double> sample_losses;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        detail::shuffle(order, order_rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            const std::size_t count = end - begin;
            sample_grads.resize(jobs > 1 ? count : 1);
            sample_losses.assign(count, 0.0);
            std::fill(grad.begin(), grad.end(), 0.0);
            auto one = [&](std::size_t j, std::vector<double>& buffer) {
                const std::size_t idx = order[begin + j];
                BackpropOptions opt;
                opt.dropout = config.dropout;
                opt.dropout_seed = config.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(epoch) * 0x9e3779b1ULL + idx;
                buffer.assign(P, 0.0);
                sample_losses[j] = loss_and_gradient(model, samples[idx], labels[idx], buffer, opt);
            };
            if (jobs > 1) {
                parallel_for(count, jobs, [&](std::size_t j) { one(j, sample_grads[j]); });
                for (std::size_t j = 0; j < count; ++j)
                    for (std::size_t k = 0; k < P; ++k) grad[k] += sample_grads[j][k];
            } else {
                for (std::size_t j = 0; j < count; ++j) {
                    one(j, sample_grads[0]);
                    for (std::size_t k = 0; k < P; ++k) grad[k] += sample_grads[0][k];
                }
            }
            for (double l : sample_losses) epoch_loss += l;
            if (!std::isfinite(epoch_loss)) throw DivergenceError(epoch, "non-finite training loss");

            ++step;
            const double inv = 1.0 / static_cast<double>(count);
            const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < P; ++k) {
                const double gk = grad[k] * inv;
                m1[k] = config.beta1 * m1[k] + (1.0 - config.beta1) * gk;
                m2[k] = config.beta2 * m2[k] + (1.0 - config.beta2) * gk * gk;
                model.params[k] -= config.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + config.epsilon);
            }
        }
        EpochStats stats{epoch, epoch_loss / static_cast<double>(samples.size()), std::nullopt};
        if (!validation.empty()) {
            const double vl = mean_loss(model, validation, validation_labels);
            if (!std::isfinite(vl)) throw DivergenceError(epoch, "non-finite validation loss");
            stats.validation_loss = vl;
            if (vl < best) {
                best = vl;
                result.best_epoch = epoch;
            }
        } else {
            result.best_epoch = epoch;
        }
        result.history.push_back(stats);
        if (config.early_stop_patience && !validation.empty() &&
            epoch - result.best_epoch >= *config.early_stop_patience) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

void save_rnn(const RnnModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    binary::put_magic(out, "RNN1");
    binary::put<std::uint32_t>(out, 1);
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.dims.input));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.dims.hidden));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.dims.attention));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.dims.classes));
    binary::put<std::uint8_t>(out, model.mask_padding ? 1 : 0);
    binary::put<std::uint64_t>(out, model.params.size());
    for (double p : model.params) binary::put(out, p);
    if (!out) throw IoError("write failed: " + path.string());
}

RnnModel load_rnn(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (!binary::check_magic(in, "RNN1")) throw FormatError(path.string() + ": bad RNN1 magic");
    std::uint32_t version = 0, input = 0, hidden = 0, attention = 0, classes = 0;
    std::uint8_t masked = 0;
    std::uint64_t count = 0;
    if (!(binary::get(in, version) && binary::get(in, input) && binary::get(in, hidden) &&
          binary::get(in, attention) && binary::get(in, classes) && binary::get(in, masked) &&
          binary::get(in, count)))
        throw FormatError(path.string() + ": truncated header");
    if (version != 1) throw FormatError(path.string() + ": unsupported RNN1 version");
    RnnModel m;
    m.dims = {input, hidden, attention, classes};
    m.mask_padding = masked != 0;
    if (count != RnnModel::layout(m.dims).total) throw FormatError(path.string() + ": parameter count mismatch");
    m.params.resize(count);
    for (double& p : m.params)
        if (!binary::get(in, p)) throw TruncationError(path.string() + ": truncated parameters");
    return m;
}

}  // namespace signseq
