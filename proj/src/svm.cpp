#include "signseq/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "binary.hpp"
#include "random.hpp"
#include "signseq/errors.hpp"
#include "signseq/parallel.hpp"

namespace signseq {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

std::vector<double> flatten_trial(const FeatureSequence& seq, std::size_t frames) {
    if (seq.rows() != frames)
        throw LengthError("flatten_trial: expected " + std::to_string(frames) + " frames, got " +
                          std::to_string(seq.rows()));
    return seq.values;
}

std::vector<double> flatten_trial(const TrialSequence& trial, FeatureSet set, std::size_t frames) {
    return flatten_trial(to_features(trial, set), frames);
}

double BinarySvm::decision(std::span<const double> x) const { return dot(weights, x) + bias; }

BinarySvm train_binary_svm(const FeatureMatrix& x, std::span<const int> y, const SvmParams& params) {
    if (y.size() != x.rows) throw InvariantError("train_binary_svm: label count does not match rows");
    if (!(params.C > 0.0)) throw InvariantError("train_binary_svm: C must be positive");
    const std::size_t n = x.rows, dim = x.cols;

    BinarySvm m;
    m.weights.assign(dim, 0.0);
    m.alpha.assign(n, 0.0);
    std::vector<double> qii(n);
    for (std::size_t i = 0; i < n; ++i) qii[i] = dot(x.row(i), x.row(i)) + 1.0;

    std::mt19937_64 rng(params.seed);
    auto order = detail::iota(n);
    const double C = params.C;
    for (m.epochs = 0; m.epochs < params.max_epochs; ++m.epochs) {
        detail::shuffle(order, rng);
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (std::size_t i : order) {
            const auto xi = x.row(i);
            const double yi = y[i];
            const double g = yi * (dot(m.weights, xi) + m.bias) - 1.0;
            double& a = m.alpha[i];
            double pg = g;
            if (a <= 0.0) pg = std::min(g, 0.0);
            else if (a >= C) pg = std::max(g, 0.0);
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (pg == 0.0) continue;
            const double updated = std::clamp(a - g / qii[i], 0.0, C);
            const double delta = (updated - a) * yi;
            a = updated;
            for (std::size_t c = 0; c < dim; ++c) m.weights[c] += delta * xi[c];
            m.bias += delta;
        }
        if (pg_max - pg_min < params.tolerance) {
            m.converged = true;
            ++m.epochs;
            break;
        }
    }
    double sum_alpha = 0.0;
    for (double a : m.alpha) sum_alpha += a;
    m.dual_objective = 0.5 * (dot(m.weights, m.weights) + m.bias * m.bias) - sum_alpha;
    return m;
}

double svm_dual_objective(const FeatureMatrix& x, std::span<const int> y, std::span<const double> alpha) {
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        lin += alpha[i];
        for (std::size_t j = 0; j < x.rows; ++j)
            quad += alpha[i] * alpha[j] * y[i] * y[j] * (dot(x.row(i), x.row(j)) + 1.0);
    }
    return 0.5 * quad - lin;
}

SvmModel train_svm(const FeatureMatrix& x, std::span<const int> labels, const SvmParams& params,
                   std::size_t class_count) {
    if (labels.size() != x.rows) throw InvariantError("train_svm: label count does not match rows");
    std::set<int> present(labels.begin(), labels.end());
    if (present.size() < 2) throw DegenerateLabelsError("train_svm: need at least two classes");
    if (*present.begin() < 0) throw LabelError("train_svm: negative class label");
    if (class_count == 0) class_count = static_cast<std::size_t>(*present.rbegin()) + 1;
    if (static_cast<std::size_t>(*present.rbegin()) >= class_count)
        throw LabelError("train_svm: label exceeds class count");

    SvmModel model;
    model.width = x.cols;
    model.class_count = class_count;
    model.C = params.C;
    model.weights.assign(class_count * x.cols, 0.0);
    model.bias.assign(class_count, -1.0);

    parallel_for(class_count, params.jobs, [&](std::size_t k) {
        // A class absent from the training rows keeps w = 0, b = -1 and never wins
        // against a trained machine with a positive score.
        if (!present.count(static_cast<int>(k))) return;
        std::vector<int> y(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == static_cast<int>(k) ? 1 : -1;
        SvmParams p = params;
        p.seed = params.seed + k;
        BinarySvm b = train_binary_svm(x, y, p);
        std::copy(b.weights.begin(), b.weights.end(), model.weights.begin() + static_cast<std::ptrdiff_t>(k * x.cols));
        model.bias[k] = b.bias;
    });
    return model;
}

std::vector<double> decision_values(const SvmModel& model, std::span<const double> x) {
    if (x.size() != model.width)
        throw LengthError("svm input width " + std::to_string(x.size()) + " != model width " +
                          std::to_string(model.width));
    std::vector<double> out(model.class_count);
    for (std::size_t k = 0; k < model.class_count; ++k) out[k] = dot(model.class_weights(k), x) + model.bias[k];
    return out;
}

int predict_svm(const SvmModel& model, std::span<const double> x) {
    const auto v = decision_values(model, x);
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

void save_svm(const SvmModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    binary::put_magic(out, "SVM1");
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.class_count));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.width));
    binary::put<double>(out, model.C);
    for (std::size_t k = 0; k < model.class_count; ++k) {
        for (double w : model.class_weights(k)) binary::put(out, w);
        binary::put(out, model.bias[k]);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

SvmModel load_svm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (!binary::check_magic(in, "SVM1")) throw FormatError(path.string() + ": bad SVM1 magic");
    std::uint32_t classes = 0, width = 0;
    SvmModel m;
    if (!(binary::get(in, classes) && binary::get(in, width) && binary::get(in, m.C)))
        throw FormatError(path.string() + ": truncated header");
    m.class_count = classes;
    m.width = width;
    m.weights.resize(static_cast<std::size_t>(classes) * width);
    m.bias.resize(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        for (std::size_t c = 0; c < width; ++c)
            if (!binary::get(in, m.weights[k * width + c])) throw TruncationError(path.string() + ": truncated");
        if (!binary::get(in, m.bias[k])) throw TruncationError(path.string() + ": truncated");
    }
    return m;
}

}  // namespace signseq
