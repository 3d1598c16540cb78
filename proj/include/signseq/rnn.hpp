#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "signseq/landmarks.hpp"

namespace signseq {

struct RnnDims {
    std::size_t input = 0;
    std::size_t hidden = 128;     // per direction
    std::size_t attention = 128;  // additive attention projection
    std::size_t classes = 60;
};

struct RnnConfig {
    std::size_t hidden = 128;
    std::size_t attention = 128;
    double dropout = 0.3;
    double learning_rate = 3e-5;
    std::size_t batch_size = 64;
    int max_epochs = 200;
    std::optional<int> early_stop_patience;
    std::uint64_t seed = 0;
    bool mask_padding = true;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    int jobs = 1;
};

/// Bidirectional LSTM, additive attention pooling over time, dense softmax
/// head. All parameters live in one flat vector; `RnnModel::Layout` gives
/// each block's offset.
///
///   h_t   = [lstm_fwd(x)_t ; lstm_bwd(x)_t]
///   e_t   = v . tanh(W_a h_t + b_a)          over valid frames only
///   a     = softmax(e),  ctx = sum_t a_t h_t
///   p     = softmax(W_o ctx + b_o)
///
/// LSTM gates are stacked [input, forget, cell, output].
struct RnnModel {
    RnnDims dims;
    bool mask_padding = true;
    std::vector<double> params;

    struct Layout {
        std::size_t fwd_wx, fwd_wh, fwd_b;
        std::size_t bwd_wx, bwd_wh, bwd_b;
        std::size_t att_w, att_b, att_v;
        std::size_t out_w, out_b;
        std::size_t total;
    };
    static Layout layout(const RnnDims& dims);
};

/// Glorot-uniform weights, zero biases, forget-gate bias 1.
RnnModel init_rnn(const RnnDims& dims, std::uint64_t seed, bool mask_padding = true);

struct RnnOutput {
    std::vector<double> probabilities;  // classes
    std::vector<double> attention;      // one weight per row of the input
};

/// Inference pass (no dropout).
RnnOutput predict_rnn(const RnnModel& model, const FeatureSequence& sample);

/// Argmax class, ties to the lowest index.
int classify_rnn(const RnnModel& model, const FeatureSequence& sample);

/// Deliberate backprop defects used to show the gradient check has teeth.
enum class GradientFault { None, ForgetGateDerivative };

struct BackpropOptions {
    double dropout = 0.0;
    std::uint64_t dropout_seed = 0;
    GradientFault fault = GradientFault::None;
};

/// Cross-entropy loss of one sample; adds d(loss)/d(params) into `grad`.
double loss_and_gradient(const RnnModel& model, const FeatureSequence& sample, int label,
                         std::span<double> grad, const BackpropOptions& options = {});

/// Loss without dropout and without gradient.
double sample_loss(const RnnModel& model, const FeatureSequence& sample, int label);

/// Max over all parameters of |analytic - numeric| / max(|analytic| + |numeric|, floor),
/// numeric from central differences with step `h`.
double gradient_check(const RnnModel& model, const FeatureSequence& sample, int label,
                      GradientFault fault = GradientFault::None, double h = 1e-5, double floor = 1e-8);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> validation_loss;
};

struct RnnTrainResult {
    RnnModel model;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    bool early_stopped = false;
};

/// Mini-batch Adam on mean cross-entropy. With a validation set and
/// `early_stop_patience`, stops once validation loss has not improved for
/// that many epochs. Throws DivergenceError on a non-finite loss.
RnnTrainResult train_rnn(std::span<const FeatureSequence> samples, std::span<const int> labels,
                         const RnnConfig& config, std::size_t class_count,
                         std::span<const FeatureSequence> validation = {},
                         std::span<const int> validation_labels = {});

/// Mean loss over a set, inference mode.
double mean_loss(const RnnModel& model, std::span<const FeatureSequence> samples, std::span<const int> labels);

/// "RNN1" | u32 version | u32 input | u32 hidden | u32 attention | u32 classes
/// | u8 mask_padding | u64 count | count x f64 params
void save_rnn(const RnnModel& model, const std::filesystem::path& path);
RnnModel load_rnn(const std::filesystem::path& path);

}  // namespace signseq
