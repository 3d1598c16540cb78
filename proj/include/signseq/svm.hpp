#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "signseq/landmarks.hpp"
#include "signseq/matrix.hpp"

namespace signseq {

/// Frame-major concatenation of a fixed-length sequence. Throws LengthError
/// unless it has exactly `frames` rows.
std::vector<double> flatten_trial(const FeatureSequence& seq, std::size_t frames = 164);
std::vector<double> flatten_trial(const TrialSequence& trial, FeatureSet set, std::size_t frames = 164);

struct SvmParams {
    double C = 1.0;
    double tolerance = 1e-4;  // projected-gradient gap at which a machine stops
    int max_epochs = 1000;
    std::uint64_t seed = 0;
    int jobs = 1;
};

/// One binary linear machine trained in the dual. The bias is learned as the
/// weight of a constant unit feature, so the dual has box constraints only:
///
///   min_a  0.5 a'Qa - sum(a),  0 <= a_i <= C,  Q_ij = y_i y_j (x_i.x_j + 1)
struct BinarySvm {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> alpha;
    double dual_objective = 0.0;  // value of the minimised dual above
    int epochs = 0;
    bool converged = false;

    double decision(std::span<const double> x) const;
};

/// `y` holds +1/-1 targets.
BinarySvm train_binary_svm(const FeatureMatrix& x, std::span<const int> y, const SvmParams& params);

/// Dual objective for given multipliers, computed from the Gram matrix.
double svm_dual_objective(const FeatureMatrix& x, std::span<const int> y, std::span<const double> alpha);

/// One-vs-rest linear SVM over class indices 0..class_count-1.
struct SvmModel {
    std::size_t width = 0;
    std::size_t class_count = 0;
    double C = 1.0;
    std::vector<double> weights;  // class-major, class_count x width
    std::vector<double> bias;

    std::span<const double> class_weights(std::size_t k) const { return {weights.data() + k * width, width}; }
};

/// Throws DegenerateLabelsError when fewer than two classes are present.
SvmModel train_svm(const FeatureMatrix& x, std::span<const int> labels, const SvmParams& params,
                   std::size_t class_count = 0);

std::vector<double> decision_values(const SvmModel& model, std::span<const double> x);

/// Argmax of the decision values; ties go to the lowest class index.
int predict_svm(const SvmModel& model, std::span<const double> x);

/// "SVM1" | u32 class_count | u32 width | f64 C | per class: width f64 weights, f64 bias.
void save_svm(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_svm(const std::filesystem::path& path);

}  // namespace signseq
