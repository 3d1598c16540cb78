#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "signseq/landmarks.hpp"
#include "signseq/matrix.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// Portable draws; std distributions differ between standard libraries.
double uniform(std::mt19937_64& rng, double lo, double hi);
double gaussian(std::mt19937_64& rng);

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::string read_file(const fs::path& p);

// Every point uniform in a box, depth centred on zero.
signseq::LandmarkFrame random_frame(std::mt19937_64& rng, double missing_hand_rate = 0.0);

signseq::TrialSequence random_trial(std::mt19937_64& rng, std::size_t frames, double missing_hand_rate = 0.0);

// A plausible signing trial: body at rest, dominant hand tracing a
// class-specific loop, the other hand idle and often undetected. Left
// dominant trials are the mirror image about the shoulder midpoint.
struct SignOptions {
    int word_class = 0;
    int class_count = 3;
    int signer = 1;
    int trial_index = 1;
    signseq::Dominance dominance = signseq::Dominance::Right;
    std::size_t frames = 20;
    double noise = 0.004;
    std::uint64_t seed = 0;
};
signseq::TrialSequence synthetic_sign(const SignOptions& opt);

// Writes landmarks/U{s}W{w}F.lmk streams and annotations/U{s}.txt under root.
struct DatasetOptions {
    std::vector<int> signers{1, 2, 3, 4};
    int class_count = 3;
    int trials_per_video = 3;
    std::set<int> left_signers{3};
    std::set<int> fps15_signers{2};
    std::set<int> fps24_signers{};
    std::size_t min_frames = 12;
    std::size_t max_frames = 22;
    std::uint64_t seed = 7;
};
void write_synthetic_dataset(const fs::path& root, const DatasetOptions& opt);

// ---------------------------------------------------------------- oracles

// Minimum warping cost over every monotone path, found by depth-first path
// enumeration. Branches are cut only once their partial cost can no longer
// beat the best complete path, so the result is exact.
double dtw_paths_oracle(std::span<const double> a, std::span<const double> b);

// Linear SVM dual with an augmented unit feature,
//   min 0.5 a'Qa - sum(a), 0 <= a <= C, Q_ij = y_i y_j (x_i.x_j + 1),
// solved two ways that share nothing with the library solver.
double svm_dual_value(const signseq::FeatureMatrix& x, std::span<const int> y, std::span<const double> a);
double svm_dual_active_set_oracle(const signseq::FeatureMatrix& x, std::span<const int> y, double C);
double svm_dual_grid_oracle(const signseq::FeatureMatrix& x, std::span<const int> y, double C);

}  // namespace testsupport
