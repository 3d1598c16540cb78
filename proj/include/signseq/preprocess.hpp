#pragma once

#include <vector>

#include "signseq/landmarks.hpp"

namespace signseq {

struct CalibrationOptions {
    bool translate_depth = true;  // false: translate x and y only
};

/// Re-centres every trial of one video on the shoulder midpoint of the
/// video's reference frame: the first frame of the first trial, or the
/// earliest later frame in which both shoulders were detected. Missing
/// points stay at the zero sentinel. Throws CalibrationError when no frame
/// of the video has both shoulders.
std::vector<TrialSequence> calibrate_video(std::vector<TrialSequence> trials,
                                           const CalibrationOptions& options = {});

/// Converts 15 and 24 fps trials to 30 fps by frame duplication. At 15 fps
/// every frame is doubled; at 24 fps source frames 3, 7, 11, ... are doubled
/// in place. Throws FpsError for any other rate.
TrialSequence correct_frame_rate(TrialSequence trial);

struct FlipOptions {
    bool mirror_pose = false;  // also mirror and swap left/right pose keypoints
};

/// Mirrors a calibrated trial about x = 0: hand x is negated and the two hand
/// blocks trade places. Face and pose are untouched unless `mirror_pose`.
/// Toggles the dominance tag.
TrialSequence flip_dominance(TrialSequence trial, const FlipOptions& options = {});

enum class TemporalMode { Padded, Prolonged };
enum class DominanceMode { Original, Flipped };

inline constexpr std::size_t kDefaultTargetLength = 164;

struct VariantConfig {
    TemporalMode temporal = TemporalMode::Padded;
    DominanceMode dominance = DominanceMode::Original;
    std::size_t target_len = kDefaultTargetLength;
};

/// FLIPPED variant: left-dominant trials are flipped to right dominance,
/// right-dominant trials pass through.
TrialSequence apply_dominance(TrialSequence trial, DominanceMode mode, const FlipOptions& options = {});

/// Brings a trial to exactly `config.target_len` frames, either by appending
/// all-zero frames or by uniform duplication (output frame j = source frame
/// floor(j * n / target_len)). Throws LengthError if the trial is longer.
TrialSequence apply_variant_temporal(TrialSequence trial, const VariantConfig& config);

/// Same rule on a feature matrix. Padding keeps `length` at the source frame
/// count so downstream masks can skip the tail; prolonging marks every row
/// valid.
FeatureSequence apply_variant_temporal(const FeatureSequence& seq, const VariantConfig& config);

/// Source frame index feeding output frame `j` when prolonging n frames.
inline std::size_t prolong_source(std::size_t j, std::size_t n, std::size_t target_len) {
    return j * n / target_len;
}

}  // namespace signseq
