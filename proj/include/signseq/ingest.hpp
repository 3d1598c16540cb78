#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signseq/landmarks.hpp"

namespace signseq {

/// Annotator record for one trial inside a video. Frame numbers are 0-based
/// indices into the video's landmark stream.
struct TrialAnnotation {
    int signer = 0;
    int word_class = 0;
    int trial_index = 1;
    CameraView view = CameraView::Front;
    Dominance dominance = Dominance::Right;
    int fps = 30;
    int frame_intention = 0;
    int frame_actual_start = 0;
    int frame_gesture_end = 0;
    int frame_withdrawal = 0;
};

/// Parses whitespace-separated annotation lines:
///
///   signer word trial view(F|L) dominance(RH|LH) fps intention start end withdrawal
///   U11    W1   1     F          RH               30  12        15    40  46
///
/// Blank lines and lines starting with '#' are skipped.
std::vector<TrialAnnotation> parse_annotation(std::string_view text);

/// JSON form: an array of objects keyed by signer_id, word_label, trial_index,
/// camera_view, dominance, fps, frame_intention, frame_actual_start,
/// frame_gesture_end, frame_withdrawal.
std::vector<TrialAnnotation> parse_annotation_json(std::string_view text);

/// Which annotated frame pair bounds the classified segment.
enum class SegmentBounds { ActualStartToGestureEnd, IntentionToWithdrawal };

/// Cuts trials out of one video's frame stream; bounds are inclusive.
std::vector<TrialSequence> segment_trials(std::span<const LandmarkFrame> stream,
                                          std::span<const TrialAnnotation> annotations,
                                          SegmentBounds bounds = SegmentBounds::ActualStartToGestureEnd);

/// Metadata encoded in a video filename such as "U11W1F.mp4".
struct VideoName {
    int signer = 0;
    int word_class = 0;
    CameraView view = CameraView::Front;
};
std::optional<VideoName> parse_video_name(std::string_view filename);
std::string video_stem(int signer, int word_class, CameraView view);

struct DatasetStats {
    std::size_t trial_count = 0;
    std::size_t max_frames = 0;
    std::size_t min_frames = 0;
    double avg_frames = 0.0;
    std::size_t right_hand_instances = 0;
    std::size_t left_hand_instances = 0;
};

DatasetStats compute_stats(std::span<const TrialSequence> trials);

struct SplitSpec {
    std::set<int> test_signers{4, 8};
};

struct Split {
    std::vector<TrialSequence> train;
    std::vector<TrialSequence> test;
};

Split split_by_signer(std::vector<TrialSequence> trials, const SplitSpec& spec);

/// Index form of the split, for callers that keep trials in place.
bool is_test_signer(int signer, const SplitSpec& spec);

}  // namespace signseq
