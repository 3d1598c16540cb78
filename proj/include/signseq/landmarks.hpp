#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace signseq {

// Holistic landmark layout. Every frame stores the four blocks in this order.
inline constexpr std::size_t kPoseCount = 33;
inline constexpr std::size_t kFaceCount = 468;
inline constexpr std::size_t kHandCount = 21;
inline constexpr std::size_t kLandmarkCount = kPoseCount + kFaceCount + 2 * kHandCount;

inline constexpr std::size_t kPoseBegin = 0;
inline constexpr std::size_t kFaceBegin = kPoseBegin + kPoseCount;
inline constexpr std::size_t kLeftHandBegin = kFaceBegin + kFaceCount;
inline constexpr std::size_t kRightHandBegin = kLeftHandBegin + kHandCount;

static_assert(kLandmarkCount == 543);
static_assert(kLeftHandBegin == 501 && kRightHandBegin == 522);

/// Pose keypoint indices (BlazePose topology).
namespace pose {
enum : std::size_t {
    Nose = 0,
    LeftEyeInner, LeftEye, LeftEyeOuter, RightEyeInner, RightEye, RightEyeOuter,
    LeftEar, RightEar, MouthLeft, MouthRight,
    LeftShoulder = 11, RightShoulder,
    LeftElbow, RightElbow,
    LeftWrist, RightWrist,
    LeftPinky, RightPinky,
    LeftIndex, RightIndex,
    LeftThumb, RightThumb,
    LeftHip, RightHip,
    LeftKnee, RightKnee,
    LeftAnkle, RightAnkle,
    LeftHeel, RightHeel,
    LeftFootIndex, RightFootIndex,
};
}  // namespace pose

/// Hand landmark 0 of each hand block is the wrist.
inline constexpr std::size_t kHandWrist = 0;

/// One tracked keypoint. All-zero is the "not detected" sentinel.
struct LandmarkPoint {
    double x = 0.0;
    double y = 0.0;
    double d = 0.0;

    bool missing() const noexcept { return x == 0.0 && y == 0.0 && d == 0.0; }
    friend bool operator==(const LandmarkPoint&, const LandmarkPoint&) = default;
};

struct LandmarkFrame {
    std::array<LandmarkPoint, kLandmarkCount> points{};

    LandmarkPoint& operator[](std::size_t i) { return points[i]; }
    const LandmarkPoint& operator[](std::size_t i) const { return points[i]; }
    friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

enum class Dominance : std::uint8_t { Right = 0, Left = 1 };
enum class CameraView : std::uint8_t { Front, Lateral };

/// One repetition of one sign word by one signer.
struct TrialSequence {
    std::vector<LandmarkFrame> frames;
    int signer = 0;      // U-number, 1..18 in the published corpus
    int word_class = 0;  // class index 0..59
    int trial_index = 1;
    Dominance dominance = Dominance::Right;
    int fps = 30;
    CameraView view = CameraView::Front;
};

enum class FeatureSet { Full543, PoseHands75 };

/// Canonical landmark indices included in a feature set, ascending.
std::span<const std::size_t> selected_points(FeatureSet set);

/// Scalars per frame: 3 per selected landmark.
std::size_t feature_width(FeatureSet set);

/// Flattened (x, y, d) of the selected landmarks in canonical order.
std::vector<double> select_features(const LandmarkFrame& frame, FeatureSet set);

/// Fraction of hand landmarks that are the missing sentinel across every
/// frame of every trial. Throws EmptyInputError for no trials or no frames.
double missing_hand_rate(std::span<const TrialSequence> trials);

std::string to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view text);
std::string to_string(Dominance dominance);

/// Frame-major feature matrix of one trial. Rows at or beyond `length` are
/// padding and carry no signal.
struct FeatureSequence {
    std::size_t width = 0;
    std::size_t length = 0;
    std::vector<double> values;

    std::size_t rows() const noexcept { return width == 0 ? 0 : values.size() / width; }
    std::span<const double> row(std::size_t t) const { return {values.data() + t * width, width}; }
    std::span<double> row(std::size_t t) { return {values.data() + t * width, width}; }
    double at(std::size_t t, std::size_t c) const { return values[t * width + c]; }
};

FeatureSequence to_features(const TrialSequence& trial, FeatureSet set);

}  // namespace signseq
