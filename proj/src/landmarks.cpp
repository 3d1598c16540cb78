#include "signseq/landmarks.hpp"

#include <algorithm>

#include "signseq/errors.hpp"

namespace signseq {
namespace {

std::vector<std::size_t> make_full() {
    std::vector<std::size_t> v(kLandmarkCount);
    for (std::size_t i = 0; i < kLandmarkCount; ++i) v[i] = i;
    return v;
}

std::vector<std::size_t> make_pose_hands() {
    std::vector<std::size_t> v;
    v.reserve(kPoseCount + 2 * kHandCount);
    for (std::size_t i = 0; i < kPoseCount; ++i) v.push_back(kPoseBegin + i);
    for (std::size_t i = 0; i < 2 * kHandCount; ++i) v.push_back(kLeftHandBegin + i);
    return v;
}

}  // namespace

std::span<const std::size_t> selected_points(FeatureSet set) {
    static const std::vector<std::size_t> full = make_full();
    static const std::vector<std::size_t> pose_hands = make_pose_hands();
    return set == FeatureSet::Full543 ? std::span<const std::size_t>(full)
                                      : std::span<const std::size_t>(pose_hands);
}

std::size_t feature_width(FeatureSet set) { return 3 * selected_points(set).size(); }

std::vector<double> select_features(const LandmarkFrame& frame, FeatureSet set) {
    const auto idx = selected_points(set);
    std::vector<double> out;
    out.reserve(3 * idx.size());
    for (std::size_t i : idx) {
        const auto& p = frame[i];
        out.push_back(p.x);
        out.push_back(p.y);
        out.push_back(p.d);
    }
    return out;
}

double missing_hand_rate(std::span<const TrialSequence> trials) {
    std::size_t missing = 0, total = 0;
    for (const auto& trial : trials) {
        for (const auto& frame : trial.frames) {
            for (std::size_t i = kLeftHandBegin; i < kLandmarkCount; ++i)
                missing += frame[i].missing() ? 1 : 0;
            total += 2 * kHandCount;
        }
    }
    if (total == 0) throw EmptyInputError("missing_hand_rate: no frames");
    return static_cast<double>(missing) / static_cast<double>(total);
}

std::string to_string(FeatureSet set) {
    return set == FeatureSet::Full543 ? "full543" : "posehands75";
}

FeatureSet parse_feature_set(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "full543" || s == "full" || s == "543") return FeatureSet::Full543;
    if (s == "posehands75" || s == "posehands" || s == "75") return FeatureSet::PoseHands75;
    throw ConfigError("features", "unknown feature set '" + std::string(text) + "'");
}

std::string to_string(Dominance dominance) { return dominance == Dominance::Left ? "LH" : "RH"; }

FeatureSequence to_features(const TrialSequence& trial, FeatureSet set) {
    FeatureSequence out;
    out.width = feature_width(set);
    out.length = trial.frames.size();
    out.values.reserve(out.width * trial.frames.size());
    for (const auto& frame : trial.frames) {
        auto row = select_features(frame, set);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    return out;
}

}  // namespace signseq
