#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "signseq/landmarks.hpp"

namespace signseq {

/// Local origin a landmark is expressed against before quantisation.
enum class Origin {
    WristSameHand,     // hand block's own wrist landmark
    Nose,              // pose nose
    ShoulderSameSide,  // pose shoulder on the same side
    HeelSameSide,      // pose heel on the same side
    Global,            // calibrated coordinates kept as they are
    Ignored,           // zeroed, coded as level 0 on every axis
};

/// Quantisation group; each carries its own level counts and ranges.
enum class QuantGroup { Hand = 0, Face = 1, Body = 2, Ignored = 3 };
inline constexpr std::size_t kQuantGroupCount = 4;

struct ParentTable {
    std::array<Origin, kLandmarkCount> origin{};
    std::array<QuantGroup, kLandmarkCount> group{};
};

/// Hands to their wrist, face mesh to the nose, elbows and pose arm points to
/// the shoulder, ankles to the heel; shoulders and heels global; head and leg
/// pose points ignored.
ParentTable default_parent_table();

struct AxisQuant {
    int levels = 1;
    double lo = -1.0;
    double hi = 1.0;
};

struct GroupQuant {
    AxisQuant x, y, d;
};

struct QuantScheme {
    std::array<GroupQuant, kQuantGroupCount> groups{};

    GroupQuant& operator[](QuantGroup g) { return groups[static_cast<std::size_t>(g)]; }
    const GroupQuant& operator[](QuantGroup g) const { return groups[static_cast<std::size_t>(g)]; }
};

/// Hands (10, 10, 5), face (5, 5, 3), body (5, 5, 3), ignored (1, 1, 1).
QuantScheme default_scheme();

/// Throws SchemeError when an axis has fewer than one level, or more than
/// one level over an empty range.
void validate(const QuantScheme& scheme);

/// floor((v - lo) * L / (hi - lo)) clamped to [0, L).
int quantize_axis(double v, double lo, double hi, int levels);
inline int quantize_axis(double v, const AxisQuant& q) { return quantize_axis(v, q.lo, q.hi, q.levels); }

/// Re-expresses each landmark relative to its origin. A point whose origin is
/// undetected becomes undetected itself.
LandmarkFrame to_local(const LandmarkFrame& frame, const ParentTable& table);

/// Per selected landmark (qx, qy, qd).
struct KeyframeCode {
    std::vector<std::array<int, 3>> levels;
    friend bool operator==(const KeyframeCode&, const KeyframeCode&) = default;
};

KeyframeCode encode_frame(const LandmarkFrame& frame, const ParentTable& table, const QuantScheme& scheme,
                          FeatureSet set);

std::vector<KeyframeCode> encode_sequence(const TrialSequence& trial, const ParentTable& table,
                                          const QuantScheme& scheme, FeatureSet set);

/// Hyphen-joined decimal levels, e.g. "5-5-2-0-0-0-...".
std::string code_to_token(const KeyframeCode& code);

/// Levels as real-valued features, 3 per selected landmark.
FeatureSequence rq_features(const TrialSequence& trial, const ParentTable& table, const QuantScheme& scheme,
                            FeatureSet set);

/// Data-driven ranges: for every non-ignored group and axis with more than one
/// level, [lo, hi) spans the given percentiles of the local coordinates of
/// detected points across the trials.
QuantScheme fit_scheme_ranges(std::span<const TrialSequence> trials, const ParentTable& table,
                              QuantScheme scheme, double lo_percentile = 0.01, double hi_percentile = 0.99);

nlohmann::json to_json(const QuantScheme& scheme, const ParentTable& table);
std::pair<QuantScheme, ParentTable> rq_config_from_json(const nlohmann::json& doc);

}  // namespace signseq
