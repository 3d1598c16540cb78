#include "signseq/preprocess.hpp"

#include <utility>

#include "signseq/errors.hpp"

namespace signseq {
namespace {

bool shoulders_present(const LandmarkFrame& f) {
    return !f[pose::LeftShoulder].missing() && !f[pose::RightShoulder].missing();
}

constexpr std::pair<std::size_t, std::size_t> kPosePairs[] = {
    {pose::LeftEyeInner, pose::RightEyeInner}, {pose::LeftEye, pose::RightEye},
    {pose::LeftEyeOuter, pose::RightEyeOuter}, {pose::LeftEar, pose::RightEar},
    {pose::MouthLeft, pose::MouthRight},       {pose::LeftShoulder, pose::RightShoulder},
    {pose::LeftElbow, pose::RightElbow},       {pose::LeftWrist, pose::RightWrist},
    {pose::LeftPinky, pose::RightPinky},       {pose::LeftIndex, pose::RightIndex},
    {pose::LeftThumb, pose::RightThumb},       {pose::LeftHip, pose::RightHip},
    {pose::LeftKnee, pose::RightKnee},         {pose::LeftAnkle, pose::RightAnkle},
    {pose::LeftHeel, pose::RightHeel},         {pose::LeftFootIndex, pose::RightFootIndex},
};

void mirror(LandmarkPoint& p) {
    if (!p.missing()) p.x = -p.x;
}

}  // namespace

std::vector<TrialSequence> calibrate_video(std::vector<TrialSequence> trials,
                                           const CalibrationOptions& options) {
    const LandmarkFrame* reference = nullptr;
    for (const auto& t : trials) {
        for (const auto& f : t.frames) {
            if (shoulders_present(f)) {
                reference = &f;
                break;
            }
        }
        if (reference) break;
    }
    if (!reference) throw CalibrationError("no frame in the video has both shoulders");

    const auto& l = (*reference)[pose::LeftShoulder];
    const auto& r = (*reference)[pose::RightShoulder];
    const double cx = 0.5 * (l.x + r.x);
    const double cy = 0.5 * (l.y + r.y);
    const double cd = options.translate_depth ? 0.5 * (l.d + r.d) : 0.0;

    for (auto& t : trials) {
        for (auto& f : t.frames) {
            for (auto& p : f.points) {
                if (p.missing()) continue;
                p.x -= cx;
                p.y -= cy;
                p.d -= cd;
            }
        }
    }
    return trials;
}

TrialSequence correct_frame_rate(TrialSequence trial) {
    if (trial.fps == 30) return trial;
    if (trial.fps != 15 && trial.fps != 24)
        throw FpsError("unsupported frame rate " + std::to_string(trial.fps));
    std::vector<LandmarkFrame> out;
    const std::size_t n = trial.frames.size();
    if (trial.fps == 15) {
        out.reserve(2 * n);
        for (const auto& f : trial.frames) {
            out.push_back(f);
            out.push_back(f);
        }
    } else {
        out.reserve(n + n / 4);
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(trial.frames[i]);
            if (i % 4 == 3) out.push_back(trial.frames[i]);
        }
    }
    trial.frames = std::move(out);
    trial.fps = 30;
    return trial;
}

TrialSequence flip_dominance(TrialSequence trial, const FlipOptions& options) {
    for (auto& f : trial.frames) {
        for (std::size_t i = 0; i < kHandCount; ++i) {
            auto& left = f[kLeftHandBegin + i];
            auto& right = f[kRightHandBegin + i];
            mirror(left);
            mirror(right);
            std::swap(left, right);
        }
        if (options.mirror_pose) {
            for (std::size_t i = 0; i < kPoseCount; ++i) mirror(f[kPoseBegin + i]);
            for (auto [a, b] : kPosePairs) std::swap(f[a], f[b]);
        }
    }
    trial.dominance = trial.dominance == Dominance::Left ? Dominance::Right : Dominance::Left;
    return trial;
}

TrialSequence apply_dominance(TrialSequence trial, DominanceMode mode, const FlipOptions& options) {
    if (mode == DominanceMode::Flipped && trial.dominance == Dominance::Left)
        return flip_dominance(std::move(trial), options);
    return trial;
}

TrialSequence apply_variant_temporal(TrialSequence trial, const VariantConfig& config) {
    const std::size_t n = trial.frames.size();
    const std::size_t target = config.target_len;
    if (n == 0) throw LengthError("trial has no frames");
    if (n > target)
        throw LengthError("trial has " + std::to_string(n) + " frames, target is " + std::to_string(target));
    if (config.temporal == TemporalMode::Padded) {
        trial.frames.resize(target);
    } else {
        std::vector<LandmarkFrame> out(target);
        for (std::size_t j = 0; j < target; ++j) out[j] = trial.frames[prolong_source(j, n, target)];
        trial.frames = std::move(out);
    }
    return trial;
}

FeatureSequence apply_variant_temporal(const FeatureSequence& seq, const VariantConfig& config) {
    const std::size_t n = seq.length;
    const std::size_t target = config.target_len;
    if (n == 0) throw LengthError("sequence has no frames");
    if (n > target)
        throw LengthError("sequence has " + std::to_string(n) + " frames, target is " + std::to_string(target));
    FeatureSequence out;
    out.width = seq.width;
    out.values.assign(target * seq.width, 0.0);
    if (config.temporal == TemporalMode::Padded) {
        std::copy(seq.values.begin(), seq.values.begin() + n * seq.width, out.values.begin());
        out.length = n;
    } else {
        for (std::size_t j = 0; j < target; ++j) {
            auto src = seq.row(prolong_source(j, n, target));
            std::copy(src.begin(), src.end(), out.row(j).begin());
        }
        out.length = target;
    }
    return out;
}

}  // namespace signseq
