#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "signseq/errors.hpp"
#include "signseq/preprocess.hpp"
#include "support.hpp"

using namespace signseq;

namespace {

TrialSequence numbered(std::size_t n, int fps = 30) {
    TrialSequence t;
    t.fps = fps;
    for (std::size_t i = 0; i < n; ++i) {
        LandmarkFrame f;
        f[0] = {static_cast<double>(i + 1), 0.5, 0.0};
        t.frames.push_back(f);
    }
    return t;
}

double max_abs_diff(const TrialSequence& a, const TrialSequence& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.frames.size(); ++i)
        for (std::size_t p = 0; p < kLandmarkCount; ++p) {
            const auto& u = a.frames[i][p];
            const auto& v = b.frames[i][p];
            m = std::max({m, std::abs(u.x - v.x), std::abs(u.y - v.y), std::abs(u.d - v.d)});
        }
    return m;
}

}  // namespace

TEST_CASE("calibration recentres on the shoulder midpoint") {
    TrialSequence t;
    LandmarkFrame f;
    f[pose::LeftShoulder] = {0.6, 0.5, 0.1};
    f[pose::RightShoulder] = {0.4, 0.5, 0.1};
    f[kFaceBegin] = {0.5, 0.5, 0.1};
    f[kFaceBegin + 1] = {0.7, 0.2, 0.3};
    t.frames.push_back(f);
    const auto out = calibrate_video({t});
    const auto& g = out[0].frames[0];
    CHECK(g[kFaceBegin].x == doctest::Approx(0.0));
    CHECK(g[kFaceBegin].y == doctest::Approx(0.0));
    CHECK(g[kFaceBegin].d == doctest::Approx(0.0));
    CHECK(g[kFaceBegin + 1].x == doctest::Approx(0.2));
    CHECK(g[kFaceBegin + 1].y == doctest::Approx(-0.3));
    CHECK(g[kFaceBegin + 1].d == doctest::Approx(0.2));
    // undetected points stay at the sentinel
    CHECK(g[kLeftHandBegin].missing());

    CalibrationOptions flat;
    flat.translate_depth = false;
    CHECK(calibrate_video({t}, flat)[0].frames[0][kFaceBegin + 1].d == doctest::Approx(0.3));
}

TEST_CASE("already centred video is unchanged") {
    TrialSequence t;
    LandmarkFrame f;
    f[pose::LeftShoulder] = {0.1, 0.2, 0.05};
    f[pose::RightShoulder] = {-0.1, -0.2, -0.05};
    f[kRightHandBegin] = {0.3, 0.3, 0.3};
    t.frames.push_back(f);
    CHECK(calibrate_video({t})[0].frames == t.frames);
}

TEST_CASE("reference frame falls back to the first with both shoulders") {
    TrialSequence first, second;
    for (int i = 0; i < 5; ++i) {
        LandmarkFrame f;
        f[kFaceBegin] = {0.5, 0.5, 0.0};
        if (i >= 3) {
            f[pose::LeftShoulder] = {0.3 + 0.1 * i, 0.5, 0.0};
            f[pose::RightShoulder] = {0.1 + 0.1 * i, 0.5, 0.0};
        }
        first.frames.push_back(f);
    }
    second.frames = first.frames;
    const auto out = calibrate_video({first, second});
    // frame 3 shoulders midpoint is (0.5, 0.5, 0)
    CHECK(out[0].frames[0][kFaceBegin].x == doctest::Approx(0.0));
    CHECK(out[1].frames[4][kFaceBegin].x == doctest::Approx(0.0));

    TrialSequence none;
    none.frames.resize(3);
    CHECK_THROWS_AS(calibrate_video({none}), CalibrationError);
}

TEST_CASE("calibration is idempotent") {
    std::mt19937_64 rng(5);
    std::vector<TrialSequence> video{testsupport::random_trial(rng, 6, 0.3), testsupport::random_trial(rng, 4, 0.3)};
    const auto once = calibrate_video(video);
    const auto twice = calibrate_video(once);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(max_abs_diff(once[i], twice[i]) <= 1e-12);
}

TEST_CASE("frame-rate correction") {
    const auto same = correct_frame_rate(numbered(40, 30));
    CHECK(same.frames == numbered(40).frames);

    const auto doubled = correct_frame_rate(numbered(40, 15));
    REQUIRE(doubled.frames.size() == 80);
    CHECK(doubled.fps == 30);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(doubled.frames[2 * i][0].x == i + 1);
        CHECK(doubled.frames[2 * i + 1][0].x == i + 1);
    }

    const auto from24 = correct_frame_rate(numbered(24, 24));
    REQUIRE(from24.frames.size() == 30);
    std::vector<double> seen;
    for (const auto& f : from24.frames) seen.push_back(f[0].x);
    // source indices 3, 7, 11, ... (values 4, 8, 12, ...) appear twice in place
    CHECK(seen == std::vector<double>{1, 2, 3, 4, 4, 5, 6, 7, 8, 8, 9, 10, 11, 12, 12,
                                      13, 14, 15, 16, 16, 17, 18, 19, 20, 20, 21, 22, 23, 24, 24});
    for (std::size_t n : {1u, 3u, 4u, 7u, 41u}) CHECK(correct_frame_rate(numbered(n, 24)).frames.size() == n + n / 4);

    CHECK_THROWS_AS(correct_frame_rate(numbered(5, 25)), FpsError);
}

TEST_CASE("flip mirrors hands and swaps their blocks") {
    TrialSequence t;
    LandmarkFrame f;
    f[kLeftHandBegin + 2] = {0.2, 0.3, 0.1};
    f[pose::LeftWrist] = {0.2, 0.3, 0.1};
    t.frames.push_back(f);
    const auto g = flip_dominance(t);
    CHECK(g.frames[0][kRightHandBegin + 2] == LandmarkPoint{-0.2, 0.3, 0.1});
    CHECK(g.frames[0][kLeftHandBegin + 2].missing());
    CHECK(g.frames[0][pose::LeftWrist] == LandmarkPoint{0.2, 0.3, 0.1});
    CHECK(g.dominance == Dominance::Left);

    const auto m = flip_dominance(t, FlipOptions{true});
    CHECK(m.frames[0][pose::RightWrist] == LandmarkPoint{-0.2, 0.3, 0.1});
    CHECK(m.frames[0][pose::LeftWrist].missing());
}

TEST_CASE("flip is an involution and keeps missing hands missing") {
    std::mt19937_64 rng(6);
    const auto t = testsupport::random_trial(rng, 8, 0.5);
    for (bool pose_too : {false, true}) {
        const auto back = flip_dominance(flip_dominance(t, {pose_too}), {pose_too});
        CHECK(back.frames == t.frames);
        CHECK(back.dominance == t.dominance);
    }
    TrialSequence empty_hands;
    empty_hands.frames.resize(2);
    CHECK(flip_dominance(empty_hands).frames == empty_hands.frames);
}

TEST_CASE("flipped variant only touches left-dominant trials") {
    std::mt19937_64 rng(7);
    auto right = testsupport::random_trial(rng, 3);
    auto left = right;
    left.dominance = Dominance::Left;
    CHECK(apply_dominance(right, DominanceMode::Flipped).frames == right.frames);
    const auto flipped = apply_dominance(left, DominanceMode::Flipped);
    CHECK(flipped.dominance == Dominance::Right);
    CHECK(flipped.frames != left.frames);
    CHECK(apply_dominance(left, DominanceMode::Original).frames == left.frames);
}

TEST_CASE("padding appends zero frames") {
    VariantConfig cfg;
    const auto padded = apply_variant_temporal(numbered(9), cfg);
    REQUIRE(padded.frames.size() == 164);
    for (std::size_t i = 0; i < 9; ++i) CHECK(padded.frames[i][0].x == i + 1);
    for (std::size_t i = 9; i < 164; ++i)
        for (const auto& p : padded.frames[i].points) CHECK(p.missing());
}

TEST_CASE("prolonging duplicates uniformly") {
    VariantConfig cfg;
    cfg.temporal = TemporalMode::Prolonged;
    const auto out = apply_variant_temporal(numbered(82), cfg);
    REQUIRE(out.frames.size() == 164);
    std::map<double, int> count;
    for (const auto& f : out.frames) ++count[f[0].x];
    CHECK(count.size() == 82);
    for (auto [v, c] : count) CHECK(c == 2);
    for (std::size_t j = 1; j < 164; ++j) CHECK(out.frames[j][0].x >= out.frames[j - 1][0].x);

    for (std::size_t n : {1u, 9u, 50u, 163u}) {
        std::map<double, int> c;
        for (const auto& f : apply_variant_temporal(numbered(n), cfg).frames) ++c[f[0].x];
        CHECK(c.size() == n);
        int lo = 1000, hi = 0;
        for (auto [v, k] : c) lo = std::min(lo, k), hi = std::max(hi, k);
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("full-length trials pass through and longer ones are refused") {
    for (auto mode : {TemporalMode::Padded, TemporalMode::Prolonged}) {
        VariantConfig cfg;
        cfg.temporal = mode;
        CHECK(apply_variant_temporal(numbered(164), cfg).frames == numbered(164).frames);
        CHECK_THROWS_AS(apply_variant_temporal(numbered(165), cfg), LengthError);
    }
}

TEST_CASE("temporal variants on feature matrices track valid length") {
    FeatureSequence s;
    s.width = 2;
    s.length = 3;
    s.values = {1, 2, 3, 4, 5, 6};
    VariantConfig cfg;
    cfg.target_len = 6;
    const auto padded = apply_variant_temporal(s, cfg);
    CHECK(padded.rows() == 6);
    CHECK(padded.length == 3);
    CHECK(padded.at(5, 1) == 0.0);
    cfg.temporal = TemporalMode::Prolonged;
    const auto longer = apply_variant_temporal(s, cfg);
    CHECK(longer.length == 6);
    CHECK(longer.values == std::vector<double>{1, 2, 1, 2, 3, 4, 3, 4, 5, 6, 5, 6});
}
