#include "signseq/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <json.hpp>

#include "signseq/errors.hpp"
#include "signseq/labels.hpp"

namespace signseq {
namespace {

int parse_int(std::string_view s, std::size_t line, const char* field) {
    int v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw FormatError("annotation line " + std::to_string(line) + ": bad " + field + " '" +
                          std::string(s) + "'");
    return v;
}

int parse_signer(std::string_view s, std::size_t line) {
    if (!s.empty() && (s.front() == 'U' || s.front() == 'u')) s.remove_prefix(1);
    return parse_int(s, line, "signer");
}

CameraView parse_view(std::string_view s, std::size_t line) {
    if (s == "F" || s == "f" || s == "FRONT" || s == "front") return CameraView::Front;
    if (s == "L" || s == "l" || s == "LATERAL" || s == "lateral") return CameraView::Lateral;
    throw FormatError("annotation line " + std::to_string(line) + ": bad camera view '" +
                      std::string(s) + "'");
}

Dominance parse_dominance(std::string_view s, std::size_t line) {
    if (s == "RH" || s == "rh" || s == "RIGHT" || s == "right") return Dominance::Right;
    if (s == "LH" || s == "lh" || s == "LEFT" || s == "left") return Dominance::Left;
    throw FormatError("annotation line " + std::to_string(line) + ": bad dominance '" +
                      std::string(s) + "'");
}

void check_order(const TrialAnnotation& a, std::size_t line) {
    if (!(a.frame_intention <= a.frame_actual_start))
        throw AnnotationOrderError(line, "intention frame after actual start");
    if (!(a.frame_actual_start < a.frame_gesture_end))
        throw AnnotationOrderError(line, "gesture end not after actual start");
    if (!(a.frame_gesture_end <= a.frame_withdrawal))
        throw AnnotationOrderError(line, "withdrawal frame before gesture end");
    if (a.frame_intention < 0) throw AnnotationOrderError(line, "negative frame number");
}

}  // namespace

std::vector<TrialAnnotation> parse_annotation(std::string_view text) {
    std::vector<TrialAnnotation> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::istringstream fields(raw);
        std::vector<std::string> f;
        for (std::string tok; fields >> tok;) f.push_back(tok);
        if (f.empty() || f.front().front() == '#') continue;
        if (f.size() != 10)
            throw FormatError("annotation line " + std::to_string(line) + ": expected 10 fields, got " +
                              std::to_string(f.size()));
        TrialAnnotation a;
        a.signer = parse_signer(f[0], line);
        a.word_class = word_class(f[1]);
        a.trial_index = parse_int(f[2], line, "trial index");
        a.view = parse_view(f[3], line);
        a.dominance = parse_dominance(f[4], line);
        a.fps = parse_int(f[5], line, "fps");
        a.frame_intention = parse_int(f[6], line, "intention frame");
        a.frame_actual_start = parse_int(f[7], line, "start frame");
        a.frame_gesture_end = parse_int(f[8], line, "end frame");
        a.frame_withdrawal = parse_int(f[9], line, "withdrawal frame");
        check_order(a, line);
        out.push_back(a);
    }
    return out;
}

std::vector<TrialAnnotation> parse_annotation_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("annotation JSON: ") + e.what());
    }
    if (!doc.is_array()) throw FormatError("annotation JSON: expected an array");
    std::vector<TrialAnnotation> out;
    std::size_t item = 0;
    for (const auto& obj : doc) {
        ++item;
        auto as_text = [&](const char* key) -> std::string {
            if (!obj.contains(key)) throw FormatError("annotation JSON item " + std::to_string(item) + ": missing " + key);
            const auto& v = obj.at(key);
            return v.is_string() ? v.get<std::string>() : v.dump();
        };
        auto as_int = [&](const char* key) { return parse_int(as_text(key), item, key); };
        TrialAnnotation a;
        a.signer = parse_signer(as_text("signer_id"), item);
        a.word_class = word_class(as_text("word_label"));
        a.trial_index = as_int("trial_index");
        a.view = parse_view(as_text("camera_view"), item);
        a.dominance = parse_dominance(as_text("dominance"), item);
        a.fps = as_int("fps");
        a.frame_intention = as_int("frame_intention");
        a.frame_actual_start = as_int("frame_actual_start");
        a.frame_gesture_end = as_int("frame_gesture_end");
        a.frame_withdrawal = as_int("frame_withdrawal");
        check_order(a, item);
        out.push_back(a);
    }
    return out;
}

std::vector<TrialSequence> segment_trials(std::span<const LandmarkFrame> stream,
                                          std::span<const TrialAnnotation> annotations,
                                          SegmentBounds bounds) {
    std::vector<TrialSequence> out;
    out.reserve(annotations.size());
    for (const auto& a : annotations) {
        const bool inner = bounds == SegmentBounds::ActualStartToGestureEnd;
        const long first = inner ? a.frame_actual_start : a.frame_intention;
        const long last = inner ? a.frame_gesture_end : a.frame_withdrawal;
        if (first < 0 || last < first || last >= static_cast<long>(stream.size()))
            throw RangeError("trial " + std::to_string(a.trial_index) + " frames [" +
                             std::to_string(first) + ", " + std::to_string(last) +
                             "] outside stream of " + std::to_string(stream.size()) + " frames");
        TrialSequence t;
        t.frames.assign(stream.begin() + first, stream.begin() + last + 1);
        t.signer = a.signer;
        t.word_class = a.word_class;
        t.trial_index = a.trial_index;
        t.dominance = a.dominance;
        t.fps = a.fps;
        t.view = a.view;
        out.push_back(std::move(t));
    }
    return out;
}

std::optional<VideoName> parse_video_name(std::string_view filename) {
    auto slash = filename.find_last_of("/\\");
    if (slash != std::string_view::npos) filename.remove_prefix(slash + 1);
    auto dot = filename.find('.');
    std::string_view stem = filename.substr(0, dot);
    if (stem.size() < 4 || stem.front() != 'U') return std::nullopt;
    auto w = stem.find('W');
    if (w == std::string_view::npos || w < 2) return std::nullopt;
    char view = stem.back();
    if (view != 'F' && view != 'L') return std::nullopt;
    int signer = 0, word = 0;
    auto s = stem.substr(1, w - 1);
    auto ws = stem.substr(w + 1, stem.size() - w - 2);
    if (std::from_chars(s.data(), s.data() + s.size(), signer).ptr != s.data() + s.size() || s.empty())
        return std::nullopt;
    if (std::from_chars(ws.data(), ws.data() + ws.size(), word).ptr != ws.data() + ws.size() || ws.empty())
        return std::nullopt;
    VideoName out;
    out.signer = signer;
    try {
        out.word_class = word_class(std::to_string(word));
    } catch (const LabelError&) {
        return std::nullopt;
    }
    out.view = view == 'F' ? CameraView::Front : CameraView::Lateral;
    return out;
}

std::string video_stem(int signer, int word_class, CameraView view) {
    return "U" + std::to_string(signer) + word_label(word_class) + (view == CameraView::Front ? "F" : "L");
}

DatasetStats compute_stats(std::span<const TrialSequence> trials) {
    if (trials.empty()) throw EmptyInputError("compute_stats: no trials");
    DatasetStats s;
    s.trial_count = trials.size();
    s.min_frames = trials.front().frames.size();
    std::size_t total = 0;
    for (const auto& t : trials) {
        const std::size_t n = t.frames.size();
        s.max_frames = std::max(s.max_frames, n);
        s.min_frames = std::min(s.min_frames, n);
        total += n;
        (t.dominance == Dominance::Left ? s.left_hand_instances : s.right_hand_instances) += 1;
    }
    s.avg_frames = static_cast<double>(total) / static_cast<double>(trials.size());
    return s;
}

bool is_test_signer(int signer, const SplitSpec& spec) { return spec.test_signers.count(signer) > 0; }

Split split_by_signer(std::vector<TrialSequence> trials, const SplitSpec& spec) {
    Split out;
    for (auto& t : trials) (is_test_signer(t.signer, spec) ? out.test : out.train).push_back(std::move(t));
    return out;
}

}  // namespace signseq
