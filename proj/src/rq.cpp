#include "signseq/rq.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "signseq/errors.hpp"

namespace signseq {
namespace {

bool is_left_pose(std::size_t i) {
    // Odd pose indices past the nose are the subject's left side.
    return i % 2 == 1;
}

std::size_t origin_index(std::size_t i, Origin origin) {
    switch (origin) {
        case Origin::WristSameHand:
            return i >= kRightHandBegin ? kRightHandBegin + kHandWrist : kLeftHandBegin + kHandWrist;
        case Origin::Nose:
            return pose::Nose;
        case Origin::ShoulderSameSide:
            return is_left_pose(i) ? pose::LeftShoulder : pose::RightShoulder;
        case Origin::HeelSameSide:
            return is_left_pose(i) ? pose::LeftHeel : pose::RightHeel;
        default:
            return i;
    }
}

const char* origin_name(Origin o) {
    switch (o) {
        case Origin::WristSameHand: return "wrist_same_hand";
        case Origin::Nose: return "nose";
        case Origin::ShoulderSameSide: return "shoulder_same_side";
        case Origin::HeelSameSide: return "heel_same_side";
        case Origin::Global: return "global";
        case Origin::Ignored: return "ignored";
    }
    return "ignored";
}

Origin parse_origin(const std::string& s) {
    static const std::map<std::string, Origin> m{
        {"wrist_same_hand", Origin::WristSameHand}, {"nose", Origin::Nose},
        {"shoulder_same_side", Origin::ShoulderSameSide}, {"heel_same_side", Origin::HeelSameSide},
        {"global", Origin::Global}, {"ignored", Origin::Ignored}};
    auto it = m.find(s);
    if (it == m.end()) throw FormatError("RQ config: unknown origin '" + s + "'");
    return it->second;
}

constexpr const char* kGroupNames[kQuantGroupCount] = {"hand", "face", "body", "ignored"};

}  // namespace

ParentTable default_parent_table() {
    ParentTable t;
    for (std::size_t i = 0; i < kPoseCount; ++i) {
        t.origin[i] = Origin::Ignored;
        t.group[i] = QuantGroup::Ignored;
    }
    t.origin[pose::LeftShoulder] = t.origin[pose::RightShoulder] = Origin::Global;
    t.group[pose::LeftShoulder] = t.group[pose::RightShoulder] = QuantGroup::Body;
    for (std::size_t i = pose::LeftElbow; i <= pose::RightThumb; ++i) {
        t.origin[i] = Origin::ShoulderSameSide;
        t.group[i] = QuantGroup::Body;
    }
    // Legs are quantised to a single level; the ankle/heel relation is kept
    // so a scheme that gives legs levels still sees local motion.
    t.origin[pose::LeftAnkle] = t.origin[pose::RightAnkle] = Origin::HeelSameSide;
    t.origin[pose::LeftHeel] = t.origin[pose::RightHeel] = Origin::Global;

    for (std::size_t i = kFaceBegin; i < kFaceBegin + kFaceCount; ++i) {
        t.origin[i] = Origin::Nose;
        t.group[i] = QuantGroup::Face;
    }
    for (std::size_t i = kLeftHandBegin; i < kLandmarkCount; ++i) {
        t.origin[i] = Origin::WristSameHand;
        t.group[i] = QuantGroup::Hand;
    }
    return t;
}

QuantScheme default_scheme() {
    QuantScheme s;
    s[QuantGroup::Hand] = {{10, -0.5, 0.5}, {10, -0.5, 0.5}, {5, -0.25, 0.25}};
    s[QuantGroup::Face] = {{5, -0.25, 0.25}, {5, -0.25, 0.25}, {3, -0.1, 0.1}};
    s[QuantGroup::Body] = {{5, -1.0, 1.0}, {5, -1.0, 1.0}, {3, -0.5, 0.5}};
    s[QuantGroup::Ignored] = {{1, -1.0, 1.0}, {1, -1.0, 1.0}, {1, -1.0, 1.0}};
    return s;
}

void validate(const QuantScheme& scheme) {
    for (std::size_t g = 0; g < kQuantGroupCount; ++g) {
        for (const AxisQuant* a : {&scheme.groups[g].x, &scheme.groups[g].y, &scheme.groups[g].d}) {
            if (a->levels < 1)
                throw SchemeError(std::string(kGroupNames[g]) + ": level count must be >= 1");
            if (a->levels > 1 && !(a->lo < a->hi))
                throw SchemeError(std::string(kGroupNames[g]) + ": empty quantisation range");
        }
    }
}

int quantize_axis(double v, double lo, double hi, int levels) {
    if (levels < 1) throw SchemeError("level count must be >= 1");
    if (levels == 1) return 0;
    if (!(lo < hi)) throw SchemeError("quantisation range requires lo < hi");
    const double q = std::floor((v - lo) * levels / (hi - lo));
    if (!(q >= 0.0)) return 0;  // also maps NaN to the bottom level
    if (q >= levels - 1) return levels - 1;
    return static_cast<int>(q);
}

LandmarkFrame to_local(const LandmarkFrame& frame, const ParentTable& table) {
    LandmarkFrame out;
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
        const Origin o = table.origin[i];
        const auto& p = frame[i];
        if (o == Origin::Ignored || p.missing()) continue;
        if (o == Origin::Global) {
            out[i] = p;
            continue;
        }
        const auto& c = frame[origin_index(i, o)];
        if (c.missing()) continue;
        out[i] = {p.x - c.x, p.y - c.y, p.d - c.d};
    }
    return out;
}

KeyframeCode encode_frame(const LandmarkFrame& frame, const ParentTable& table, const QuantScheme& scheme,
                          FeatureSet set) {
    validate(scheme);
    const LandmarkFrame local = to_local(frame, table);
    KeyframeCode code;
    const auto idx = selected_points(set);
    code.levels.reserve(idx.size());
    for (std::size_t i : idx) {
        const auto& g = scheme[table.group[i]];
        const auto& p = local[i];
        code.levels.push_back({quantize_axis(p.x, g.x), quantize_axis(p.y, g.y), quantize_axis(p.d, g.d)});
    }
    return code;
}

std::vector<KeyframeCode> encode_sequence(const TrialSequence& trial, const ParentTable& table,
                                          const QuantScheme& scheme, FeatureSet set) {
    std::vector<KeyframeCode> out;
    out.reserve(trial.frames.size());
    for (const auto& f : trial.frames) out.push_back(encode_frame(f, table, scheme, set));
    return out;
}

std::string code_to_token(const KeyframeCode& code) {
    std::string s;
    s.reserve(code.levels.size() * 6);
    bool first = true;
    for (const auto& triple : code.levels) {
        for (int q : triple) {
            if (!first) s += '-';
            s += std::to_string(q);
            first = false;
        }
    }
    return s;
}

FeatureSequence rq_features(const TrialSequence& trial, const ParentTable& table, const QuantScheme& scheme,
                            FeatureSet set) {
    FeatureSequence out;
    out.width = feature_width(set);
    out.length = trial.frames.size();
    out.values.reserve(out.width * out.length);
    for (const auto& code : encode_sequence(trial, table, scheme, set))
        for (const auto& triple : code.levels)
            for (int q : triple) out.values.push_back(static_cast<double>(q));
    return out;
}

QuantScheme fit_scheme_ranges(std::span<const TrialSequence> trials, const ParentTable& table,
                              QuantScheme scheme, double lo_percentile, double hi_percentile) {
    if (trials.empty()) throw EmptyInputError("fit_scheme_ranges: no trials");
    if (!(0.0 <= lo_percentile && lo_percentile < hi_percentile && hi_percentile <= 1.0))
        throw SchemeError("percentiles must satisfy 0 <= lo < hi <= 1");
    std::array<std::array<std::vector<double>, 3>, kQuantGroupCount> samples;
    for (const auto& t : trials) {
        for (const auto& f : t.frames) {
            const LandmarkFrame local = to_local(f, table);
            for (std::size_t i = 0; i < kLandmarkCount; ++i) {
                if (table.origin[i] == Origin::Ignored || local[i].missing()) continue;
                auto& s = samples[static_cast<std::size_t>(table.group[i])];
                s[0].push_back(local[i].x);
                s[1].push_back(local[i].y);
                s[2].push_back(local[i].d);
            }
        }
    }
    auto quantile = [](std::vector<double>& v, double p) {
        const std::size_t k = static_cast<std::size_t>(std::floor(p * static_cast<double>(v.size() - 1)));
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
        return v[k];
    };
    for (std::size_t g = 0; g < kQuantGroupCount; ++g) {
        if (static_cast<QuantGroup>(g) == QuantGroup::Ignored) continue;
        AxisQuant* axes[3] = {&scheme.groups[g].x, &scheme.groups[g].y, &scheme.groups[g].d};
        for (int a = 0; a < 3; ++a) {
            auto& v = samples[g][a];
            if (axes[a]->levels <= 1 || v.size() < 2) continue;
            const double lo = quantile(v, lo_percentile);
            const double hi = quantile(v, hi_percentile);
            if (lo < hi) {
                axes[a]->lo = lo;
                axes[a]->hi = hi;
            }
        }
    }
    return scheme;
}

nlohmann::json to_json(const QuantScheme& scheme, const ParentTable& table) {
    nlohmann::json groups = nlohmann::json::object();
    for (std::size_t g = 0; g < kQuantGroupCount; ++g) {
        auto axis = [](const AxisQuant& a) { return nlohmann::json{{"levels", a.levels}, {"lo", a.lo}, {"hi", a.hi}}; };
        groups[kGroupNames[g]] = {{"x", axis(scheme.groups[g].x)},
                                  {"y", axis(scheme.groups[g].y)},
                                  {"d", axis(scheme.groups[g].d)}};
    }
    nlohmann::json origins = nlohmann::json::array(), members = nlohmann::json::array();
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
        origins.push_back(origin_name(table.origin[i]));
        members.push_back(kGroupNames[static_cast<std::size_t>(table.group[i])]);
    }
    return {{"format", "signseq-rq"}, {"version", 1}, {"groups", groups},
            {"origin", origins}, {"group", members}};
}

std::pair<QuantScheme, ParentTable> rq_config_from_json(const nlohmann::json& doc) {
    try {
        QuantScheme scheme = default_scheme();
        ParentTable table = default_parent_table();
        if (doc.contains("groups")) {
            for (std::size_t g = 0; g < kQuantGroupCount; ++g) {
                if (!doc["groups"].contains(kGroupNames[g])) continue;
                const auto& jg = doc["groups"][kGroupNames[g]];
                auto read_axis = [&](const char* name, AxisQuant& a) {
                    if (!jg.contains(name)) return;
                    a.levels = jg[name].value("levels", a.levels);
                    a.lo = jg[name].value("lo", a.lo);
                    a.hi = jg[name].value("hi", a.hi);
                };
                read_axis("x", scheme.groups[g].x);
                read_axis("y", scheme.groups[g].y);
                read_axis("d", scheme.groups[g].d);
            }
        }
        if (doc.contains("origin")) {
            const auto& o = doc["origin"];
            if (o.size() != kLandmarkCount) throw FormatError("RQ config: origin table must list 543 entries");
            for (std::size_t i = 0; i < kLandmarkCount; ++i) table.origin[i] = parse_origin(o[i].get<std::string>());
        }
        if (doc.contains("group")) {
            const auto& m = doc["group"];
            if (m.size() != kLandmarkCount) throw FormatError("RQ config: group table must list 543 entries");
            for (std::size_t i = 0; i < kLandmarkCount; ++i) {
                const auto name = m[i].get<std::string>();
                auto it = std::find_if(std::begin(kGroupNames), std::end(kGroupNames),
                                       [&](const char* n) { return name == n; });
                if (it == std::end(kGroupNames)) throw FormatError("RQ config: unknown group '" + name + "'");
                table.group[i] = static_cast<QuantGroup>(it - std::begin(kGroupNames));
            }
        }
        validate(scheme);
        return {scheme, table};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("RQ config: ") + e.what());
    }
}

}  // namespace signseq
