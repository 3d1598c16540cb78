#include "signseq/normalizer.hpp"

#include <cmath>
#include <fstream>

#include "signseq/errors.hpp"

namespace signseq {
namespace {

bool triple_missing(std::span<const double> row, std::size_t c) {
    const std::size_t base = c - c % 3;
    if (base + 2 >= row.size()) return false;
    return row[base] == 0.0 && row[base + 1] == 0.0 && row[base + 2] == 0.0;
}

}  // namespace

Normalizer fit_normalizer(std::span<const FeatureSequence> train, double post_scale, bool skip_missing) {
    if (train.empty()) throw EmptyInputError("fit_normalizer: empty training set");
    const std::size_t width = train.front().width;
    std::vector<double> sum(width, 0.0), count(width, 0.0);
    for (const auto& seq : train) {
        if (seq.width != width) throw InvariantError("fit_normalizer: inconsistent feature widths");
        for (std::size_t t = 0; t < seq.length; ++t) {
            auto row = seq.row(t);
            for (std::size_t c = 0; c < width; ++c) {
                if (skip_missing && triple_missing(row, c)) continue;
                sum[c] += row[c];
                count[c] += 1.0;
            }
        }
    }
    Normalizer n;
    n.post_scale = post_scale;
    n.skip_missing = skip_missing;
    n.mean.resize(width);
    for (std::size_t c = 0; c < width; ++c) n.mean[c] = count[c] > 0 ? sum[c] / count[c] : 0.0;

    // Second pass keeps the variance free of cancellation.
    std::vector<double> sq(width, 0.0);
    for (const auto& seq : train) {
        for (std::size_t t = 0; t < seq.length; ++t) {
            auto row = seq.row(t);
            for (std::size_t c = 0; c < width; ++c) {
                if (skip_missing && triple_missing(row, c)) continue;
                const double dv = row[c] - n.mean[c];
                sq[c] += dv * dv;
            }
        }
    }
    n.deviation.resize(width);
    for (std::size_t c = 0; c < width; ++c) {
        const double sd = count[c] > 0 ? std::sqrt(sq[c] / count[c]) : 0.0;
        n.deviation[c] = std::max(sd, kDeviationFloor);
    }
    return n;
}

FeatureSequence apply_normalizer(const Normalizer& normalizer, FeatureSequence seq) {
    if (seq.width != normalizer.width())
        throw LengthError("normalizer width " + std::to_string(normalizer.width()) +
                          " does not match feature width " + std::to_string(seq.width));
    for (std::size_t t = 0; t < seq.length; ++t) {
        auto row = seq.row(t);
        std::vector<bool> missing;
        if (normalizer.skip_missing) {
            missing.resize(seq.width);
            for (std::size_t c = 0; c < seq.width; ++c) missing[c] = triple_missing(row, c);
        }
        for (std::size_t c = 0; c < seq.width; ++c) {
            if (normalizer.skip_missing && missing[c]) continue;
            row[c] = (row[c] - normalizer.mean[c]) / normalizer.deviation[c] * normalizer.post_scale;
        }
    }
    // padding stays zero
    std::fill(seq.values.begin() + static_cast<std::ptrdiff_t>(std::min(seq.length * seq.width, seq.values.size())),
              seq.values.end(), 0.0);
    return seq;
}

nlohmann::json to_json(const Normalizer& n) {
    return {{"format", "signseq-normalizer"},
            {"version", 1},
            {"post_scale", n.post_scale},
            {"skip_missing", n.skip_missing},
            {"fit_signers", n.fit_signers},
            {"mean", n.mean},
            {"deviation", n.deviation}};
}

Normalizer normalizer_from_json(const nlohmann::json& doc) {
    try {
        Normalizer n;
        n.post_scale = doc.at("post_scale").get<double>();
        n.skip_missing = doc.value("skip_missing", true);
        n.fit_signers = doc.value("fit_signers", std::vector<int>{});
        n.mean = doc.at("mean").get<std::vector<double>>();
        n.deviation = doc.at("deviation").get<std::vector<double>>();
        if (n.mean.size() != n.deviation.size()) throw FormatError("normalizer: mean/deviation length mismatch");
        return n;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("normalizer JSON: ") + e.what());
    }
}

void save_normalizer(const Normalizer& normalizer, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << to_json(normalizer).dump(1) << '\n';
}

Normalizer load_normalizer(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return normalizer_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace signseq
