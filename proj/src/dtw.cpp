#include "signseq/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "binary.hpp"
#include "signseq/errors.hpp"
#include "signseq/labels.hpp"
#include "signseq/parallel.hpp"

namespace signseq {

double dtw_distance(std::span<const double> a, std::span<const double> b, std::optional<std::size_t> band) {
    if (a.empty() || b.empty()) throw EmptyInputError("dtw_distance: empty sequence");
    // Keep the shorter sequence on the inner loop.
    if (b.size() > a.size()) std::swap(a, b);
    const std::size_t n = a.size(), m = b.size();
    const std::size_t w = band ? std::max(*band, n - m) : std::max(n, m);
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> prev(m + 1, inf), curr(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t lo = i > w ? i - w : 1;
        const std::size_t hi = std::min(m, i + w);
        std::fill(curr.begin(), curr.end(), inf);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double cost = std::abs(a[i - 1] - b[j - 1]);
            curr[j] = cost + std::min({prev[j - 1], prev[j], curr[j - 1]});
        }
        std::swap(prev, curr);
    }
    return prev[m];
}

std::vector<std::size_t> select_template_indices(std::span<const int> labels, int class_count,
                                                 std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(class_count));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= class_count) throw LabelError("label out of range in template pool");
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(members.size());
    for (int k = 0; k < class_count; ++k) {
        const auto& m = members[static_cast<std::size_t>(k)];
        if (m.empty())
            throw ClassCoverageError(class_count == kClassCount ? word_label(k) : "class " + std::to_string(k));
        chosen.push_back(m[rng() % m.size()]);
    }
    return chosen;
}

TemplateBank select_templates(std::span<const FeatureSequence> pool, std::span<const int> labels,
                              std::uint64_t seed, TemplateSource source, int class_count) {
    if (pool.size() != labels.size()) throw InvariantError("template pool and labels differ in size");
    TemplateBank bank;
    bank.seed = seed;
    bank.source = source;
    bank.pool_indices = select_template_indices(labels, class_count, seed);
    for (std::size_t i : bank.pool_indices) bank.templates.push_back(pool[i]);
    return bank;
}

std::vector<double> channel(const FeatureSequence& seq, std::size_t c) {
    std::vector<double> out(seq.length);
    for (std::size_t t = 0; t < seq.length; ++t) out[t] = seq.at(t, c);
    return out;
}

std::vector<double> dtw_features(const FeatureSequence& query, const TemplateBank& bank,
                                 std::optional<std::size_t> band, int jobs) {
    const std::size_t width = query.width;
    for (const auto& t : bank.templates)
        if (t.width != width) throw LengthError("template width does not match query width");
    std::vector<std::vector<double>> query_channels(width);
    for (std::size_t c = 0; c < width; ++c) query_channels[c] = channel(query, c);

    std::vector<double> out(bank.templates.size() * width);
    parallel_for(bank.templates.size(), jobs, [&](std::size_t k) {
        const auto& tmpl = bank.templates[k];
        for (std::size_t c = 0; c < width; ++c)
            out[k * width + c] = dtw_distance(query_channels[c], channel(tmpl, c), band);
    });
    return out;
}

void write_dtw_features(const FeatureMatrix& m, const std::filesystem::path& path) {
    if (m.values.size() != m.rows * m.cols) throw InvariantError("feature matrix shape mismatch");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    binary::put_magic(out, "DTWF");
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols));
    for (double v : m.values) binary::put(out, static_cast<float>(v));
    if (!out) throw IoError("write failed: " + path.string());
}

FeatureMatrix read_dtw_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (!binary::check_magic(in, "DTWF")) throw FormatError(path.string() + ": bad DTWF magic");
    std::uint32_t rows = 0, cols = 0;
    if (!(binary::get(in, rows) && binary::get(in, cols))) throw FormatError(path.string() + ": truncated header");
    FeatureMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values.resize(static_cast<std::size_t>(rows) * cols);
    for (double& v : m.values) {
        float f;
        if (!binary::get(in, f)) throw TruncationError(path.string() + ": truncated feature data");
        v = f;
    }
    return m;
}

}  // namespace signseq
