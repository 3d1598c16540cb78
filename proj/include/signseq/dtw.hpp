#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "signseq/landmarks.hpp"
#include "signseq/matrix.hpp"

namespace signseq {

/// Unconstrained DTW between two scalar sequences: local cost |a_i - b_j|,
/// steps (1,0), (0,1), (1,1). An optional Sakoe-Chiba band limits |i - j|;
/// the band is widened to the length difference so a path always exists.
/// Throws EmptyInputError if either sequence is empty.
double dtw_distance(std::span<const double> a, std::span<const double> b,
                    std::optional<std::size_t> band = std::nullopt);

enum class TemplateSource { Test, Train };

/// One template per class, preprocessed the same way as the queries.
struct TemplateBank {
    std::vector<FeatureSequence> templates;  // templates[k] is class k
    std::vector<std::size_t> pool_indices;   // position of each template in the pool
    std::uint64_t seed = 0;
    TemplateSource source = TemplateSource::Test;
};

/// Picks one pool member per class uniformly at random with a seeded
/// generator. Throws ClassCoverageError naming the first absent class.
std::vector<std::size_t> select_template_indices(std::span<const int> labels, int class_count,
                                                 std::uint64_t seed);

TemplateBank select_templates(std::span<const FeatureSequence> pool, std::span<const int> labels,
                              std::uint64_t seed, TemplateSource source, int class_count);

/// Per-channel DTW against every template, template-major:
/// out[k * width + c] = dtw(query channel c, template k channel c).
std::vector<double> dtw_features(const FeatureSequence& query, const TemplateBank& bank,
                                 std::optional<std::size_t> band = std::nullopt, int jobs = 1);

/// Scalar channel c of the valid rows of a sequence.
std::vector<double> channel(const FeatureSequence& seq, std::size_t c);

/// "DTWF" | u32 rows | u32 cols | rows x cols f32, little-endian.
void write_dtw_features(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_dtw_features(const std::filesystem::path& path);

}  // namespace signseq
