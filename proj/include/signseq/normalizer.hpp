#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "signseq/landmarks.hpp"

namespace signseq {

inline constexpr double kDeviationFloor = 1e-8;

/// Per-feature standardisation fitted on training data only.
///
/// Statistics are taken over valid rows (index < length). With
/// `skip_missing`, a landmark triple that is exactly (0, 0, 0) is treated as
/// undetected: it contributes nothing to the fit and is left at zero when
/// applied.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> deviation;
    double post_scale = 1.0;
    bool skip_missing = true;
    std::vector<int> fit_signers;  // provenance, checked by the evaluator

    std::size_t width() const noexcept { return mean.size(); }
};

Normalizer fit_normalizer(std::span<const FeatureSequence> train, double post_scale = 1.0,
                          bool skip_missing = true);

FeatureSequence apply_normalizer(const Normalizer& normalizer, FeatureSequence seq);

nlohmann::json to_json(const Normalizer& normalizer);
Normalizer normalizer_from_json(const nlohmann::json& doc);
void save_normalizer(const Normalizer& normalizer, const std::filesystem::path& path);
Normalizer load_normalizer(const std::filesystem::path& path);

}  // namespace signseq
