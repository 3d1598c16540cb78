#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "signseq/ingest.hpp"
#include "signseq/landmarks.hpp"
#include "signseq/preprocess.hpp"
#include "signseq/rnn.hpp"
#include "signseq/svm.hpp"

namespace signseq::cli {

inline constexpr const char* kVersion = "signseq 1.0.0";

enum class Classifier { Svm, SvmDtw, Rnn };
enum class Encoding { Raw, Rq };

/// Fully resolved run configuration: config file, then environment, then flags.
struct PipelineConfig {
    std::optional<std::filesystem::path> dataset_root;
    std::optional<std::filesystem::path> trials_dir;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 0;
    int jobs = 1;

    VariantConfig variant;
    bool variant_temporal_set = false;
    FeatureSet features = FeatureSet::PoseHands75;
    Encoding encoding = Encoding::Raw;
    std::optional<std::filesystem::path> rq_config;
    bool rq_fit_ranges = false;

    Classifier classifier = Classifier::Svm;
    SvmParams svm;
    RnnConfig rnn;
    std::optional<double> post_scale;
    std::size_t folds = 10;

    SplitSpec split;
    SegmentBounds segment = SegmentBounds::ActualStartToGestureEnd;
    CalibrationOptions calibration;
    FlipOptions flip;

    bool dtw_source_train = false;
    std::optional<std::size_t> dtw_band;
    std::optional<std::uint64_t> dtw_template_seed;

    std::optional<std::string> run_name;

    /// Name under which models and reports for this configuration are stored.
    std::string resolved_run_name() const;
    TemporalMode effective_temporal() const;
    double effective_post_scale() const;
    nlohmann::json to_json() const;
};

/// Flag values that override the config file.
struct Overrides {
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> classifier;
    std::optional<std::string> variant;
    std::optional<std::string> features;
    std::optional<std::string> encoding;
    std::optional<std::string> run;
};

/// Throws ConfigError naming the offending key.
PipelineConfig resolve_config(const nlohmann::json& file, const Overrides& flags);

/// Entry point. Returns 0 on success, 2 on usage or configuration errors,
/// 1 on runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace signseq::cli
