#include "signseq/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "signseq/dtw.hpp"
#include "signseq/errors.hpp"
#include "signseq/eval.hpp"
#include "signseq/labels.hpp"
#include "signseq/lmk_io.hpp"
#include "signseq/normalizer.hpp"
#include "signseq/parallel.hpp"
#include "signseq/rq.hpp"

namespace signseq::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config

template <class T>
T get_key(const json& node, const std::string& key, const std::string& path) {
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path, "has the wrong type");
    }
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

Classifier parse_classifier(const std::string& s) {
    const auto v = lower(s);
    if (v == "svm") return Classifier::Svm;
    if (v == "svm-dtw" || v == "svm_dtw" || v == "svmdtw") return Classifier::SvmDtw;
    if (v == "rnn" || v == "bilstm") return Classifier::Rnn;
    throw ConfigError("classifier", "unknown classifier '" + s + "' (svm, svm-dtw, rnn)");
}

Encoding parse_encoding(const std::string& s) {
    const auto v = lower(s);
    if (v == "raw") return Encoding::Raw;
    if (v == "rq") return Encoding::Rq;
    throw ConfigError("encoding", "unknown encoding '" + s + "' (raw, rq)");
}

void apply_variant_token(PipelineConfig& c, const std::string& token, const std::string& key) {
    const auto v = lower(token);
    if (v == "padded" || v == "non-prolonged") {
        c.variant.temporal = TemporalMode::Padded;
        c.variant_temporal_set = true;
    } else if (v == "prolonged") {
        c.variant.temporal = TemporalMode::Prolonged;
        c.variant_temporal_set = true;
    } else if (v == "flipped") {
        c.variant.dominance = DominanceMode::Flipped;
    } else if (v == "original") {
        c.variant.dominance = DominanceMode::Original;
    } else if (!v.empty()) {
        throw ConfigError(key, "unknown variant '" + token + "' (padded, prolonged, original, flipped)");
    }
}

void apply_variant_list(PipelineConfig& c, const std::string& list, const std::string& key) {
    std::stringstream ss(list);
    for (std::string tok; std::getline(ss, tok, ',');) apply_variant_token(c, tok, key);
}

const char* name(Classifier c) {
    switch (c) {
        case Classifier::Svm: return "svm";
        case Classifier::SvmDtw: return "svm-dtw";
        case Classifier::Rnn: return "rnn";
    }
    return "svm";
}

const char* name(TemporalMode m) { return m == TemporalMode::Padded ? "padded" : "prolonged"; }
const char* name(DominanceMode m) { return m == DominanceMode::Flipped ? "flipped" : "original"; }

}  // namespace

TemporalMode PipelineConfig::effective_temporal() const {
    if (variant_temporal_set) return variant.temporal;
    // Plain SVM works on the prolonged variant; the sequence model on padded input.
    return classifier == Classifier::Svm ? TemporalMode::Prolonged : TemporalMode::Padded;
}

double PipelineConfig::effective_post_scale() const {
    if (post_scale) return *post_scale;
    return classifier == Classifier::Rnn ? 100.0 : 1.0;
}

std::string PipelineConfig::resolved_run_name() const {
    if (run_name) return *run_name;
    std::string n = std::string(name(classifier)) + "_" + to_string(features);
    if (encoding == Encoding::Rq) n += "_rq";
    if (classifier != Classifier::SvmDtw) n += std::string("_") + name(effective_temporal());
    n += std::string("_") + name(variant.dominance);
    return n;
}

json PipelineConfig::to_json() const {
    json j;
    j["dataset_root"] = dataset_root ? json(dataset_root->generic_string()) : json(nullptr);
    j["trials_dir"] = trials_dir ? json(trials_dir->generic_string()) : json(nullptr);
    j["seed"] = seed;
    j["variant"] = {{"temporal", name(effective_temporal())},
                    {"dominance", name(variant.dominance)},
                    {"target_len", variant.target_len}};
    j["features"] = to_string(features);
    j["encoding"] = encoding == Encoding::Rq ? "rq" : "raw";
    j["rq_config"] = rq_config ? json(rq_config->generic_string()) : json(nullptr);
    j["rq_ranges"] = rq_fit_ranges ? "fitted" : "fixed";
    j["classifier"] = name(classifier);
    j["svm"] = {{"C", svm.C}, {"tolerance", svm.tolerance}, {"max_epochs", svm.max_epochs}};
    j["rnn"] = {{"hidden", rnn.hidden},
                {"attention", rnn.attention},
                {"dropout", rnn.dropout},
                {"learning_rate", rnn.learning_rate},
                {"batch_size", rnn.batch_size},
                {"max_epochs", rnn.max_epochs},
                {"early_stop_patience", rnn.early_stop_patience ? json(*rnn.early_stop_patience) : json(nullptr)},
                {"mask_padding", rnn.mask_padding}};
    j["post_scale"] = effective_post_scale();
    j["folds"] = folds;
    j["split"] = {{"test_signers", std::vector<int>(split.test_signers.begin(), split.test_signers.end())}};
    j["segment"] = segment == SegmentBounds::ActualStartToGestureEnd ? "actual" : "full";
    j["calibration"] = {{"translate_depth", calibration.translate_depth}};
    j["flip"] = {{"mirror_pose", flip.mirror_pose}};
    j["dtw"] = {{"template_source", dtw_source_train ? "train" : "test"},
                {"band", dtw_band ? json(*dtw_band) : json(nullptr)},
                {"template_seed", dtw_template_seed.value_or(seed)}};
    j["run"] = resolved_run_name();
    return j;
}

PipelineConfig resolve_config(const json& file, const Overrides& flags) {
    PipelineConfig c;
    if (!file.is_null() && !file.is_object()) throw ConfigError("config", "must be a JSON object");
    auto has = [&](const char* key) { return file.is_object() && file.contains(key) && !file.at(key).is_null(); };

    if (has("dataset_root")) c.dataset_root = get_key<std::string>(file, "dataset_root", "dataset_root");
    else if (const char* env = std::getenv("SIGNSEQ_DATA"); env && *env) c.dataset_root = fs::path(env);
    if (has("trials_dir")) c.trials_dir = get_key<std::string>(file, "trials_dir", "trials_dir");
    if (has("out")) c.out_dir = get_key<std::string>(file, "out", "out");
    if (has("seed")) c.seed = get_key<std::uint64_t>(file, "seed", "seed");
    if (has("jobs")) c.jobs = get_key<int>(file, "jobs", "jobs");

    if (has("variant")) {
        const auto& v = file.at("variant");
        if (v.is_string()) {
            apply_variant_list(c, v.get<std::string>(), "variant");
        } else if (v.is_object()) {
            if (v.contains("temporal")) apply_variant_token(c, get_key<std::string>(v, "temporal", "variant.temporal"), "variant.temporal");
            if (v.contains("dominance")) apply_variant_token(c, get_key<std::string>(v, "dominance", "variant.dominance"), "variant.dominance");
            if (v.contains("target_len")) c.variant.target_len = get_key<std::size_t>(v, "target_len", "variant.target_len");
        } else {
            throw ConfigError("variant", "must be a string or an object");
        }
    }
    if (has("features")) c.features = parse_feature_set(get_key<std::string>(file, "features", "features"));
    if (has("encoding")) c.encoding = parse_encoding(get_key<std::string>(file, "encoding", "encoding"));
    if (has("rq_config")) c.rq_config = get_key<std::string>(file, "rq_config", "rq_config");
    if (has("rq_ranges")) {
        const auto r = lower(get_key<std::string>(file, "rq_ranges", "rq_ranges"));
        if (r != "fixed" && r != "fitted") throw ConfigError("rq_ranges", "must be 'fixed' or 'fitted'");
        c.rq_fit_ranges = r == "fitted";
    }
    if (has("classifier")) c.classifier = parse_classifier(get_key<std::string>(file, "classifier", "classifier"));
    if (has("svm")) {
        const auto& s = file.at("svm");
        if (s.contains("C")) c.svm.C = get_key<double>(s, "C", "svm.C");
        if (s.contains("tolerance")) c.svm.tolerance = get_key<double>(s, "tolerance", "svm.tolerance");
        if (s.contains("max_epochs")) c.svm.max_epochs = get_key<int>(s, "max_epochs", "svm.max_epochs");
    }
    if (has("rnn")) {
        const auto& r = file.at("rnn");
        if (r.contains("hidden")) c.rnn.hidden = get_key<std::size_t>(r, "hidden", "rnn.hidden");
        if (r.contains("attention")) c.rnn.attention = get_key<std::size_t>(r, "attention", "rnn.attention");
        if (r.contains("dropout")) c.rnn.dropout = get_key<double>(r, "dropout", "rnn.dropout");
        if (r.contains("learning_rate")) c.rnn.learning_rate = get_key<double>(r, "learning_rate", "rnn.learning_rate");
        if (r.contains("batch_size")) c.rnn.batch_size = get_key<std::size_t>(r, "batch_size", "rnn.batch_size");
        if (r.contains("max_epochs")) c.rnn.max_epochs = get_key<int>(r, "max_epochs", "rnn.max_epochs");
        if (r.contains("early_stop_patience") && !r.at("early_stop_patience").is_null())
            c.rnn.early_stop_patience = get_key<int>(r, "early_stop_patience", "rnn.early_stop_patience");
        if (r.contains("mask_padding")) c.rnn.mask_padding = get_key<bool>(r, "mask_padding", "rnn.mask_padding");
    }
    if (has("post_scale")) c.post_scale = get_key<double>(file, "post_scale", "post_scale");
    if (has("folds")) c.folds = get_key<std::size_t>(file, "folds", "folds");
    if (has("split")) {
        const auto& s = file.at("split");
        if (s.contains("test_signers")) {
            c.split.test_signers.clear();
            for (const auto& v : s.at("test_signers")) {
                if (v.is_number_integer()) {
                    c.split.test_signers.insert(v.get<int>());
                } else if (v.is_string()) {
                    auto t = v.get<std::string>();
                    if (!t.empty() && (t[0] == 'U' || t[0] == 'u')) t.erase(0, 1);
                    try {
                        c.split.test_signers.insert(std::stoi(t));
                    } catch (const std::exception&) {
                        throw ConfigError("split.test_signers", "bad signer id '" + v.get<std::string>() + "'");
                    }
                } else {
                    throw ConfigError("split.test_signers", "entries must be numbers or 'U<n>' strings");
                }
            }
        }
    }
    if (has("segment")) {
        const auto s = lower(get_key<std::string>(file, "segment", "segment"));
        if (s == "actual") c.segment = SegmentBounds::ActualStartToGestureEnd;
        else if (s == "full") c.segment = SegmentBounds::IntentionToWithdrawal;
        else throw ConfigError("segment", "must be 'actual' or 'full'");
    }
    if (has("calibration") && file.at("calibration").contains("translate_depth"))
        c.calibration.translate_depth = get_key<bool>(file.at("calibration"), "translate_depth", "calibration.translate_depth");
    if (has("flip") && file.at("flip").contains("mirror_pose"))
        c.flip.mirror_pose = get_key<bool>(file.at("flip"), "mirror_pose", "flip.mirror_pose");
    if (has("dtw")) {
        const auto& d = file.at("dtw");
        if (d.contains("template_source")) {
            const auto s = lower(get_key<std::string>(d, "template_source", "dtw.template_source"));
            if (s != "test" && s != "train") throw ConfigError("dtw.template_source", "must be 'test' or 'train'");
            c.dtw_source_train = s == "train";
        }
        if (d.contains("band") && !d.at("band").is_null()) c.dtw_band = get_key<std::size_t>(d, "band", "dtw.band");
        if (d.contains("template_seed")) c.dtw_template_seed = get_key<std::uint64_t>(d, "template_seed", "dtw.template_seed");
    }
    if (has("run")) c.run_name = get_key<std::string>(file, "run", "run");

    if (flags.out) c.out_dir = *flags.out;
    if (flags.seed) c.seed = *flags.seed;
    if (flags.jobs) c.jobs = *flags.jobs;
    if (flags.classifier) c.classifier = parse_classifier(*flags.classifier);
    if (flags.variant) apply_variant_list(c, *flags.variant, "variant");
    if (flags.features) c.features = parse_feature_set(*flags.features);
    if (flags.encoding) c.encoding = parse_encoding(*flags.encoding);
    if (flags.run) c.run_name = *flags.run;

    c.svm.seed = c.seed;
    c.svm.jobs = c.jobs;
    c.rnn.seed = c.seed;
    c.rnn.jobs = c.jobs;

    if (c.jobs < 1) throw ConfigError("jobs", "must be at least 1");
    if (c.folds < 2) throw ConfigError("folds", "must be at least 2");
    if (c.variant.target_len == 0) throw ConfigError("variant.target_len", "must be positive");
    if (!(c.svm.C > 0.0)) throw ConfigError("svm.C", "must be positive");
    if (!(c.rnn.dropout >= 0.0 && c.rnn.dropout < 1.0)) throw ConfigError("rnn.dropout", "must lie in [0, 1)");
    if (!(c.rnn.learning_rate > 0.0)) throw ConfigError("rnn.learning_rate", "must be positive");
    if (c.rnn.batch_size == 0) throw ConfigError("rnn.batch_size", "must be positive");
    if (c.rq_config && !fs::exists(*c.rq_config)) throw ConfigError("rq_config", "file not found: " + c.rq_config->string());
    return c;
}

namespace {

// ---------------------------------------------------------------- helpers

struct Context {
    PipelineConfig config;
    std::ostream& out;
    std::ostream& err;
};

std::string trial_file_name(const TrialSequence& t) {
    std::ostringstream s;
    s << "U" << t.signer << "_" << word_label(t.word_class) << "_" << (t.view == CameraView::Front ? "F" : "L")
      << "_T" << std::setw(3) << std::setfill('0') << t.trial_index << ".lmk";
    return s.str();
}

CameraView view_from_name(const fs::path& p) {
    const auto s = p.filename().string();
    return s.find("_L_") != std::string::npos ? CameraView::Lateral : CameraView::Front;
}

bool trial_order(const TrialSequence& a, const TrialSequence& b) {
    return std::tie(a.signer, a.word_class, a.view, a.trial_index) <
           std::tie(b.signer, b.word_class, b.view, b.trial_index);
}

std::vector<TrialSequence> load_trials(const fs::path& dir, const std::string& key) {
    if (!fs::is_directory(dir)) throw ConfigError(key, "directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".lmk") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<TrialSequence> trials;
    trials.reserve(files.size());
    for (const auto& f : files) {
        auto t = read_landmarks(f);
        t.view = view_from_name(f);
        trials.push_back(std::move(t));
    }
    std::sort(trials.begin(), trials.end(), trial_order);
    return trials;
}

fs::path trials_dir(const PipelineConfig& c) { return c.trials_dir.value_or(c.out_dir / "trials"); }

fs::path preprocessed_dir(const PipelineConfig& c) {
    return c.out_dir / "preprocessed" / name(c.variant.dominance);
}

fs::path dtw_dir(const PipelineConfig& c) {
    return c.out_dir / "dtw" / (to_string(c.features) + "_" + name(c.variant.dominance));
}

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream o(p, std::ios::binary | std::ios::trunc);
    if (!o) throw IoError("cannot open " + p.string() + " for writing");
    o << text;
    if (!o) throw IoError("write failed: " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

void write_manifest(const Context& ctx, const std::string& subcommand) {
    json m{{"tool", kVersion},
           {"subcommand", subcommand},
           {"seed", ctx.config.seed},
           {"jobs", ctx.config.jobs},
           {"config", ctx.config.to_json()}};
    write_json(ctx.config.out_dir / "manifests" / (subcommand + ".json"), m);
}

std::pair<QuantScheme, ParentTable> rq_setup(const PipelineConfig& c, std::span<const TrialSequence> train) {
    QuantScheme scheme = default_scheme();
    ParentTable table = default_parent_table();
    if (c.rq_config) std::tie(scheme, table) = rq_config_from_json(read_json(*c.rq_config));
    if (c.rq_fit_ranges) scheme = fit_scheme_ranges(train, table, scheme);
    return {scheme, table};
}

std::vector<int> labels_of(std::span<const TrialSequence> trials) {
    std::vector<int> y;
    y.reserve(trials.size());
    for (const auto& t : trials) y.push_back(t.word_class);
    return y;
}

std::vector<int> signers_of(std::span<const TrialSequence> trials) {
    std::set<int> s;
    for (const auto& t : trials) s.insert(t.signer);
    return {s.begin(), s.end()};
}

std::vector<std::string> all_labels() {
    std::vector<std::string> v;
    for (int k = 0; k < kClassCount; ++k) v.push_back(word_label(k));
    return v;
}

// Raw or RQ features, before temporal normalisation.
std::vector<FeatureSequence> extract_features(const PipelineConfig& c, std::span<const TrialSequence> trials,
                                              const QuantScheme& scheme, const ParentTable& table) {
    std::vector<FeatureSequence> out(trials.size());
    parallel_for(trials.size(), c.jobs, [&](std::size_t i) {
        out[i] = c.encoding == Encoding::Rq ? rq_features(trials[i], table, scheme, c.features)
                                            : to_features(trials[i], c.features);
    });
    return out;
}

std::vector<FeatureSequence> to_fixed_length(const PipelineConfig& c, std::vector<FeatureSequence> seqs) {
    VariantConfig v = c.variant;
    v.temporal = c.effective_temporal();
    for (auto& s : seqs) s = apply_variant_temporal(s, v);
    return seqs;
}

FeatureMatrix to_matrix(std::span<const FeatureSequence> seqs, std::size_t frames) {
    FeatureMatrix m;
    m.rows = seqs.size();
    m.cols = seqs.empty() ? 0 : seqs.front().width * frames;
    m.values.reserve(m.rows * m.cols);
    for (const auto& s : seqs) {
        auto flat = flatten_trial(s, frames);
        m.values.insert(m.values.end(), flat.begin(), flat.end());
    }
    return m;
}

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
    FeatureMatrix out;
    out.rows = rows.size();
    out.cols = m.cols;
    out.values.reserve(out.rows * out.cols);
    for (std::size_t r : rows) {
        auto row = m.row(r);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    return out;
}

// DTW feature rows as one-frame sequences so the same normaliser applies.
std::vector<FeatureSequence> rows_as_sequences(const FeatureMatrix& m) {
    std::vector<FeatureSequence> out(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        out[r].width = m.cols;
        out[r].length = 1;
        auto row = m.row(r);
        out[r].values.assign(row.begin(), row.end());
    }
    return out;
}

// Model inputs of one partition, fully preprocessed.
struct Inputs {
    std::vector<FeatureSequence> sequences;  // rnn
    FeatureMatrix matrix;                    // svm, svm-dtw
    std::vector<int> labels;
    std::vector<int> signers;
};

struct Partition {
    std::vector<TrialSequence> train, test;
};

Partition load_partition(const PipelineConfig& c) {
    auto trials = load_trials(preprocessed_dir(c), "preprocessed");
    if (trials.empty()) throw EmptyInputError("no preprocessed trials in " + preprocessed_dir(c).string());
    auto split = split_by_signer(std::move(trials), c.split);
    return {std::move(split.train), std::move(split.test)};
}

struct DtwData {
    FeatureMatrix train, test;
    std::vector<int> train_labels, test_labels, train_signers, test_signers;
};

DtwData load_dtw(const PipelineConfig& c) {
    const auto dir = dtw_dir(c);
    if (!fs::exists(dir / "labels.json")) throw ConfigError("classifier", "run dtw-features first (" + dir.string() + ")");
    DtwData d;
    d.train = read_dtw_features(dir / "train.dtwf");
    d.test = read_dtw_features(dir / "test.dtwf");
    const auto labels = read_json(dir / "labels.json");
    d.train_labels = labels.at("train_labels").get<std::vector<int>>();
    d.test_labels = labels.at("test_labels").get<std::vector<int>>();
    d.train_signers = labels.at("train_signers").get<std::vector<int>>();
    d.test_signers = labels.at("test_signers").get<std::vector<int>>();
    return d;
}

// Builds inputs for both partitions; the normaliser and RQ ranges see the training partition only.
std::pair<Inputs, Inputs> build_inputs(const PipelineConfig& c, Normalizer& normalizer, bool fit) {
    Inputs train, test;
    if (c.classifier == Classifier::SvmDtw) {
        auto d = load_dtw(c);
        auto tr = rows_as_sequences(d.train);
        auto te = rows_as_sequences(d.test);
        if (fit) {
            normalizer = fit_normalizer(tr, c.effective_post_scale(), false);
            normalizer.fit_signers = d.train_signers;
        }
        for (auto& s : tr) s = apply_normalizer(normalizer, std::move(s));
        for (auto& s : te) s = apply_normalizer(normalizer, std::move(s));
        train.matrix = to_matrix(tr, 1);
        test.matrix = to_matrix(te, 1);
        train.labels = d.train_labels;
        test.labels = d.test_labels;
        train.signers = d.train_signers;
        test.signers = d.test_signers;
        return {std::move(train), std::move(test)};
    }

    auto part = load_partition(c);
    auto [scheme, table] = rq_setup(c, part.train);
    auto tr = to_fixed_length(c, extract_features(c, part.train, scheme, table));
    auto te = part.test.empty() ? std::vector<FeatureSequence>{}
                                : to_fixed_length(c, extract_features(c, part.test, scheme, table));
    if (fit) {
        if (tr.empty()) throw EmptyInputError("training partition is empty");
        normalizer = fit_normalizer(tr, c.effective_post_scale(), c.encoding == Encoding::Raw);
        normalizer.fit_signers = signers_of(part.train);
    }
    for (auto& s : tr) s = apply_normalizer(normalizer, std::move(s));
    for (auto& s : te) s = apply_normalizer(normalizer, std::move(s));
    train.labels = labels_of(part.train);
    test.labels = labels_of(part.test);
    train.signers = signers_of(part.train);
    test.signers = signers_of(part.test);
    if (c.classifier == Classifier::Svm) {
        train.matrix = to_matrix(tr, c.variant.target_len);
        test.matrix = to_matrix(te, c.variant.target_len);
    } else {
        train.sequences = std::move(tr);
        test.sequences = std::move(te);
    }
    return {std::move(train), std::move(test)};
}

fs::path model_dir(const PipelineConfig& c) { return c.out_dir / "models" / c.resolved_run_name(); }
fs::path report_dir(const PipelineConfig& c) { return c.out_dir / "reports" / c.resolved_run_name(); }

std::string fold_file(std::size_t f, Classifier c) {
    std::ostringstream s;
    s << "fold_" << std::setw(2) << std::setfill('0') << f << (c == Classifier::Rnn ? ".rnn" : ".svm");
    return s.str();
}

std::vector<std::size_t> sorted_indices(std::span<const std::size_t> idx) {
    return {idx.begin(), idx.end()};
}

// ---------------------------------------------------------------- subcommands

int cmd_ingest(Context& ctx) {
    const auto& c = ctx.config;
    if (!c.dataset_root) throw ConfigError("dataset_root", "not set (config key, or SIGNSEQ_DATA)");
    const fs::path landmarks = *c.dataset_root / "landmarks";
    const fs::path annotations = *c.dataset_root / "annotations";
    if (!fs::is_directory(landmarks) || !fs::is_directory(annotations))
        throw ConfigError("dataset_root", "expected landmarks/ and annotations/ under " + c.dataset_root->string());

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(annotations))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::map<std::tuple<int, int, CameraView>, std::vector<TrialAnnotation>> by_video;
    for (const auto& f : files) {
        std::ifstream in(f);
        std::stringstream buf;
        buf << in.rdbuf();
        auto anns = f.extension() == ".json" ? parse_annotation_json(buf.str()) : parse_annotation(buf.str());
        for (const auto& a : anns) by_video[{a.signer, a.word_class, a.view}].push_back(a);
    }

    const fs::path out_dir = trials_dir(c);
    fs::create_directories(out_dir);
    std::size_t written = 0;
    for (auto& [key, anns] : by_video) {
        const auto& [signer, word, view] = key;
        const fs::path video = landmarks / (video_stem(signer, word, view) + ".lmk");
        if (!fs::exists(video)) throw IoError("annotated video has no landmark file: " + video.string());
        const auto stream = read_landmarks(video);
        std::sort(anns.begin(), anns.end(),
                  [](const TrialAnnotation& a, const TrialAnnotation& b) { return a.trial_index < b.trial_index; });
        for (const auto& t : segment_trials(stream.frames, anns, c.segment)) {
            write_landmarks(t, out_dir / trial_file_name(t));
            ++written;
        }
    }
    ctx.out << "ingested " << written << " trials from " << by_video.size() << " videos into " << out_dir.string()
            << "\n";
    return 0;
}

int cmd_stats(Context& ctx) {
    const auto& c = ctx.config;
    auto trials = load_trials(trials_dir(c), "trials_dir");
    const double missing = missing_hand_rate(trials);
    std::vector<TrialSequence> corrected;
    corrected.reserve(trials.size());
    for (auto& t : trials) corrected.push_back(correct_frame_rate(std::move(t)));
    const auto stats = compute_stats(corrected);
    std::size_t test = 0;
    std::map<int, std::size_t> per_signer;
    for (const auto& t : corrected) {
        test += is_test_signer(t.signer, c.split) ? 1 : 0;
        ++per_signer[t.signer];
    }

    ctx.out << "trials             " << stats.trial_count << "\n"
            << "max_frames         " << stats.max_frames << "\n"
            << "min_frames         " << stats.min_frames << "\n"
            << "avg_frames         " << std::fixed << std::setprecision(2) << stats.avg_frames << "\n"
            << "right_hand         " << stats.right_hand_instances << "\n"
            << "left_hand          " << stats.left_hand_instances << "\n"
            << "missing_hand_rate  " << std::setprecision(4) << missing << "\n"
            << "train_trials       " << stats.trial_count - test << "\n"
            << "test_trials        " << test << "\n";
    ctx.out.unsetf(std::ios::floatfield);

    json per;
    for (const auto& [s, n] : per_signer) per["U" + std::to_string(s)] = n;
    write_json(c.out_dir / "stats.json", {{"trial_count", stats.trial_count},
                                          {"max_frames", stats.max_frames},
                                          {"min_frames", stats.min_frames},
                                          {"avg_frames", stats.avg_frames},
                                          {"right_hand_instances", stats.right_hand_instances},
                                          {"left_hand_instances", stats.left_hand_instances},
                                          {"missing_hand_rate", missing},
                                          {"train_trials", stats.trial_count - test},
                                          {"test_trials", test},
                                          {"per_signer", per}});
    return 0;
}

int cmd_preprocess(Context& ctx) {
    const auto& c = ctx.config;
    auto trials = load_trials(trials_dir(c), "trials_dir");
    if (trials.empty()) throw EmptyInputError("no trials in " + trials_dir(c).string());

    std::map<std::tuple<int, int, CameraView>, std::vector<TrialSequence>> videos;
    for (auto& t : trials) videos[{t.signer, t.word_class, t.view}].push_back(std::move(t));
    std::vector<std::vector<TrialSequence>*> jobs;
    for (auto& [key, v] : videos) jobs.push_back(&v);

    parallel_for(jobs.size(), c.jobs, [&](std::size_t j) {
        auto& video = *jobs[j];
        for (auto& t : video) t = correct_frame_rate(std::move(t));
        video = calibrate_video(std::move(video), c.calibration);
        for (auto& t : video) t = apply_dominance(std::move(t), c.variant.dominance, c.flip);
    });

    const fs::path out_dir = preprocessed_dir(c);
    fs::create_directories(out_dir);
    std::size_t written = 0;
    for (auto& [key, video] : videos)
        for (const auto& t : video) {
            if (t.frames.size() > c.variant.target_len)
                ctx.err << "warning: " << trial_file_name(t) << " has " << t.frames.size()
                        << " frames, longer than target_len " << c.variant.target_len << "\n";
            write_landmarks(t, out_dir / trial_file_name(t));
            ++written;
        }
    ctx.out << "preprocessed " << written << " trials into " << out_dir.string() << "\n";
    return 0;
}

int cmd_encode_rq(Context& ctx) {
    const auto& c = ctx.config;
    auto part = load_partition(c);
    auto [scheme, table] = rq_setup(c, part.train);
    const fs::path out_dir = c.out_dir / "rq" / name(c.variant.dominance);
    fs::create_directories(out_dir);
    write_json(out_dir / "scheme.json", to_json(scheme, table));
    std::size_t written = 0;
    std::set<std::string> vocabulary;
    for (const auto* set : {&part.train, &part.test}) {
        for (const auto& t : *set) {
            std::string text;
            for (const auto& code : encode_sequence(t, table, scheme, c.features)) {
                auto token = code_to_token(code);
                vocabulary.insert(token);
                text += token;
                text += '\n';
            }
            auto file = trial_file_name(t);
            write_text(out_dir / (file.substr(0, file.size() - 4) + ".tok"), text);
            ++written;
        }
    }
    ctx.out << "encoded " << written << " trials, " << vocabulary.size() << " distinct keyframe tokens, into "
            << out_dir.string() << "\n";
    return 0;
}

int cmd_dtw_features(Context& ctx) {
    const auto& c = ctx.config;
    auto part = load_partition(c);
    if (part.train.empty()) throw EmptyInputError("training partition is empty");
    auto tr = extract_features(c, part.train, default_scheme(), default_parent_table());
    auto te = extract_features(c, part.test, default_scheme(), default_parent_table());
    auto normalizer = fit_normalizer(tr, 1.0, true);
    for (auto& s : tr) s = apply_normalizer(normalizer, std::move(s));
    for (auto& s : te) s = apply_normalizer(normalizer, std::move(s));

    const auto train_labels = labels_of(part.train);
    const auto test_labels = labels_of(part.test);
    const std::uint64_t bank_seed = c.dtw_template_seed.value_or(c.seed);
    const auto& pool = c.dtw_source_train ? tr : te;
    const auto& pool_labels = c.dtw_source_train ? train_labels : test_labels;
    if (!c.dtw_source_train)
        ctx.err << "warning: DTW templates are drawn from the test partition; test data leaks into the features\n";
    const auto bank = select_templates(pool, pool_labels, bank_seed,
                                       c.dtw_source_train ? TemplateSource::Train : TemplateSource::Test, kClassCount);

    auto compute = [&](const std::vector<FeatureSequence>& seqs) {
        FeatureMatrix m;
        m.rows = seqs.size();
        m.cols = feature_width(c.features) * bank.templates.size();
        m.values.resize(m.rows * m.cols);
        parallel_for(seqs.size(), c.jobs, [&](std::size_t i) {
            auto row = dtw_features(seqs[i], bank, c.dtw_band, 1);
            std::copy(row.begin(), row.end(), m.values.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
        });
        return m;
    };
    const fs::path out_dir = dtw_dir(c);
    fs::create_directories(out_dir);
    write_dtw_features(compute(tr), out_dir / "train.dtwf");
    write_dtw_features(compute(te), out_dir / "test.dtwf");

    std::vector<int> train_signers, test_signers;
    for (const auto& t : part.train) train_signers.push_back(t.signer);
    for (const auto& t : part.test) test_signers.push_back(t.signer);
    write_json(out_dir / "labels.json", {{"train_labels", train_labels},
                                         {"test_labels", test_labels},
                                         {"train_signers", signers_of(part.train)},
                                         {"test_signers", signers_of(part.test)},
                                         {"train_trial_signers", train_signers},
                                         {"test_trial_signers", test_signers}});
    write_json(out_dir / "manifest.json", {{"bank_seed", bank_seed},
                                           {"source", c.dtw_source_train ? "train" : "test"},
                                           {"feature_set", to_string(c.features)},
                                           {"band", c.dtw_band ? json(*c.dtw_band) : json(nullptr)},
                                           {"pool_indices", bank.pool_indices},
                                           {"cols", feature_width(c.features) * bank.templates.size()}});
    ctx.out << "dtw features: " << tr.size() << " train x " << te.size() << " test rows, "
            << feature_width(c.features) * bank.templates.size() << " columns, in " << out_dir.string() << "\n";
    return 0;
}

int cmd_train(Context& ctx) {
    const auto& c = ctx.config;
    Normalizer normalizer;
    auto [train, test] = build_inputs(c, normalizer, true);
    (void)test;
    const fs::path dir = model_dir(c);
    fs::create_directories(dir);

    std::vector<double> fold_acc;
    FoldPlan plan;
    if (c.classifier == Classifier::Rnn) {
        const auto& seqs = train.sequences;
        std::function<RnnModel(std::span<const std::size_t>, std::span<const std::size_t>)> fit =
            [&](std::span<const std::size_t> idx, std::span<const std::size_t> held) {
                std::vector<FeatureSequence> xs, vs;
                std::vector<int> ys, vys;
                for (std::size_t i : idx) xs.push_back(seqs[i]), ys.push_back(train.labels[i]);
                if (c.rnn.early_stop_patience)
                    for (std::size_t i : held) vs.push_back(seqs[i]), vys.push_back(train.labels[i]);
                RnnConfig rc = c.rnn;
                rc.jobs = 1;
                return train_rnn(xs, ys, rc, kClassCount, vs, vys).model;
            };
        std::function<int(const RnnModel&, std::size_t)> predict = [&](const RnnModel& m, std::size_t i) {
            return classify_rnn(m, seqs[i]);
        };
        auto cv = cross_validate<RnnModel>(train.labels, c.folds, c.seed, fit, predict, c.jobs);
        for (std::size_t f = 0; f < cv.models.size(); ++f) save_rnn(cv.models[f], dir / fold_file(f, c.classifier));
        fold_acc = cv.fold_accuracies;
        plan = cv.plan;
    } else {
        const auto& x = train.matrix;
        std::function<SvmModel(std::span<const std::size_t>, std::span<const std::size_t>)> fit =
            [&](std::span<const std::size_t> idx, std::span<const std::size_t>) {
                auto rows = sorted_indices(idx);
                std::vector<int> y;
                for (std::size_t i : rows) y.push_back(train.labels[i]);
                SvmParams p = c.svm;
                p.jobs = 1;
                return train_svm(select_rows(x, rows), y, p, kClassCount);
            };
        std::function<int(const SvmModel&, std::size_t)> predict = [&](const SvmModel& m, std::size_t i) {
            return predict_svm(m, x.row(i));
        };
        auto cv = cross_validate<SvmModel>(train.labels, c.folds, c.seed, fit, predict, c.jobs);
        for (std::size_t f = 0; f < cv.models.size(); ++f) save_svm(cv.models[f], dir / fold_file(f, c.classifier));
        fold_acc = cv.fold_accuracies;
        plan = cv.plan;
    }
    for (const auto& w : plan.warnings) ctx.err << "warning: " << w << "\n";
    save_normalizer(normalizer, dir / "normalizer.json");
    double avg = 0.0;
    for (double a : fold_acc) avg += a;
    avg /= static_cast<double>(fold_acc.size());
    write_json(dir / "run.json", {{"tool", kVersion},
                                  {"config", c.to_json()},
                                  {"folds", fold_acc.size()},
                                  {"fold_accuracies", fold_acc},
                                  {"avg_cv_accuracy", avg},
                                  {"stratified", plan.stratified},
                                  {"warnings", plan.warnings},
                                  {"train_samples", train.labels.size()},
                                  {"train_signers", train.signers}});
    ctx.out << "trained " << fold_acc.size() << " fold models (" << c.resolved_run_name() << "), avg CV accuracy "
            << std::fixed << std::setprecision(4) << avg << "\n";
    ctx.out.unsetf(std::ios::floatfield);
    return 0;
}

int cmd_evaluate(Context& ctx) {
    const auto& c = ctx.config;
    const fs::path dir = model_dir(c);
    if (!fs::exists(dir / "run.json")) throw ConfigError("run", "no trained models at " + dir.string());
    const auto run_info = read_json(dir / "run.json");
    Normalizer normalizer = load_normalizer(dir / "normalizer.json");
    for (int s : normalizer.fit_signers)
        if (is_test_signer(s, c.split))
            throw ConfigError("split.test_signers", "normalizer was fitted on data of test signer U" + std::to_string(s));

    auto [train, test] = build_inputs(c, normalizer, false);
    (void)train;
    if (test.labels.empty()) throw EmptyInputError("test partition is empty");
    const std::size_t folds = run_info.at("folds").get<std::size_t>();
    std::vector<std::vector<int>> predictions(folds);
    parallel_for(folds, c.jobs, [&](std::size_t f) {
        auto& p = predictions[f];
        if (c.classifier == Classifier::Rnn) {
            const auto model = load_rnn(dir / fold_file(f, c.classifier));
            for (const auto& s : test.sequences) p.push_back(classify_rnn(model, s));
        } else {
            const auto model = load_svm(dir / fold_file(f, c.classifier));
            for (std::size_t i = 0; i < test.matrix.rows; ++i) p.push_back(predict_svm(model, test.matrix.row(i)));
        }
    });
    const auto fold_acc = run_info.at("fold_accuracies").get<std::vector<double>>();
    const auto report = evaluate(predictions, test.labels, kClassCount, fold_acc);

    const fs::path out_dir = report_dir(c);
    json doc = to_json(report);
    doc["run"] = c.resolved_run_name();
    doc["seed"] = c.seed;
    doc["test_samples"] = test.labels.size();
    doc["test_signers"] = test.signers;
    write_json(out_dir / "report.json", doc);
    write_text(out_dir / "confusion.csv", confusion_csv(report, all_labels()));
    write_confusion_pgm(report, out_dir / "confusion.pgm");
    ctx.out << c.resolved_run_name() << ": best test accuracy " << std::fixed << std::setprecision(4)
            << report.best_test_accuracy << " (fold " << report.best_fold << "), avg CV accuracy "
            << report.avg_cv_accuracy << "\n";
    ctx.out.unsetf(std::ios::floatfield);
    return 0;
}

int cmd_report(Context& ctx) {
    const auto& c = ctx.config;
    const fs::path root = c.out_dir / "reports";
    if (!fs::is_directory(root)) throw ConfigError("out", "no reports under " + root.string());
    std::vector<fs::path> runs;
    for (const auto& e : fs::directory_iterator(root))
        if (fs::exists(e.path() / "report.json")) runs.push_back(e.path());
    std::sort(runs.begin(), runs.end());
    json summary = json::array();
    std::ostringstream csv;
    csv << "run,best_test_accuracy,avg_cv_accuracy,best_fold,test_samples\n";
    ctx.out << std::left << std::setw(44) << "run" << std::setw(12) << "best_test" << "avg_cv\n";
    for (const auto& r : runs) {
        const auto doc = read_json(r / "report.json");
        const auto rep = eval_report_from_json(doc);
        const auto run = r.filename().string();
        summary.push_back({{"run", run},
                           {"best_test_accuracy", rep.best_test_accuracy},
                           {"avg_cv_accuracy", rep.avg_cv_accuracy},
                           {"best_fold", rep.best_fold},
                           {"test_samples", doc.value("test_samples", 0)}});
        csv << run << ',' << rep.best_test_accuracy << ',' << rep.avg_cv_accuracy << ',' << rep.best_fold << ','
            << doc.value("test_samples", 0) << '\n';
        ctx.out << std::setw(44) << run << std::fixed << std::setprecision(4) << std::setw(12)
                << rep.best_test_accuracy << rep.avg_cv_accuracy << "\n";
        ctx.out.unsetf(std::ios::floatfield);
    }
    ctx.out << std::right;
    write_json(c.out_dir / "summary.json", summary);
    write_text(c.out_dir / "summary.csv", csv.str());
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Word-level sign recognition from holistic landmark sequences", "signseq"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    Overrides flags;
    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--jobs", flags.jobs, "worker threads");
    app.add_option("--seed", flags.seed, "random seed");
    app.add_option("--out", flags.out, "output directory");
    app.add_option("--classifier", flags.classifier, "svm | svm-dtw | rnn");
    app.add_option("--variant", flags.variant, "comma list: padded|prolonged, original|flipped");
    app.add_option("--features", flags.features, "full543 | posehands75");
    app.add_option("--encoding", flags.encoding, "raw | rq");
    app.add_option("--run", flags.run, "run name for models and reports");

    const std::vector<std::pair<const char*, const char*>> commands = {
        {"ingest", "segment annotated video landmark streams into trial files"},
        {"stats", "dataset statistics after frame-rate correction"},
        {"preprocess", "frame-rate correction, calibration and hand-dominance variant"},
        {"encode-rq", "relative-quantisation keyframe token streams"},
        {"dtw-features", "per-channel DTW distances to one template per class"},
        {"train", "cross-validated training of fold models"},
        {"evaluate", "score every fold model on the test signers"},
        {"report", "summarise all evaluation reports"},
    };
    for (const auto& [cmd, help] : commands) app.add_subcommand(cmd, help);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();

    std::optional<Context> ctx;
    try {
        json file_config;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("config", "cannot open " + config_path);
            try {
                file_config = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError("config", e.what());
            }
        }
        ctx.emplace(Context{resolve_config(file_config, flags), out, err});
        fs::create_directories(ctx->config.out_dir);
        write_manifest(*ctx, subcommand);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (subcommand == "ingest") return cmd_ingest(*ctx);
        if (subcommand == "stats") return cmd_stats(*ctx);
        if (subcommand == "preprocess") return cmd_preprocess(*ctx);
        if (subcommand == "encode-rq") return cmd_encode_rq(*ctx);
        if (subcommand == "dtw-features") return cmd_dtw_features(*ctx);
        if (subcommand == "train") return cmd_train(*ctx);
        if (subcommand == "evaluate") return cmd_evaluate(*ctx);
        return cmd_report(*ctx);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace signseq::cli
