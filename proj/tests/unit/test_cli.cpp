#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "signseq/cli.hpp"
#include "signseq/dtw.hpp"
#include "signseq/normalizer.hpp"
#include "support.hpp"

using namespace signseq;
using testsupport::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string write_config(const TempDir& dir, const json& j) {
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p.string();
}

json small_config(const TempDir& dir) {
    return json{{"dataset_root", (dir / "data").string()},
                {"folds", 3},
                {"variant", {{"target_len", 32}}},
                {"split", {{"test_signers", {4}}}},
                {"rnn", {{"hidden", 4}, {"attention", 4}, {"max_epochs", 3}, {"batch_size", 8}, {"learning_rate", 0.01}}}};
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    auto r = invoke({"frobnicate"});
    CHECK(r.code == 2);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"stats", "--jobs", "many"}).code == 2);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("configuration errors name the key") {
    TempDir dir("cli_cfg");
    auto r = invoke({"train", "--out", dir.path().string(), "--classifier", "forest"});
    CHECK(r.code == 2);
    CHECK(r.err.find("classifier") != std::string::npos);

    r = invoke({"stats", "--out", dir.path().string(), "--config", write_config(dir, {{"folds", 1}})});
    CHECK(r.code == 2);
    CHECK(r.err.find("folds") != std::string::npos);

    r = invoke({"stats", "--out", dir.path().string(), "--config", write_config(dir, {{"rnn", {{"dropout", 1.5}}}})});
    CHECK(r.code == 2);
    CHECK(r.err.find("rnn.dropout") != std::string::npos);

    r = invoke({"stats", "--config", (dir / "absent.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("config") != std::string::npos);

    r = invoke({"ingest", "--out", dir.path().string(), "--config",
             write_config(dir, {{"dataset_root", (dir / "nowhere").string()}})});
    CHECK(r.code == 2);
    CHECK(r.err.find("dataset_root") != std::string::npos);

    r = invoke({"stats", "--out", dir.path().string(), "--variant", "sideways"});
    CHECK(r.code == 2);
    CHECK(r.err.find("variant") != std::string::npos);
}

TEST_CASE("run names and effective settings") {
    auto c = cli::resolve_config(json::object(), cli::Overrides{});
    CHECK(c.resolved_run_name() == "svm_posehands75_prolonged_original");
    CHECK(c.effective_post_scale() == 1.0);
    cli::Overrides o;
    o.classifier = "rnn";
    o.encoding = "rq";
    o.variant = "flipped";
    c = cli::resolve_config(json::object(), o);
    CHECK(c.resolved_run_name() == "rnn_posehands75_rq_padded_flipped");
    CHECK(c.effective_post_scale() == 100.0);
    CHECK(c.effective_temporal() == TemporalMode::Padded);
}

TEST_CASE("pipeline on a synthetic corpus") {
    TempDir dir("cli_pipe");
    testsupport::write_synthetic_dataset(dir / "data", testsupport::DatasetOptions{});
    const auto cfg = write_config(dir, small_config(dir));
    const auto out = (dir / "out").string();
    auto run = [&](std::vector<std::string> args) {
        args.insert(args.end(), {"--config", cfg, "--out", out});
        const auto r = invoke(args);
        INFO(r.err);
        CHECK(r.code == 0);
        return r;
    };

    run({"ingest"});
    CHECK(fs::exists(dir / "out" / "trials" / "U1_W1_F_T001.lmk"));
    CHECK(fs::exists(dir / "out" / "manifests" / "ingest.json"));

    const auto stats = run({"stats"});
    CHECK(stats.out.find("trials             36") != std::string::npos);
    CHECK(stats.out.find("test_trials        9") != std::string::npos);
    const auto sj = json::parse(testsupport::read_file(dir / "out" / "stats.json"));
    CHECK(sj["left_hand_instances"] == 9);
    CHECK(sj["right_hand_instances"] == 27);

    run({"preprocess", "--variant", "flipped"});
    run({"train", "--classifier", "svm", "--variant", "prolonged,flipped", "--features", "posehands75"});
    const auto ev = run({"evaluate", "--classifier", "svm", "--variant", "prolonged,flipped", "--features", "posehands75"});
    const auto report_path = dir / "out" / "reports" / "svm_posehands75_prolonged_flipped" / "report.json";
    REQUIRE(fs::exists(report_path));
    const auto report = json::parse(testsupport::read_file(report_path));
    CHECK(report.contains("best_test_accuracy"));
    CHECK(report["best_test_accuracy"].get<double>() >= 0.0);
    CHECK(fs::exists(report_path.parent_path() / "confusion.csv"));
    CHECK(fs::exists(report_path.parent_path() / "confusion.pgm"));

    const auto norm = load_normalizer(dir / "out" / "models" / "svm_posehands75_prolonged_flipped" / "normalizer.json");
    CHECK(norm.fit_signers == std::vector<int>{1, 2, 3});

    run({"encode-rq", "--variant", "flipped"});
    CHECK(fs::exists(dir / "out" / "rq" / "flipped" / "scheme.json"));
    CHECK(fs::exists(dir / "out" / "rq" / "flipped" / "U4_W2_F_T002.tok"));

    run({"train", "--classifier", "rnn", "--encoding", "rq", "--variant", "flipped"});
    run({"evaluate", "--classifier", "rnn", "--encoding", "rq", "--variant", "flipped"});
    CHECK(fs::exists(dir / "out" / "reports" / "rnn_posehands75_rq_padded_flipped" / "report.json"));

    const auto rep = run({"report"});
    CHECK(rep.out.find("rnn_posehands75_rq_padded_flipped") != std::string::npos);
    const auto summary = json::parse(testsupport::read_file(dir / "out" / "summary.json"));
    CHECK(summary.size() == 2);

    // templates need every one of the 60 classes
    auto r = invoke({"dtw-features", "--config", cfg, "--out", out, "--variant", "flipped"});
    CHECK(r.code == 1);
    CHECK(r.err.find("W4") != std::string::npos);

    // a normaliser fitted on a test signer is refused
    const auto npath = dir / "out" / "models" / "svm_posehands75_prolonged_flipped" / "normalizer.json";
    auto nj = json::parse(testsupport::read_file(npath));
    nj["fit_signers"] = {1, 4};
    std::ofstream(npath) << nj.dump();
    r = invoke({"evaluate", "--config", cfg, "--out", out, "--classifier", "svm", "--variant", "prolonged,flipped"});
    CHECK(r.code == 2);
    CHECK(r.err.find("U4") != std::string::npos);

    // evaluating an untrained run is a configuration error
    r = invoke({"evaluate", "--config", cfg, "--out", out, "--classifier", "svm", "--variant", "padded"});
    CHECK(r.code == 2);
}

TEST_CASE("reports are byte-identical across runs and job counts") {
    TempDir dir("cli_det");
    testsupport::write_synthetic_dataset(dir / "data", testsupport::DatasetOptions{});
    const auto cfg = write_config(dir, small_config(dir));
    std::vector<std::string> reports;
    for (const char* jobs : {"1", "3"}) {
        const auto out = (dir / (std::string("out") + jobs)).string();
        for (std::vector<std::string> step : {std::vector<std::string>{"ingest"}, {"preprocess", "--variant", "flipped"},
                                              {"train", "--variant", "prolonged,flipped"},
                                              {"evaluate", "--variant", "prolonged,flipped"}}) {
            step.insert(step.end(), {"--config", cfg, "--out", out, "--jobs", jobs, "--seed", "11"});
            REQUIRE(invoke(step).code == 0);
        }
        reports.push_back(testsupport::read_file(fs::path(out) / "reports" / "svm_posehands75_prolonged_flipped" / "report.json"));
    }
    CHECK(reports[0] == reports[1]);
}

TEST_CASE("dtw features and the dtw classifier") {
    TempDir dir("cli_dtw");
    testsupport::DatasetOptions d;
    d.signers = {1, 4};
    d.class_count = 60;
    d.trials_per_video = 1;
    d.left_signers = {};
    d.fps15_signers = {};
    d.min_frames = 5;
    d.max_frames = 8;
    testsupport::write_synthetic_dataset(dir / "data", d);
    auto c = small_config(dir);
    c["folds"] = 2;
    const auto cfg = write_config(dir, c);
    const auto out = (dir / "out").string();
    for (std::vector<std::string> step : {std::vector<std::string>{"ingest"}, {"preprocess"}, {"dtw-features"},
                                          {"train", "--classifier", "svm-dtw"}, {"evaluate", "--classifier", "svm-dtw"}}) {
        step.insert(step.end(), {"--config", cfg, "--out", out});
        const auto r = invoke(step);
        INFO(r.err);
        REQUIRE(r.code == 0);
    }
    const auto labels = json::parse(testsupport::read_file(dir / "out" / "dtw" / "posehands75_original" / "labels.json"));
    CHECK(labels["train_labels"].size() == 60);
    CHECK(fs::exists(dir / "out" / "reports" / "svm-dtw_posehands75_original" / "report.json"));
}
