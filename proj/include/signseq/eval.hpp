#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "signseq/parallel.hpp"

namespace signseq {

/// Sample indices of each fold.
struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds;
    bool stratified = true;
    std::vector<std::string> warnings;
};

/// Seeded random k-fold partition. Each class is shuffled and dealt round-robin
/// across folds, continuing where the previous class stopped, so fold sizes
/// differ by at most one. If any class has fewer than k members the plan
/// falls back to a plain shuffled partition and records a warning.
FoldPlan make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// Training indices for fold f: every index not in fold f.
std::vector<std::size_t> training_indices(const FoldPlan& plan, std::size_t fold);

template <class Model>
struct CvResult {
    std::vector<Model> models;
    std::vector<double> fold_accuracies;
    double average_accuracy = 0.0;
    FoldPlan plan;
};

/// Trains one model per fold on the other folds and scores it on the held-out
/// fold. `train(train_idx, val_idx)` returns a model; `predict(model, i)`
/// classifies sample i. Folds run concurrently up to `jobs`.
template <class Model>
CvResult<Model> cross_validate(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                               const std::function<Model(std::span<const std::size_t>, std::span<const std::size_t>)>& train,
                               const std::function<int(const Model&, std::size_t)>& predict, int jobs = 1) {
    CvResult<Model> out;
    out.plan = make_folds(labels, k, seed);
    std::vector<std::optional<Model>> slots(k);
    out.fold_accuracies.assign(k, 0.0);
    parallel_for(k, jobs, [&](std::size_t f) {
        const auto train_idx = training_indices(out.plan, f);
        const auto& held = out.plan.folds[f];
        slots[f].emplace(train(train_idx, held));
        std::size_t correct = 0;
        for (std::size_t i : held) correct += predict(*slots[f], i) == labels[i] ? 1 : 0;
        out.fold_accuracies[f] = held.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(held.size());
    });
    for (auto& s : slots) out.models.push_back(std::move(*s));
    double sum = 0.0;
    for (double a : out.fold_accuracies) sum += a;
    out.average_accuracy = sum / static_cast<double>(k);
    return out;
}

struct EvalReport {
    std::vector<double> fold_accuracies;  // held-out CV accuracy per fold
    double avg_cv_accuracy = 0.0;
    std::vector<double> test_accuracies;  // each fold model on the full test set
    double best_test_accuracy = 0.0;
    std::size_t best_fold = 0;
    std::size_t class_count = 0;
    std::vector<std::size_t> confusion;    // class_count x class_count, row = true class
    std::vector<double> per_class_top1;    // recall per class; NaN when a class has no test samples

    std::size_t confusion_at(std::size_t truth, std::size_t predicted) const {
        return confusion[truth * class_count + predicted];
    }
};

/// Confusion counts for predictions against truth.
std::vector<std::size_t> confusion_matrix(std::span<const int> truth, std::span<const int> predicted,
                                          std::size_t class_count);

/// Scores every fold model's test predictions, keeps the best (ties to the
/// lowest fold) and builds its confusion matrix. `predictions[f][i]` is fold
/// f's prediction for test sample i. Throws EmptyInputError on an empty test set.
EvalReport evaluate(std::span<const std::vector<int>> predictions, std::span<const int> test_labels,
                    std::size_t class_count, std::span<const double> fold_accuracies = {});

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& doc);

/// CSV with a header row of labels and one row per true class.
std::string confusion_csv(const EvalReport& report, const std::vector<std::string>& labels);

/// Greyscale PGM heatmap, row-normalised, `cell` pixels per entry.
void write_confusion_pgm(const EvalReport& report, const std::filesystem::path& path, int cell = 8);

}  // namespace signseq
