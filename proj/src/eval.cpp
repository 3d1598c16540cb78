#include "signseq/eval.hpp"

#include <cmath>
#include <fstream>
#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "random.hpp"
#include "signseq/errors.hpp"

namespace signseq {

FoldPlan make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("folds", "need at least two folds");
    if (labels.size() < k) throw InvariantError("fewer samples than folds");
    FoldPlan plan;
    plan.folds.resize(k);
    std::mt19937_64 rng(seed);

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [label, members] : by_class) {
        if (members.size() < k) {
            plan.stratified = false;
            plan.warnings.push_back("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                                    " samples, fewer than " + std::to_string(k) +
                                    " folds; using unstratified folds");
            break;
        }
    }

    std::size_t slot = 0;
    if (plan.stratified) {
        for (auto& [label, members] : by_class) {
            detail::shuffle(members, rng);
            for (std::size_t i : members) plan.folds[slot++ % k].push_back(i);
        }
    } else {
        auto all = detail::iota(labels.size());
        detail::shuffle(all, rng);
        for (std::size_t i : all) plan.folds[slot++ % k].push_back(i);
    }
    for (auto& f : plan.folds) std::sort(f.begin(), f.end());
    return plan;
}

std::vector<std::size_t> training_indices(const FoldPlan& plan, std::size_t fold) {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < plan.folds.size(); ++f)
        if (f != fold) out.insert(out.end(), plan.folds[f].begin(), plan.folds[f].end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> confusion_matrix(std::span<const int> truth, std::span<const int> predicted,
                                          std::size_t class_count) {
    if (truth.size() != predicted.size()) throw InvariantError("confusion_matrix: size mismatch");
    std::vector<std::size_t> m(class_count * class_count, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || static_cast<std::size_t>(truth[i]) >= class_count || predicted[i] < 0 ||
            static_cast<std::size_t>(predicted[i]) >= class_count)
            throw LabelError("confusion_matrix: label out of range");
        ++m[static_cast<std::size_t>(truth[i]) * class_count + static_cast<std::size_t>(predicted[i])];
    }
    return m;
}

EvalReport evaluate(std::span<const std::vector<int>> predictions, std::span<const int> test_labels,
                    std::size_t class_count, std::span<const double> fold_accuracies) {
    if (test_labels.empty()) throw EmptyInputError("evaluate: empty test set");
    if (predictions.empty()) throw EmptyInputError("evaluate: no fold models");
    EvalReport r;
    r.class_count = class_count;
    r.fold_accuracies.assign(fold_accuracies.begin(), fold_accuracies.end());
    if (!r.fold_accuracies.empty()) {
        double sum = 0.0;
        for (double a : r.fold_accuracies) sum += a;
        r.avg_cv_accuracy = sum / static_cast<double>(r.fold_accuracies.size());
    }
    for (const auto& p : predictions) {
        if (p.size() != test_labels.size()) throw InvariantError("evaluate: prediction count mismatch");
        std::size_t correct = 0;
        for (std::size_t i = 0; i < p.size(); ++i) correct += p[i] == test_labels[i] ? 1 : 0;
        r.test_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(p.size()));
    }
    r.best_fold = static_cast<std::size_t>(std::max_element(r.test_accuracies.begin(), r.test_accuracies.end()) -
                                           r.test_accuracies.begin());
    r.best_test_accuracy = r.test_accuracies[r.best_fold];
    r.confusion = confusion_matrix(test_labels, predictions[r.best_fold], class_count);
    r.per_class_top1.resize(class_count);
    for (std::size_t c = 0; c < class_count; ++c) {
        std::size_t row = 0;
        for (std::size_t p = 0; p < class_count; ++p) row += r.confusion_at(c, p);
        r.per_class_top1[c] = row == 0 ? std::numeric_limits<double>::quiet_NaN()
                                       : static_cast<double>(r.confusion_at(c, c)) / static_cast<double>(row);
    }
    return r;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json per_class = nlohmann::json::array();
    for (double v : r.per_class_top1) per_class.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    return {{"fold_accuracies", r.fold_accuracies},
            {"avg_cv_accuracy", r.avg_cv_accuracy},
            {"test_accuracies", r.test_accuracies},
            {"best_test_accuracy", r.best_test_accuracy},
            {"best_fold", r.best_fold},
            {"class_count", r.class_count},
            {"confusion", r.confusion},
            {"per_class_top1", per_class}};
}

EvalReport eval_report_from_json(const nlohmann::json& doc) {
    try {
        EvalReport r;
        r.fold_accuracies = doc.at("fold_accuracies").get<std::vector<double>>();
        r.avg_cv_accuracy = doc.at("avg_cv_accuracy").get<double>();
        r.test_accuracies = doc.at("test_accuracies").get<std::vector<double>>();
        r.best_test_accuracy = doc.at("best_test_accuracy").get<double>();
        r.best_fold = doc.at("best_fold").get<std::size_t>();
        r.class_count = doc.at("class_count").get<std::size_t>();
        r.confusion = doc.at("confusion").get<std::vector<std::size_t>>();
        for (const auto& v : doc.at("per_class_top1"))
            r.per_class_top1.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report JSON: ") + e.what());
    }
}

std::string confusion_csv(const EvalReport& r, const std::vector<std::string>& labels) {
    if (labels.size() != r.class_count) throw InvariantError("confusion_csv: label count mismatch");
    std::ostringstream out;
    out << "true\\predicted";
    for (const auto& l : labels) out << ',' << l;
    out << '\n';
    for (std::size_t t = 0; t < r.class_count; ++t) {
        out << labels[t];
        for (std::size_t p = 0; p < r.class_count; ++p) out << ',' << r.confusion_at(t, p);
        out << '\n';
    }
    return out.str();
}

void write_confusion_pgm(const EvalReport& r, const std::filesystem::path& path, int cell) {
    const std::size_t n = r.class_count;
    const std::size_t side = n * static_cast<std::size_t>(cell);
    std::vector<unsigned char> pixels(side * side, 255);
    for (std::size_t t = 0; t < n; ++t) {
        std::size_t row = 0;
        for (std::size_t p = 0; p < n; ++p) row += r.confusion_at(t, p);
        for (std::size_t p = 0; p < n; ++p) {
            const double share = row ? static_cast<double>(r.confusion_at(t, p)) / static_cast<double>(row) : 0.0;
            const auto shade = static_cast<unsigned char>(std::lround(255.0 * (1.0 - share)));
            for (int dy = 0; dy < cell; ++dy)
                for (int dx = 0; dx < cell; ++dx)
                    pixels[(t * cell + dy) * side + p * cell + dx] = shade;
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << side << ' ' << side << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

}  // namespace signseq
