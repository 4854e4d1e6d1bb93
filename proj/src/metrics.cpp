#include "finedesign/metrics.hpp"

#include <cstdio>

#include "finedesign/error.hpp"
#include "json.hpp"

namespace finedesign {

std::size_t ConfusionMatrix::row_total(Polarity truth) const {
    const auto& row = counts[static_cast<std::size_t>(truth)];
    return row[0] + row[1] + row[2];
}

std::size_t ConfusionMatrix::total() const { return row_total(Polarity::Positive) + row_total(Polarity::Negative); }

std::size_t ConfusionMatrix::predicted_total(ClassId predicted) const {
    const auto col = static_cast<std::size_t>(predicted);
    return counts[0][col] + counts[1][col];
}

double ConfusionMatrix::far() const {
    const std::size_t negatives = row_total(Polarity::Negative);
    if (negatives == 0) return 0.0;
    return static_cast<double>(at(Polarity::Negative, ClassId::Positive)) / static_cast<double>(negatives);
}

double ConfusionMatrix::positive_recall() const {
    const std::size_t positives = row_total(Polarity::Positive);
    if (positives == 0) return 0.0;
    return static_cast<double>(at(Polarity::Positive, ClassId::Positive)) / static_cast<double>(positives);
}

std::optional<double> ConfusionMatrix::positive_precision() const {
    const std::size_t alarms = predicted_total(ClassId::Positive);
    if (alarms == 0) return std::nullopt;
    return static_cast<double>(at(Polarity::Positive, ClassId::Positive)) / static_cast<double>(alarms);
}

ConfusionMatrix confusion(std::span<const Polarity> truth, std::span<const ClassId> predicted) {
    if (truth.size() != predicted.size()) {
        throw ValidationError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                              std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto col = static_cast<std::size_t>(predicted[i]);
        if (col > 2) throw ValidationError("confusion: invalid predicted class");
        ++m.counts[static_cast<std::size_t>(truth[i])][col];
        if (predicted[i] == ClassId::Uncertain) m.has_uncertain = true;
    }
    return m;
}

ClassId class_id_from_name(std::string_view name) {
    if (name == kPositiveClass) return ClassId::Positive;
    if (name == kNegativeClass) return ClassId::Negative;
    if (name == kUncertainClass) return ClassId::Uncertain;
    throw ValidationError("unknown class name '" + std::string(name) + "'");
}

EvalReport evaluate(const TrainedModel& model, const Manifest& test) {
    if (test.split != Split::Test) throw ValidationError("evaluate: manifest must be a test split");
    if (test.samples.empty()) throw ValidationError("evaluate: empty test set");
    if (test.feature_dim != model.params.input_dim()) {
        throw ValidationError("evaluate: test feature_dim " + std::to_string(test.feature_dim) +
                              " does not match model input " + std::to_string(model.params.input_dim()));
    }
    std::vector<ClassId> class_map;
    for (const auto& name : model.class_names) class_map.push_back(class_id_from_name(name));

    std::vector<Polarity> truth;
    std::vector<ClassId> predicted;
    truth.reserve(test.samples.size());
    predicted.reserve(test.samples.size());
    for (const auto& s : test.samples) {
        const FineCategory* c = find_category(test.taxonomy, s.category);
        if (c == nullptr || c->kind == CategoryKind::Ambiguous) {
            throw ValidationError("evaluate: sample '" + s.id + "' is not in a clear category");
        }
        truth.push_back(c->kind == CategoryKind::ClearPositive ? Polarity::Positive : Polarity::Negative);
        predicted.push_back(class_map.at(predict(model, s.features).class_index));
    }

    EvalReport r;
    r.confusion = confusion(truth, predicted);
    r.confusion.has_uncertain = model.class_names.size() > 2;
    r.far = r.confusion.far();
    r.positive_recall = r.confusion.positive_recall();
    r.positive_precision = r.confusion.positive_precision();
    r.design_name = model.design_name;
    r.seed = model.config.seed;
    return r;
}

std::string eval_report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["design"] = report.design_name;
    j["seed"] = report.seed;
    j["far"] = report.far;
    j["positive_recall"] = report.positive_recall;
    j["positive_precision"] =
        report.positive_precision ? nlohmann::ordered_json(*report.positive_precision) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json cm;
    const char* rows[] = {"POSITIVE", "NEGATIVE"};
    for (std::size_t r = 0; r < 2; ++r) {
        nlohmann::ordered_json row;
        row["POSITIVE"] = report.confusion.counts[r][0];
        row["NEGATIVE"] = report.confusion.counts[r][1];
        if (report.confusion.has_uncertain) row["UNCERTAIN"] = report.confusion.counts[r][2];
        cm[rows[r]] = std::move(row);
    }
    j["confusion"] = std::move(cm);
    return j.dump(2) + "\n";
}

std::string format_percent(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", ratio * 100.0);
    return buf;
}

}  // namespace finedesign
