#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "finedesign/design.hpp"
#include "finedesign/manifest.hpp"
#include "finedesign/trainer.hpp"

namespace finedesign {

/// Rows: true polarity (POSITIVE, NEGATIVE). Columns: predicted class
/// (POSITIVE, NEGATIVE, UNCERTAIN).
struct ConfusionMatrix {
    std::array<std::array<std::size_t, 3>, 2> counts{};
    bool has_uncertain = false;

    std::size_t at(Polarity truth, ClassId predicted) const {
        return counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
    }
    std::size_t row_total(Polarity truth) const;
    std::size_t total() const;
    std::size_t predicted_total(ClassId predicted) const;

    /// NEG -> POS over all true negatives; 0 when there are none.
    double far() const;
    /// POS -> POS over all true positives (UNCERTAIN counts as a miss); 0 when there are none.
    double positive_recall() const;
    /// POS -> POS over everything predicted POSITIVE; empty when nothing is.
    std::optional<double> positive_precision() const;

    bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws ValidationError if the spans differ in length.
ConfusionMatrix confusion(std::span<const Polarity> truth, std::span<const ClassId> predicted);

struct EvalReport {
    ConfusionMatrix confusion;
    double far = 0.0;
    std::optional<double> positive_precision;
    double positive_recall = 0.0;
    std::string design_name;
    std::uint64_t seed = 0;
};

ClassId class_id_from_name(std::string_view name);

/// Predicts every sample of a TEST manifest containing only clear categories;
/// ground truth is the category polarity.
EvalReport evaluate(const TrainedModel& model, const Manifest& test);

std::string eval_report_to_json(const EvalReport& report);

/// "8.9%": ratio as a percentage with one decimal.
std::string format_percent(double ratio);

}  // namespace finedesign
