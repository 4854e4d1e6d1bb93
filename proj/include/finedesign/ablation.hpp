#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "finedesign/design.hpp"
#include "finedesign/manifest.hpp"
#include "finedesign/trainer.hpp"

namespace finedesign {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct AblationConfig {
    /// Manifest paths as written in the config file; resolved against base_dir.
    std::string train_manifest;
    std::string test_manifest;
    std::filesystem::path base_dir;
    TrainConfig train_template;
    std::vector<std::uint64_t> seeds;
    /// Empty means enumerate_designs() over the train taxonomy.
    std::vector<DesignConfig> designs;
};

void validate(const AblationConfig& config);
AblationConfig ablation_config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
AblationConfig load_ablation_config(const std::filesystem::path& path);

/// Seed of the training run for one (seed, design) cell.
std::uint64_t run_seed(std::uint64_t seed, std::size_t design_index);

struct RunResult {
    std::uint64_t seed = 0;
    std::uint64_t run_seed = 0;
    bool ok = false;
    double far = 0.0;
    double positive_recall = 0.0;
    std::optional<double> positive_precision;
    std::string error;  // set when !ok
};

struct AblationRow {
    std::string design_name;
    DesignConfig design;
    std::optional<double> mean_far;
    std::optional<double> std_far;
    std::optional<double> mean_positive_recall;
    std::optional<double> mean_positive_precision;  // over runs where precision is defined
    std::size_t failures = 0;
    std::vector<RunResult> runs;  // in seed order
};

struct AblationReport {
    std::string toolkit_version = kToolkitVersion;
    AblationConfig config;
    std::vector<AblationRow> rows;  // in design order
    std::size_t warnings = 0;       // failed runs excluded from aggregates
};

using ProgressLog = std::function<void(const std::string&)>;

/// Trains and evaluates every (design, seed) cell on `workers` threads. The
/// report does not depend on the worker count. Runs that diverge are kept as
/// failed cells and left out of the aggregates.
AblationReport run_ablation(const AblationConfig& config, const Manifest& train, const Manifest& test,
                            std::size_t workers = 1, const ProgressLog& log = {});

/// Loads both manifests from the config paths first.
AblationReport run_ablation(const AblationConfig& config, std::size_t workers = 1, const ProgressLog& log = {});

/// Fills the aggregate fields of a row from its runs. Sample std, 0 for n = 1.
void aggregate(AblationRow& row);

enum class ReportFormat { Markdown, Csv, Json };

ReportFormat parse_report_format(std::string_view text);

/// Table row label: singleton extractions get an " only" suffix.
std::string table_row_name(const AblationRow& row);

std::string render_report(const AblationReport& report, ReportFormat format);
AblationReport report_from_json(const std::string& text);
AblationReport load_report(const std::filesystem::path& path);

}  // namespace finedesign
