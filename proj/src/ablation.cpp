#include "finedesign/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "finedesign/error.hpp"
#include "finedesign/metrics.hpp"
#include "finedesign/rng.hpp"
#include "json.hpp"

namespace finedesign {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kAggregationNote =
    "mean and sample standard deviation over seeds; failed runs are excluded from aggregates";

ordered_json optional_number(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> read_optional(const ordered_json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

ordered_json config_json(const AblationConfig& c) {
    ordered_json j;
    j["train_manifest"] = c.train_manifest;
    j["test_manifest"] = c.test_manifest;
    j["train_config"] = ordered_json::parse(train_config_to_json(c.train_template));
    j["seeds"] = c.seeds;
    j["designs"] = ordered_json::array();
    for (const auto& d : c.designs) j["designs"].push_back({{"extract", d.extract}});
    return j;
}

std::string percent_or_na(const std::optional<double>& v) { return v ? format_percent(*v) : "n/a"; }

std::string number_or_empty(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *v);
    return std::string(buf, end);
}

std::string render_markdown(const AblationReport& report) {
    std::string out = "| Dataset Design | FAR | FAR std | Positive recall | Positive precision | Runs |\n";
    out += "|---|---|---|---|---|---|\n";
    for (const auto& row : report.rows) {
        out += "| " + table_row_name(row) + " | " + percent_or_na(row.mean_far) + " | " + percent_or_na(row.std_far) +
               " | " + percent_or_na(row.mean_positive_recall) + " | " + percent_or_na(row.mean_positive_precision) +
               " | " + std::to_string(row.runs.size() - row.failures) + "/" + std::to_string(row.runs.size()) + " |\n";
    }
    return out;
}

std::string render_csv(const AblationReport& report) {
    std::string out = "design,far_mean,far_std,positive_recall_mean,positive_precision_mean,runs_ok,failures\n";
    for (const auto& row : report.rows) {
        out += table_row_name(row) + "," + number_or_empty(row.mean_far) + "," + number_or_empty(row.std_far) + "," +
               number_or_empty(row.mean_positive_recall) + "," + number_or_empty(row.mean_positive_precision) + "," +
               std::to_string(row.runs.size() - row.failures) + "," + std::to_string(row.failures) + "\n";
    }
    return out;
}

std::string render_json(const AblationReport& report) {
    ordered_json j;
    j["toolkit_version"] = report.toolkit_version;
    j["aggregation"] = kAggregationNote;
    j["config"] = config_json(report.config);
    j["warnings"] = report.warnings;
    j["rows"] = ordered_json::array();
    for (const auto& row : report.rows) {
        ordered_json r;
        r["design"] = row.design_name;
        r["extract"] = row.design.extract;
        r["mean_far"] = optional_number(row.mean_far);
        r["std_far"] = optional_number(row.std_far);
        r["mean_positive_recall"] = optional_number(row.mean_positive_recall);
        r["mean_positive_precision"] = optional_number(row.mean_positive_precision);
        r["failures"] = row.failures;
        r["runs"] = ordered_json::array();
        for (const auto& run : row.runs) {
            ordered_json rj;
            rj["seed"] = run.seed;
            rj["run_seed"] = run.run_seed;
            rj["status"] = run.ok ? "ok" : "failed";
            if (run.ok) {
                rj["far"] = run.far;
                rj["positive_recall"] = run.positive_recall;
                rj["positive_precision"] = optional_number(run.positive_precision);
            } else {
                rj["error"] = run.error;
            }
            r["runs"].push_back(std::move(rj));
        }
        j["rows"].push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

}  // namespace

void validate(const AblationConfig& config) {
    validate(config.train_template);
    if (config.seeds.empty()) throw ValidationError("ablation config: seeds must be non-empty");
    std::set<std::uint64_t> unique(config.seeds.begin(), config.seeds.end());
    if (unique.size() != config.seeds.size()) throw ValidationError("ablation config: seeds must be distinct");
}

AblationConfig ablation_config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
    AblationConfig c;
    c.base_dir = base_dir;
    try {
        const auto j = ordered_json::parse(text);
        c.train_manifest = j.at("train_manifest").get<std::string>();
        c.test_manifest = j.at("test_manifest").get<std::string>();
        if (j.contains("train_config")) c.train_template = train_config_from_json(j["train_config"].dump());
        c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("designs")) {
            for (const auto& d : j["designs"]) c.designs.push_back(DesignConfig{d.at("extract").get<std::vector<std::string>>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("ablation config: ") + e.what());
    }
    validate(c);
    return c;
}

AblationConfig load_ablation_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open ablation config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ablation_config_from_json(ss.str(), path.parent_path());
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t design_index) { return hash_combine(seed, design_index); }

void aggregate(AblationRow& row) {
    std::vector<double> fars;
    double recall_sum = 0.0;
    double precision_sum = 0.0;
    std::size_t precision_n = 0;
    row.failures = 0;
    for (const auto& run : row.runs) {
        if (!run.ok) {
            ++row.failures;
            continue;
        }
        fars.push_back(run.far);
        recall_sum += run.positive_recall;
        if (run.positive_precision) {
            precision_sum += *run.positive_precision;
            ++precision_n;
        }
    }
    row.mean_far.reset();
    row.std_far.reset();
    row.mean_positive_recall.reset();
    row.mean_positive_precision.reset();
    if (fars.empty()) return;

    const double n = static_cast<double>(fars.size());
    double mean = 0.0;
    for (double f : fars) mean += f;
    mean /= n;
    const auto [lo, hi] = std::minmax_element(fars.begin(), fars.end());
    mean = std::clamp(mean, *lo, *hi);
    double var = 0.0;
    if (fars.size() > 1) {
        for (double f : fars) var += (f - mean) * (f - mean);
        var /= n - 1.0;
    }
    row.mean_far = mean;
    row.std_far = std::sqrt(var);
    row.mean_positive_recall = recall_sum / n;
    if (precision_n > 0) row.mean_positive_precision = precision_sum / static_cast<double>(precision_n);
}

AblationReport run_ablation(const AblationConfig& config, const Manifest& train_set, const Manifest& test_set,
                            std::size_t workers, const ProgressLog& log) {
    validate(config);
    const std::vector<DesignConfig> designs =
        config.designs.empty() ? enumerate_designs(train_set.taxonomy) : config.designs;

    AblationReport report;
    report.config = config;
    std::vector<LabeledDataset> datasets;
    for (const auto& d : designs) {
        datasets.push_back(apply_design(train_set, d));
        AblationRow row;
        row.design = datasets.back().provenance;
        row.design_name = datasets.back().design_name;
        row.runs.resize(config.seeds.size());
        report.rows.push_back(std::move(row));
    }

    const std::size_t cells = designs.size() * config.seeds.size();
    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::exception_ptr fatal;

    auto worker = [&] {
        while (true) {
            const std::size_t cell = next.fetch_add(1);
            if (cell >= cells) return;
            const std::size_t d = cell / config.seeds.size();
            const std::size_t s = cell % config.seeds.size();
            RunResult result;
            result.seed = config.seeds[s];
            result.run_seed = run_seed(result.seed, d);
            try {
                TrainConfig tc = config.train_template;
                tc.seed = result.run_seed;
                const TrainedModel model = train(datasets[d], tc);
                const EvalReport eval = evaluate(model, test_set);
                result.ok = true;
                result.far = eval.far;
                result.positive_recall = eval.positive_recall;
                result.positive_precision = eval.positive_precision;
            } catch (const NumericalError& e) {
                result.error = e.what();
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!fatal) fatal = std::current_exception();
                next.store(cells);
                return;
            }
            report.rows[d].runs[s] = std::move(result);
            if (log) {
                std::lock_guard lock(mutex);
                const auto& r = report.rows[d].runs[s];
                log(report.rows[d].design_name + " seed " + std::to_string(r.seed) + ": " +
                    (r.ok ? "far " + format_percent(r.far) : "failed (" + r.error + ")"));
            }
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(cells, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);

    for (auto& row : report.rows) {
        aggregate(row);
        report.warnings += row.failures;
    }
    return report;
}

AblationReport run_ablation(const AblationConfig& config, std::size_t workers, const ProgressLog& log) {
    const Manifest train_set = load_manifest(config.base_dir / config.train_manifest);
    const Manifest test_set = load_manifest(config.base_dir / config.test_manifest);
    return run_ablation(config, train_set, test_set, workers, log);
}

ReportFormat parse_report_format(std::string_view text) {
    if (text == "markdown" || text == "md") return ReportFormat::Markdown;
    if (text == "csv") return ReportFormat::Csv;
    if (text == "json") return ReportFormat::Json;
    throw ValidationError("unknown report format '" + std::string(text) + "'");
}

std::string table_row_name(const AblationRow& row) {
    return row.design.extract.size() == 1 ? row.design_name + " only" : row.design_name;
}

std::string render_report(const AblationReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::Markdown: return render_markdown(report);
        case ReportFormat::Csv: return render_csv(report);
        case ReportFormat::Json: return render_json(report);
    }
    return {};
}

AblationReport report_from_json(const std::string& text) {
    AblationReport report;
    try {
        const auto j = ordered_json::parse(text);
        report.toolkit_version = j.at("toolkit_version").get<std::string>();
        report.config = ablation_config_from_json(j.at("config").dump());
        report.warnings = j.at("warnings").get<std::size_t>();
        for (const auto& r : j.at("rows")) {
            AblationRow row;
            row.design_name = r.at("design").get<std::string>();
            row.design.extract = r.at("extract").get<std::vector<std::string>>();
            row.mean_far = read_optional(r, "mean_far");
            row.std_far = read_optional(r, "std_far");
            row.mean_positive_recall = read_optional(r, "mean_positive_recall");
            row.mean_positive_precision = read_optional(r, "mean_positive_precision");
            row.failures = r.at("failures").get<std::size_t>();
            for (const auto& rj : r.at("runs")) {
                RunResult run;
                run.seed = rj.at("seed").get<std::uint64_t>();
                run.run_seed = rj.at("run_seed").get<std::uint64_t>();
                run.ok = rj.at("status").get<std::string>() == "ok";
                if (run.ok) {
                    run.far = rj.at("far").get<double>();
                    run.positive_recall = rj.at("positive_recall").get<double>();
                    run.positive_precision = read_optional(rj, "positive_precision");
                } else {
                    run.error = rj.value("error", std::string());
                }
                row.runs.push_back(std::move(run));
            }
            report.rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("ablation report: ") + e.what());
    }
    return report;
}

AblationReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open report '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return report_from_json(ss.str());
}

}  // namespace finedesign
