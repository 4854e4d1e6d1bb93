// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "finedesign/ablation.hpp"
#include "finedesign/design.hpp"
#include "finedesign/metrics.hpp"
#include "finedesign/rng.hpp"
#include "finedesign/synthgen.hpp"
#include "finedesign/trainer.hpp"
#include "gradient_oracle.hpp"
#include "test_util.hpp"

using namespace finedesign;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& id, const std::string& title, const Outcome& o) {
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << title << " -- " << o.detail << std::endl;
    if (!o.pass) ++failures;
}

template <typename... Args>
std::string fmt(const char* format, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::string manifest_bytes(const Manifest& m) {
    std::ostringstream out;
    write_manifest(m, out);
    return out.str();
}

// 1. Category counts of the default synthetic data and a disjoint 1000-sample test split.
Outcome fig5_fidelity() {
    testing::TempDir dir;
    const auto start = Clock::now();
    const SynthConfig config = default_synth_config();
    const Manifest train_set = generate_train(config);
    const Manifest test_set = generate_test(config);
    save_manifest(train_set, dir / "train.jsonl");
    save_manifest(test_set, dir / "test.jsonl");
    const double elapsed = seconds_since(start);

    const auto counts = summarize(load_manifest(dir / "train.jsonl"));
    const bool counts_ok = counts.at("clear_positive") == 3384 && counts.at("clear_negative") == 3465 &&
                           counts.at("irregular_wearing") == 587 && counts.at("low_quality") == 2319 &&
                           counts.at("mask_like_occlusion") == 375;
    std::set<std::string> ids;
    for (const auto& s : train_set.samples) ids.insert(s.id);
    bool disjoint = true;
    for (const auto& s : test_set.samples) disjoint = disjoint && ids.count(s.id) == 0;
    const auto test_counts = summarize(test_set);
    const bool test_ok = test_set.samples.size() == 1000 && test_counts.at("clear_positive") == 500 &&
                         test_counts.at("clear_negative") == 500;
    return {counts_ok && disjoint && test_ok && elapsed < 5.0,
            fmt("train counts %s, test size %zu, ", counts_ok ? "match" : "differ", test_set.samples.size()) +
                (disjoint ? "ids disjoint" : "ids overlap") + fmt(", %.2f s (limit 5 s)", elapsed)};
}

// 2. Analytic gradients vs central finite differences, h = 1e-6.
Outcome gradient_oracle() {
    const auto start = Clock::now();
    double worst = 0.0;
    std::size_t entries = 0;
    constexpr int kInstances = 40;
    for (int i = 0; i < kInstances; ++i) {
        const auto check = testing::check_gradient(testing::random_instance(1000 + i), 1e-6);
        worst = std::max(worst, check.max_rel_error);
        entries += check.entries;
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-5 && elapsed < 10.0,
            fmt("%d instances, %zu parameters, ", kInstances, entries) +
                fmt("max rel error %.3g (limit 1e-5), %.2f s (limit 10 s)", worst, elapsed)};
}

// 3. Adam step 1 and cosine schedule endpoints.
Outcome optimizer_exactness() {
    MlpParams p = MlpParams::zeros({1, 1});
    p.layers[0].weights[0] = 1.0;
    MlpParams g = MlpParams::zeros({1, 1});
    g.layers[0].weights[0] = 2.0;
    AdamState state = AdamState::zeros_like(p);
    adam_step(p, g, state, 0.001, TrainConfig{});
    // Hand evaluation: m_hat = 2, v_hat = 4, so 1 - 0.001 * 2 / (2 + 1e-8) = 0.999000000005.
    const double adam_err = std::abs(p.layers[0].weights[0] - 0.999000000005);

    const double lr0 = 1e-3;
    const std::size_t total = 4000;
    const double e0 = std::abs(cosine_lr(0, total, lr0) - lr0);
    const double e_half = std::abs(cosine_lr(total / 2, total, lr0) - lr0 / 2);
    const double e_end = std::abs(cosine_lr(total, total, lr0));
    const double sched_err = std::max({e0, e_half, e_end});
    return {adam_err <= 1e-9 && sched_err <= 1e-12,
            fmt("adam step-1 error %.3g (limit 1e-9), cosine endpoint error %.3g (limit 1e-12)", adam_err, sched_err)};
}

// 4. Confusion / FAR / precision / recall vs a naive tally.
Outcome metric_oracle() {
    Rng rng(2024);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Polarity> truth(1000);
        std::vector<ClassId> pred(1000);
        for (std::size_t i = 0; i < 1000; ++i) {
            truth[i] = static_cast<Polarity>(rng.below(2));
            pred[i] = static_cast<ClassId>(rng.below(3));
        }
        std::size_t neg = 0, neg_pos = 0, pos = 0, pos_pos = 0, any_pos = 0;
        std::size_t cells[2][3] = {};
        for (std::size_t i = 0; i < 1000; ++i) {
            const bool is_pos = truth[i] == Polarity::Positive;
            const bool said_pos = pred[i] == ClassId::Positive;
            cells[is_pos ? 0 : 1][static_cast<int>(pred[i])]++;
            neg += !is_pos;
            pos += is_pos;
            neg_pos += !is_pos && said_pos;
            pos_pos += is_pos && said_pos;
            any_pos += said_pos;
        }
        const ConfusionMatrix m = confusion(truth, pred);
        bool ok = true;
        for (int r = 0; r < 2; ++r) {
            for (int k = 0; k < 3; ++k) ok = ok && m.counts[r][k] == cells[r][k];
        }
        ok = ok && m.far() == static_cast<double>(neg_pos) / static_cast<double>(neg);
        ok = ok && m.positive_recall() == static_cast<double>(pos_pos) / static_cast<double>(pos);
        ok = ok && m.positive_precision().has_value() &&
             *m.positive_precision() == static_cast<double>(pos_pos) / static_cast<double>(any_pos);
        mismatches += ok ? 0 : 1;
    }
    return {mismatches == 0, fmt("100 random sets of 1000, %d mismatches", mismatches)};
}

// 5. Partition properties over all 8 designs.
Outcome partition_properties(const Manifest& train_set) {
    const auto designs = enumerate_designs(train_set.taxonomy);
    bool ok = designs.size() == 8;
    std::vector<std::size_t> uncertain;
    std::vector<std::vector<std::size_t>> all_counts;
    for (const auto& d : designs) {
        const LabeledDataset data = apply_design(train_set, d);
        const auto counts = data.class_counts();
        std::size_t total = 0;
        for (auto c : counts) total += c;
        ok = ok && data.size() == train_set.samples.size() && total == train_set.samples.size();
        ok = ok && (counts.size() == 2) == d.extract.empty();
        // Disjointness: every record carries exactly one valid class index.
        for (auto label : data.labels) ok = ok && label < counts.size();
        uncertain.push_back(counts.size() > 2 ? counts[2] : 0);
        all_counts.push_back(counts);
    }
    for (std::size_t a = 0; a < designs.size(); ++a) {
        for (std::size_t b = 0; b < designs.size(); ++b) {
            const bool subset = std::all_of(designs[a].extract.begin(), designs[a].extract.end(), [&](const auto& x) {
                return std::find(designs[b].extract.begin(), designs[b].extract.end(), x) != designs[b].extract.end();
            });
            if (subset) ok = ok && uncertain[a] <= uncertain[b];
        }
    }
    const bool arithmetic = all_counts[0] == std::vector<std::size_t>{5131, 4999} &&
                            all_counts[7] == std::vector<std::size_t>{3384, 3465, 3281} && uncertain[3] == 375 &&
                            all_counts[3][0] == 5131 && all_counts[3][1] == 4999 - 375;
    return {ok && arithmetic, std::string("conservation/disjointness/monotonicity ") + (ok ? "hold" : "violated") +
                                  ", class-count arithmetic " + (arithmetic ? "matches" : "differs")};
}

double mean_far(const AblationReport& report, const std::string& name) {
    for (const auto& row : report.rows) {
        if (row.design_name == name && row.mean_far) return *row.mean_far;
    }
    return std::nan("");
}

}  // namespace

int main() {
    std::cout << "finedesign acceptance suite " << kToolkitVersion << std::endl;

    report("AC1", "synthetic category counts and test split", fig5_fidelity());
    report("AC2", "gradient finite-difference oracle", gradient_oracle());
    report("AC3", "optimizer and schedule exactness", optimizer_exactness());
    report("AC4", "metric naive-tally oracle", metric_oracle());

    const SynthConfig synth = default_synth_config();
    const Manifest train_set = generate_train(synth);
    const Manifest test_set = generate_test(synth);
    report("AC5", "partition properties over 8 designs", partition_properties(train_set));

    AblationConfig config;
    config.train_manifest = "train.jsonl";
    config.test_manifest = "test.jsonl";
    config.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

    auto start = Clock::now();
    const AblationReport parallel = run_ablation(config, train_set, test_set, 8);
    const double ablation_seconds = seconds_since(start);
    start = Clock::now();
    const AblationReport serial = run_ablation(config, train_set, test_set, 1);
    const double serial_seconds = seconds_since(start);

    std::cout << render_report(parallel, ReportFormat::Markdown);

    const double original = mean_far(parallel, "Original");
    const double full = mean_far(parallel, "Extract IW+LQ+MLO");
    report("AC6a", "mean FAR(Extract IW+LQ+MLO) < mean FAR(Original)",
           {full < original, fmt("%.4f vs %.4f", full, original)});

    double min_far = full;
    for (const auto& row : parallel.rows) min_far = std::min(min_far, row.mean_far.value_or(1.0));
    report("AC6b", "full extraction attains the minimum mean FAR",
           {full <= min_far, fmt("full %.4f, minimum over designs %.4f", full, min_far)});

    bool singles_ok = true;
    std::string singles;
    for (const auto& name : {"Extract IW", "Extract LQ", "Extract MLO"}) {
        const double far = mean_far(parallel, name);
        singles_ok = singles_ok && far <= original;
        singles += std::string(name) + fmt(" %.4f; ", far);
    }
    report("AC6c", "every singleton extraction has mean FAR <= Original",
           {singles_ok, singles + fmt("Original %.4f", original)});

    report("AC6d", "full ablation runtime <= 10 minutes",
           {ablation_seconds <= 600.0, fmt("%.1f s with 8 workers, %.1f s with 1", ablation_seconds, serial_seconds)});

    // 7. Report shape.
    {
        const std::string md = render_report(parallel, ReportFormat::Markdown);
        const std::vector<std::string> expected{"Original",         "Extract IW only", "Extract LQ only",
                                                "Extract MLO only", "Extract IW+LQ",   "Extract IW+MLO",
                                                "Extract LQ+MLO",   "Extract IW+LQ+MLO"};
        std::vector<std::string> names;
        std::istringstream lines(md);
        std::string line;
        std::getline(lines, line);  // header
        const bool header_ok = line.rfind("| Dataset Design | FAR |", 0) == 0;
        std::getline(lines, line);  // separator
        bool percent_ok = true;
        while (std::getline(lines, line)) {
            const auto first = line.find(" | ");
            names.push_back(line.substr(2, first - 2));
            const auto far_end = line.find(" |", first + 3);
            const std::string far = line.substr(first + 3, far_end - first - 3);
            const auto dot = far.find('.');
            percent_ok = percent_ok && far.back() == '%' && dot != std::string::npos && far.size() - dot == 3;
        }

        AblationReport table = parallel;
        const std::vector<double> reference{0.089, 0.041, 0.038, 0.058, 0.014, 0.036, 0.033, 0.008};
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            for (auto& run : table.rows[i].runs) run.far = reference[i];
            aggregate(table.rows[i]);
        }
        const std::string ref_md = render_report(table, ReportFormat::Markdown);
        const bool strings_ok = ref_md.find("| Original | 8.9% |") != std::string::npos &&
                                ref_md.find("| Extract IW+LQ+MLO | 0.8% |") != std::string::npos;
        report("AC7", "report shape and percent formatting",
               {header_ok && names == expected && percent_ok && strings_ok,
                std::string("rows ") + (names == expected ? "match" : "differ") + ", one-decimal percent " +
                    (percent_ok ? "yes" : "no") + ", 8.9%/0.8% strings " + (strings_ok ? "reproduced" : "missing")});
    }

    // 8. Determinism.
    {
        const bool manifests_same = manifest_bytes(generate_train(synth)) == manifest_bytes(train_set) &&
                                    manifest_bytes(generate_test(synth)) == manifest_bytes(test_set);
        const LabeledDataset data = apply_design(train_set, enumerate_designs(train_set.taxonomy).back());
        const bool models_same = model_to_json(train(data, TrainConfig{})) == model_to_json(train(data, TrainConfig{}));
        const std::string json_parallel = render_report(parallel, ReportFormat::Json);
        const std::string json_serial = render_report(serial, ReportFormat::Json);
        const bool ablation_same = json_parallel == json_serial &&
                                   render_report(run_ablation(config, train_set, test_set, 8), ReportFormat::Json) ==
                                       json_parallel;
        report("AC8", "byte-identical manifests, models and ablation JSON",
               {manifests_same && models_same && ablation_same,
                std::string("manifests ") + (manifests_same ? "identical" : "differ") + ", models " +
                    (models_same ? "identical" : "differ") + ", ablation JSON workers 1 vs 8 " +
                    (ablation_same ? "identical" : "differ")});
    }

    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : std::to_string(failures) + " CRITERIA FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
