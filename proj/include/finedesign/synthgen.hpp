#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "finedesign/manifest.hpp"

namespace finedesign {

/// Per-coordinate Gaussian for one category.
struct CategoryGeometry {
    std::string category;
    std::vector<double> mean;
    std::vector<double> std;
};

/// Generator settings. `counts` and `geometries` are aligned with the
/// taxonomy; `test_counts` covers the two clear categories only.
struct SynthConfig {
    Taxonomy taxonomy = mask_taxonomy();
    std::size_t feature_dim = 2;
    std::map<std::string, std::size_t> counts;
    std::vector<CategoryGeometry> geometries;
    std::map<std::string, std::size_t> test_counts;
    double test_std_multiplier = 1.5;
    std::uint64_t seed = 0;
};

/// Mask taxonomy in two dimensions: coordinate 0 is mask evidence (negative
/// values mean no mask), coordinate 1 is observability. Clear categories sit
/// at the two ends of coordinate 0, ambiguous ones in between or at low
/// observability. Train counts 3384/3465/587/2319/375, test 500/500.
SynthConfig default_synth_config();

void validate(const SynthConfig& config);

/// Missing keys take their defaults from default_synth_config().
SynthConfig synth_config_from_json(const std::string& text);
SynthConfig load_synth_config(const std::filesystem::path& path);
std::string synth_config_to_json(const SynthConfig& config);

/// Feature values are rounded to 9 significant digits so manifests survive
/// a text round-trip unchanged.
double quantize_feature(double value);

/// Draws counts[c] samples per category in taxonomy order, ids "train-NNNNNN".
/// Ambiguous categories without a default fallback alternate POSITIVE/NEGATIVE
/// by generation index within the category, starting with POSITIVE.
Manifest generate_train(const SynthConfig& config);

/// Clear categories only, std scaled by test_std_multiplier, ids "test-NNNNNN".
Manifest generate_test(const SynthConfig& config);

}  // namespace finedesign
