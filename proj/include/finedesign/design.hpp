#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finedesign/manifest.hpp"

namespace finedesign {

/// Class indices of a labeled dataset. UNCERTAIN exists only when a design
/// extracts at least one ambiguous category.
enum class ClassId : std::size_t { Positive = 0, Negative = 1, Uncertain = 2 };

inline constexpr std::string_view kPositiveClass = "POSITIVE";
inline constexpr std::string_view kNegativeClass = "NEGATIVE";
inline constexpr std::string_view kUncertainClass = "UNCERTAIN";

/// Ambiguous categories moved into the uncertain class. Names are kept in
/// taxonomy declaration order.
struct DesignConfig {
    std::vector<std::string> extract;

    bool operator==(const DesignConfig&) const = default;
};

/// Checks every name is an ambiguous category and returns the config with
/// names sorted into taxonomy order and deduplicated.
DesignConfig normalize(const DesignConfig& config, const Taxonomy& taxonomy);

/// Accepts category names or abbreviations ("IW", "low_quality").
DesignConfig resolve_extract(const std::vector<std::string>& tokens, const Taxonomy& taxonomy);

std::string design_config_to_json(const DesignConfig& config);
DesignConfig design_config_from_json(const std::string& text);

struct LabeledDataset {
    std::size_t feature_dim = 0;
    std::vector<double> features;  // row-major, size() * feature_dim
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names;
    DesignConfig provenance;
    /// "Original", "Extract IW+LQ", ...
    std::string design_name;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * feature_dim, feature_dim};
    }
    std::vector<std::size_t> class_counts() const;

    bool operator==(const LabeledDataset&) const = default;
};

/// Extracted categories become UNCERTAIN; every other sample takes its
/// fallback label. Requires a TRAIN manifest.
LabeledDataset apply_design(const Manifest& manifest, const DesignConfig& config);

/// All 2^k subsets of the ambiguous categories, by size and then
/// lexicographically over declaration order. Original first.
std::vector<DesignConfig> enumerate_designs(const Taxonomy& taxonomy);

/// "Original" or "Extract " + abbreviations joined by '+'.
std::string design_name(const DesignConfig& config, const Taxonomy& taxonomy);

/// CSV with columns f0..f{D-1},class_index,class_name, preceded by
/// "# class_names:" and "# design:" comment lines.
void write_dataset_csv(const LabeledDataset& dataset, std::ostream& out);
LabeledDataset read_dataset_csv(std::istream& in, std::string_view source = "<stream>");
void save_dataset_csv(const LabeledDataset& dataset, const std::filesystem::path& path);
LabeledDataset load_dataset_csv(const std::filesystem::path& path);

}  // namespace finedesign
