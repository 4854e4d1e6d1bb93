#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace finedesign {

enum class CategoryKind { ClearPositive, ClearNegative, Ambiguous };

/// Binary label. POSITIVE is the alarm-worthy class (face without a mask).
enum class Polarity { Positive, Negative };

enum class Split { Train, Test };

std::string_view to_string(CategoryKind kind);
std::string_view to_string(Polarity polarity);
std::string_view to_string(Split split);
CategoryKind parse_category_kind(std::string_view text);
Polarity parse_polarity(std::string_view text);
Split parse_split(std::string_view text);

struct FineCategory {
    std::string name;
    CategoryKind kind = CategoryKind::Ambiguous;
    /// Label an ambiguous sample falls back to when its category is not
    /// extracted. Absent means fallbacks are assigned per sample.
    std::optional<Polarity> default_fallback;
    /// Short tag used in design names ("IW"). Defaults to the name.
    std::string abbreviation;

    bool operator==(const FineCategory&) const = default;
};

using Taxonomy = std::vector<FineCategory>;

/// clear_positive, clear_negative, irregular_wearing (IW, fallback POSITIVE),
/// low_quality (LQ, per-sample fallback), mask_like_occlusion (MLO, fallback NEGATIVE).
Taxonomy mask_taxonomy();

/// Throws ValidationError unless names are unique and there is exactly one
/// CLEAR_POSITIVE and one CLEAR_NEGATIVE category.
void validate_taxonomy(const Taxonomy& taxonomy);

const FineCategory* find_category(const Taxonomy& taxonomy, std::string_view name);
const FineCategory& clear_category(const Taxonomy& taxonomy, Polarity polarity);

struct Sample {
    std::string id;
    std::vector<double> features;
    std::string category;
    Polarity fallback_label = Polarity::Positive;
    /// Opaque pointer to an external asset; never interpreted.
    std::optional<std::string> asset_ref;

    bool operator==(const Sample&) const = default;
};

/// Records how a synthetic manifest was generated.
struct GeneratorInfo {
    std::string rng;
    std::uint64_t seed = 0;

    bool operator==(const GeneratorInfo&) const = default;
};

struct Manifest {
    Taxonomy taxonomy;
    std::vector<Sample> samples;
    Split split = Split::Train;
    std::size_t feature_dim = 0;
    std::optional<GeneratorInfo> generator;

    bool operator==(const Manifest&) const = default;
};

/// Throws ValidationError naming the offending sample id on: unknown category,
/// duplicate id, dimension mismatch, non-finite feature, or a clear sample
/// whose fallback contradicts its category polarity.
void validate(const Manifest& manifest);

/// JSONL: a header line followed by one sample object per line.
Manifest read_manifest(std::istream& in, std::string_view source = "<stream>");
void write_manifest(const Manifest& manifest, std::ostream& out);

Manifest load_manifest(const std::filesystem::path& path);
/// Validates before opening the file; output bytes depend only on `manifest`.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Per-category sample counts; every taxonomy category is present.
std::map<std::string, std::size_t> summarize(const Manifest& manifest);

}  // namespace finedesign
