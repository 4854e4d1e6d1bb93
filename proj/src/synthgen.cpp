#include "finedesign/synthgen.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "finedesign/error.hpp"
#include "finedesign/rng.hpp"
#include "json.hpp"

namespace finedesign {

using ordered_json = nlohmann::ordered_json;

namespace {

// Stream tags for seed derivation.
constexpr std::uint64_t kTrainStream = 0x7472616e;
constexpr std::uint64_t kTestStream = 0x74657374;

const CategoryGeometry& geometry_for(const SynthConfig& config, const std::string& name) {
    for (const auto& g : config.geometries) {
        if (g.category == name) return g;
    }
    throw ValidationError("synth config: no geometry for category '" + name + "'");
}

std::string sample_id(std::string_view prefix, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*s-%06zu", static_cast<int>(prefix.size()), prefix.data(), index);
    return buf;
}

void draw_category(Manifest& out, Rng& rng, const FineCategory& category, const CategoryGeometry& geometry,
                   std::size_t count, double std_scale, std::string_view id_prefix) {
    for (std::size_t i = 0; i < count; ++i) {
        Sample s;
        s.id = sample_id(id_prefix, out.samples.size());
        s.category = category.name;
        s.features.resize(geometry.mean.size());
        for (std::size_t d = 0; d < geometry.mean.size(); ++d) {
            s.features[d] = quantize_feature(rng.normal(geometry.mean[d], geometry.std[d] * std_scale));
        }
        switch (category.kind) {
            case CategoryKind::ClearPositive: s.fallback_label = Polarity::Positive; break;
            case CategoryKind::ClearNegative: s.fallback_label = Polarity::Negative; break;
            case CategoryKind::Ambiguous:
                s.fallback_label = category.default_fallback.value_or(i % 2 == 0 ? Polarity::Positive
                                                                                 : Polarity::Negative);
                break;
        }
        out.samples.push_back(std::move(s));
    }
}

std::uint64_t category_seed(std::uint64_t seed, std::uint64_t stream, std::size_t category_index) {
    return hash_combine(hash_combine(seed, stream), category_index);
}

}  // namespace

SynthConfig default_synth_config() {
    SynthConfig c;
    c.counts = {{"clear_positive", 3384},
                {"clear_negative", 3465},
                {"irregular_wearing", 587},
                {"low_quality", 2319},
                {"mask_like_occlusion", 375}};
    c.geometries = {
        {"clear_positive", {-2.0, 1.5}, {0.5, 0.5}},
        {"clear_negative", {2.0, 1.5}, {0.5, 0.5}},
        {"irregular_wearing", {1.0, 1.5}, {0.4, 0.5}},
        {"low_quality", {0.0, -1.5}, {1.0, 0.5}},
        {"mask_like_occlusion", {-1.0, 1.5}, {0.4, 0.5}},
    };
    c.test_counts = {{"clear_positive", 500}, {"clear_negative", 500}};
    return c;
}

void validate(const SynthConfig& config) {
    validate_taxonomy(config.taxonomy);
    if (config.feature_dim == 0) throw ValidationError("synth config: feature_dim must be positive");
    if (!(config.test_std_multiplier >= 1.0) || !std::isfinite(config.test_std_multiplier)) {
        throw ValidationError("synth config: test_std_multiplier must be >= 1");
    }
    for (const auto& [name, n] : config.counts) {
        if (find_category(config.taxonomy, name) == nullptr)
            throw ValidationError("synth config: counts names unknown category '" + name + "'");
    }
    for (const auto& c : config.taxonomy) {
        if (!config.counts.contains(c.name))
            throw ValidationError("synth config: no count for category '" + c.name + "'");
        const auto& g = geometry_for(config, c.name);
        if (g.mean.size() != config.feature_dim || g.std.size() != config.feature_dim) {
            throw ValidationError("synth config: geometry of '" + c.name + "' does not have feature_dim entries");
        }
        for (std::size_t d = 0; d < config.feature_dim; ++d) {
            if (!std::isfinite(g.mean[d])) throw ValidationError("synth config: non-finite mean for '" + c.name + "'");
            if (!(g.std[d] > 0.0) || !std::isfinite(g.std[d]))
                throw ValidationError("synth config: std of '" + c.name + "' must be strictly positive");
        }
    }
    for (const auto& g : config.geometries) {
        if (find_category(config.taxonomy, g.category) == nullptr)
            throw ValidationError("synth config: geometry for unknown category '" + g.category + "'");
    }
    for (const auto& [name, n] : config.test_counts) {
        const FineCategory* c = find_category(config.taxonomy, name);
        if (c == nullptr || c->kind == CategoryKind::Ambiguous)
            throw ValidationError("synth config: test_counts may only name clear categories, got '" + name + "'");
    }
    for (auto p : {Polarity::Positive, Polarity::Negative}) {
        if (!config.test_counts.contains(clear_category(config.taxonomy, p).name))
            throw ValidationError("synth config: test_counts must cover both clear categories");
    }
}

SynthConfig synth_config_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("synth config: malformed JSON: ") + e.what());
    }
    SynthConfig c = default_synth_config();
    try {
        if (j.contains("taxonomy")) {
            c.taxonomy.clear();
            for (const auto& t : j["taxonomy"]) {
                FineCategory f;
                f.name = t.at("name").get<std::string>();
                f.kind = parse_category_kind(t.at("kind").get<std::string>());
                if (t.contains("default_fallback") && !t["default_fallback"].is_null())
                    f.default_fallback = parse_polarity(t["default_fallback"].get<std::string>());
                f.abbreviation = t.value("abbreviation", f.name);
                c.taxonomy.push_back(std::move(f));
            }
        }
        if (j.contains("feature_dim")) c.feature_dim = j["feature_dim"].get<std::size_t>();
        if (j.contains("counts")) c.counts = j["counts"].get<std::map<std::string, std::size_t>>();
        if (j.contains("test_counts")) c.test_counts = j["test_counts"].get<std::map<std::string, std::size_t>>();
        if (j.contains("geometries")) {
            c.geometries.clear();
            for (const auto& g : j["geometries"]) {
                c.geometries.push_back({g.at("category").get<std::string>(), g.at("mean").get<std::vector<double>>(),
                                        g.at("std").get<std::vector<double>>()});
            }
        }
        if (j.contains("test_std_multiplier")) c.test_std_multiplier = j["test_std_multiplier"].get<double>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("synth config: ") + e.what());
    }
    validate(c);
    return c;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open synth config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return synth_config_from_json(ss.str());
}

std::string synth_config_to_json(const SynthConfig& config) {
    ordered_json j;
    j["seed"] = config.seed;
    j["feature_dim"] = config.feature_dim;
    j["test_std_multiplier"] = config.test_std_multiplier;
    j["taxonomy"] = ordered_json::array();
    for (const auto& t : config.taxonomy) {
        j["taxonomy"].push_back({{"name", t.name},
                                 {"kind", to_string(t.kind)},
                                 {"default_fallback", t.default_fallback ? ordered_json(to_string(*t.default_fallback))
                                                                         : ordered_json(nullptr)},
                                 {"abbreviation", t.abbreviation}});
    }
    j["counts"] = ordered_json::object();
    j["test_counts"] = ordered_json::object();
    j["geometries"] = ordered_json::array();
    for (const auto& t : config.taxonomy) {
        if (auto it = config.counts.find(t.name); it != config.counts.end()) j["counts"][t.name] = it->second;
        if (auto it = config.test_counts.find(t.name); it != config.test_counts.end())
            j["test_counts"][t.name] = it->second;
        for (const auto& g : config.geometries) {
            if (g.category == t.name) j["geometries"].push_back({{"category", g.category}, {"mean", g.mean}, {"std", g.std}});
        }
    }
    return j.dump(2) + "\n";
}

double quantize_feature(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    double out = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), out);
    return out;
}

Manifest generate_train(const SynthConfig& config) {
    validate(config);
    Manifest m;
    m.taxonomy = config.taxonomy;
    m.split = Split::Train;
    m.feature_dim = config.feature_dim;
    m.generator = GeneratorInfo{kRngAlgorithm, config.seed};
    for (std::size_t k = 0; k < config.taxonomy.size(); ++k) {
        const auto& category = config.taxonomy[k];
        Rng rng(category_seed(config.seed, kTrainStream, k));
        draw_category(m, rng, category, geometry_for(config, category.name), config.counts.at(category.name), 1.0,
                      "train");
    }
    return m;
}

Manifest generate_test(const SynthConfig& config) {
    validate(config);
    Manifest m;
    m.taxonomy = config.taxonomy;
    m.split = Split::Test;
    m.feature_dim = config.feature_dim;
    m.generator = GeneratorInfo{kRngAlgorithm, config.seed};
    for (std::size_t k = 0; k < config.taxonomy.size(); ++k) {
        const auto& category = config.taxonomy[k];
        if (category.kind == CategoryKind::Ambiguous) continue;
        Rng rng(category_seed(config.seed, kTestStream, k));
        draw_category(m, rng, category, geometry_for(config, category.name), config.test_counts.at(category.name),
                      config.test_std_multiplier, "test");
    }
    return m;
}

}  // namespace finedesign
