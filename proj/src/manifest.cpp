#include "finedesign/manifest.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "finedesign/error.hpp"
#include "json.hpp"

namespace finedesign {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kManifestVersion = 1;

std::string at_line(std::string_view source, std::size_t line) {
    std::ostringstream os;
    os << source << ":" << line << ": ";
    return os.str();
}

FineCategory category_from_json(const ordered_json& j) {
    FineCategory c;
    c.name = j.at("name").get<std::string>();
    c.kind = parse_category_kind(j.at("kind").get<std::string>());
    if (auto it = j.find("default_fallback"); it != j.end() && !it->is_null()) {
        c.default_fallback = parse_polarity(it->get<std::string>());
    }
    if (auto it = j.find("abbreviation"); it != j.end() && !it->is_null()) {
        c.abbreviation = it->get<std::string>();
    } else {
        c.abbreviation = c.name;
    }
    return c;
}

ordered_json category_to_json(const FineCategory& c) {
    ordered_json j;
    j["name"] = c.name;
    j["kind"] = to_string(c.kind);
    j["default_fallback"] = c.default_fallback ? ordered_json(to_string(*c.default_fallback)) : ordered_json(nullptr);
    j["abbreviation"] = c.abbreviation;
    return j;
}

}  // namespace

std::string_view to_string(CategoryKind kind) {
    switch (kind) {
        case CategoryKind::ClearPositive: return "CLEAR_POSITIVE";
        case CategoryKind::ClearNegative: return "CLEAR_NEGATIVE";
        case CategoryKind::Ambiguous: return "AMBIGUOUS";
    }
    return "?";
}

std::string_view to_string(Polarity polarity) {
    return polarity == Polarity::Positive ? "POSITIVE" : "NEGATIVE";
}

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

CategoryKind parse_category_kind(std::string_view text) {
    if (text == "CLEAR_POSITIVE") return CategoryKind::ClearPositive;
    if (text == "CLEAR_NEGATIVE") return CategoryKind::ClearNegative;
    if (text == "AMBIGUOUS") return CategoryKind::Ambiguous;
    throw ValidationError("unknown category kind '" + std::string(text) + "'");
}

Polarity parse_polarity(std::string_view text) {
    if (text == "POSITIVE") return Polarity::Positive;
    if (text == "NEGATIVE") return Polarity::Negative;
    throw ValidationError("unknown label '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    throw ValidationError("unknown split '" + std::string(text) + "'");
}

Taxonomy mask_taxonomy() {
    return {
        {"clear_positive", CategoryKind::ClearPositive, Polarity::Positive, "POS"},
        {"clear_negative", CategoryKind::ClearNegative, Polarity::Negative, "NEG"},
        {"irregular_wearing", CategoryKind::Ambiguous, Polarity::Positive, "IW"},
        {"low_quality", CategoryKind::Ambiguous, std::nullopt, "LQ"},
        {"mask_like_occlusion", CategoryKind::Ambiguous, Polarity::Negative, "MLO"},
    };
}

void validate_taxonomy(const Taxonomy& taxonomy) {
    std::set<std::string_view> names;
    int positives = 0;
    int negatives = 0;
    for (const auto& c : taxonomy) {
        if (c.name.empty()) throw ValidationError("taxonomy: empty category name");
        if (!names.insert(c.name).second) throw ValidationError("taxonomy: duplicate category '" + c.name + "'");
        if (c.kind == CategoryKind::ClearPositive) {
            ++positives;
            if (c.default_fallback == Polarity::Negative)
                throw ValidationError("taxonomy: clear positive category '" + c.name + "' has NEGATIVE fallback");
        }
        if (c.kind == CategoryKind::ClearNegative) {
            ++negatives;
            if (c.default_fallback == Polarity::Positive)
                throw ValidationError("taxonomy: clear negative category '" + c.name + "' has POSITIVE fallback");
        }
    }
    if (positives != 1 || negatives != 1) {
        throw ValidationError("taxonomy: need exactly one CLEAR_POSITIVE and one CLEAR_NEGATIVE category");
    }
}

const FineCategory* find_category(const Taxonomy& taxonomy, std::string_view name) {
    for (const auto& c : taxonomy) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

const FineCategory& clear_category(const Taxonomy& taxonomy, Polarity polarity) {
    const auto wanted = polarity == Polarity::Positive ? CategoryKind::ClearPositive : CategoryKind::ClearNegative;
    for (const auto& c : taxonomy) {
        if (c.kind == wanted) return c;
    }
    throw ValidationError("taxonomy has no " + std::string(to_string(wanted)) + " category");
}

void validate(const Manifest& manifest) {
    validate_taxonomy(manifest.taxonomy);
    if (manifest.feature_dim == 0) throw ValidationError("feature_dim must be positive");
    std::set<std::string_view> ids;
    for (const auto& s : manifest.samples) {
        if (s.id.empty()) throw ValidationError("sample with empty id");
        if (!ids.insert(s.id).second) throw ValidationError("sample '" + s.id + "': duplicate id");
        const FineCategory* c = find_category(manifest.taxonomy, s.category);
        if (c == nullptr) throw ValidationError("sample '" + s.id + "': unknown category '" + s.category + "'");
        if (s.features.size() != manifest.feature_dim) {
            throw ValidationError("sample '" + s.id + "': expected " + std::to_string(manifest.feature_dim) +
                                  " features, got " + std::to_string(s.features.size()));
        }
        for (double v : s.features) {
            if (!std::isfinite(v)) throw ValidationError("sample '" + s.id + "': non-finite feature value");
        }
        if ((c->kind == CategoryKind::ClearPositive && s.fallback_label != Polarity::Positive) ||
            (c->kind == CategoryKind::ClearNegative && s.fallback_label != Polarity::Negative)) {
            throw ValidationError("sample '" + s.id + "': fallback label contradicts clear category '" + c->name + "'");
        }
    }
}

Manifest read_manifest(std::istream& in, std::string_view source) {
    Manifest m;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(at_line(source, line_no) + "malformed JSON: " + e.what());
        }
        try {
            if (!have_header) {
                const int version = j.at("version").get<int>();
                if (version != kManifestVersion) {
                    throw ValidationError("unsupported manifest version " + std::to_string(version));
                }
                m.split = parse_split(j.at("split").get<std::string>());
                const auto dim = j.at("feature_dim").get<std::int64_t>();
                if (dim <= 0) throw ValidationError("feature_dim must be positive");
                m.feature_dim = static_cast<std::size_t>(dim);
                for (const auto& c : j.at("taxonomy")) m.taxonomy.push_back(category_from_json(c));
                validate_taxonomy(m.taxonomy);
                if (auto it = j.find("generator"); it != j.end() && !it->is_null()) {
                    m.generator = GeneratorInfo{it->at("rng").get<std::string>(), it->at("seed").get<std::uint64_t>()};
                }
                have_header = true;
                continue;
            }
            Sample s;
            s.id = j.at("id").get<std::string>();
            s.features = j.at("features").get<std::vector<double>>();
            s.category = j.at("category").get<std::string>();
            const FineCategory* c = find_category(m.taxonomy, s.category);
            if (c == nullptr) throw ValidationError("sample '" + s.id + "': unknown category '" + s.category + "'");
            if (auto it = j.find("fallback_label"); it != j.end() && !it->is_null()) {
                s.fallback_label = parse_polarity(it->get<std::string>());
            } else if (c->kind == CategoryKind::ClearPositive) {
                s.fallback_label = Polarity::Positive;
            } else if (c->kind == CategoryKind::ClearNegative) {
                s.fallback_label = Polarity::Negative;
            } else if (c->default_fallback) {
                s.fallback_label = *c->default_fallback;
            } else {
                throw ValidationError("sample '" + s.id + "': missing fallback_label for ambiguous category '" +
                                      s.category + "'");
            }
            if (auto it = j.find("asset_ref"); it != j.end() && !it->is_null()) {
                s.asset_ref = it->get<std::string>();
            }
            m.samples.push_back(std::move(s));
        } catch (const ValidationError& e) {
            throw ValidationError(at_line(source, line_no) + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(at_line(source, line_no) + "bad field: " + e.what());
        }
    }
    if (!have_header) throw ValidationError(std::string(source) + ": missing header line");
    validate(m);
    return m;
}

void write_manifest(const Manifest& manifest, std::ostream& out) {
    validate(manifest);
    ordered_json header;
    header["version"] = kManifestVersion;
    header["split"] = to_string(manifest.split);
    header["feature_dim"] = manifest.feature_dim;
    header["taxonomy"] = ordered_json::array();
    for (const auto& c : manifest.taxonomy) header["taxonomy"].push_back(category_to_json(c));
    if (manifest.generator) {
        header["generator"] = {{"rng", manifest.generator->rng}, {"seed", manifest.generator->seed}};
    }
    out << header.dump() << '\n';
    for (const auto& s : manifest.samples) {
        ordered_json j;
        j["id"] = s.id;
        j["features"] = s.features;
        j["category"] = s.category;
        j["fallback_label"] = to_string(s.fallback_label);
        if (s.asset_ref) j["asset_ref"] = *s.asset_ref;
        out << j.dump() << '\n';
    }
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    return read_manifest(in, path.string());
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ostringstream buffer;
    write_manifest(manifest, buffer);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << buffer.str();
    if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
}

std::map<std::string, std::size_t> summarize(const Manifest& manifest) {
    std::map<std::string, std::size_t> counts;
    for (const auto& c : manifest.taxonomy) counts[c.name] = 0;
    for (const auto& s : manifest.samples) ++counts[s.category];
    return counts;
}

}  // namespace finedesign
