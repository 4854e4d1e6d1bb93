#include "finedesign/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "finedesign/error.hpp"
#include "json.hpp"

namespace finedesign {

namespace {

std::size_t ambiguous_index(const Taxonomy& taxonomy, std::string_view name) {
    for (std::size_t i = 0; i < taxonomy.size(); ++i) {
        if (taxonomy[i].name != name) continue;
        if (taxonomy[i].kind != CategoryKind::Ambiguous) {
            throw ValidationError("design: cannot extract clear category '" + std::string(name) + "'");
        }
        return i;
    }
    throw ValidationError("design: unknown category '" + std::string(name) + "'");
}

std::vector<std::string> split_on(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        parts.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, end);
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
    text = trim(text);
    T value{};
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw ValidationError("bad " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

DesignConfig normalize(const DesignConfig& config, const Taxonomy& taxonomy) {
    std::vector<std::size_t> indices;
    for (const auto& name : config.extract) indices.push_back(ambiguous_index(taxonomy, name));
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    DesignConfig out;
    for (auto i : indices) out.extract.push_back(taxonomy[i].name);
    return out;
}

DesignConfig resolve_extract(const std::vector<std::string>& tokens, const Taxonomy& taxonomy) {
    DesignConfig config;
    for (const auto& raw : tokens) {
        const auto token = trim(raw);
        if (token.empty()) continue;
        auto it = std::find_if(taxonomy.begin(), taxonomy.end(),
                               [&](const FineCategory& c) { return c.name == token || c.abbreviation == token; });
        if (it == taxonomy.end()) throw ValidationError("design: unknown category '" + std::string(token) + "'");
        config.extract.push_back(it->name);
    }
    return normalize(config, taxonomy);
}

std::string design_config_to_json(const DesignConfig& config) {
    nlohmann::ordered_json j;
    j["extract"] = config.extract;
    return j.dump();
}

DesignConfig design_config_from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        return DesignConfig{j.at("extract").get<std::vector<std::string>>()};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("design config: ") + e.what());
    }
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (auto label : labels) ++counts.at(label);
    return counts;
}

LabeledDataset apply_design(const Manifest& manifest, const DesignConfig& config) {
    if (manifest.split != Split::Train) throw ValidationError("design: manifest must be a train split");
    const DesignConfig normalized = normalize(config, manifest.taxonomy);

    LabeledDataset out;
    out.feature_dim = manifest.feature_dim;
    out.provenance = normalized;
    out.design_name = design_name(normalized, manifest.taxonomy);
    out.class_names = {std::string(kPositiveClass), std::string(kNegativeClass)};
    if (!normalized.extract.empty()) out.class_names.emplace_back(kUncertainClass);

    out.features.reserve(manifest.samples.size() * manifest.feature_dim);
    out.labels.reserve(manifest.samples.size());
    for (const auto& s : manifest.samples) {
        const bool extracted =
            std::find(normalized.extract.begin(), normalized.extract.end(), s.category) != normalized.extract.end();
        ClassId label = ClassId::Uncertain;
        if (!extracted) label = s.fallback_label == Polarity::Positive ? ClassId::Positive : ClassId::Negative;
        out.features.insert(out.features.end(), s.features.begin(), s.features.end());
        out.labels.push_back(static_cast<std::size_t>(label));
    }
    return out;
}

std::vector<DesignConfig> enumerate_designs(const Taxonomy& taxonomy) {
    std::vector<std::size_t> ambiguous;
    for (std::size_t i = 0; i < taxonomy.size(); ++i) {
        if (taxonomy[i].kind == CategoryKind::Ambiguous) ambiguous.push_back(i);
    }
    const std::size_t k = ambiguous.size();
    std::vector<DesignConfig> designs;
    for (std::size_t size = 0; size <= k; ++size) {
        // Walk index combinations of `size` out of k in lexicographic order.
        std::vector<std::size_t> pick(size);
        for (std::size_t i = 0; i < size; ++i) pick[i] = i;
        while (true) {
            DesignConfig d;
            for (auto p : pick) d.extract.push_back(taxonomy[ambiguous[p]].name);
            designs.push_back(std::move(d));
            std::size_t i = size;
            while (i > 0 && pick[i - 1] == k - size + i - 1) --i;
            if (i == 0) break;
            ++pick[i - 1];
            for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
        }
    }
    return designs;
}

std::string design_name(const DesignConfig& config, const Taxonomy& taxonomy) {
    const DesignConfig normalized = normalize(config, taxonomy);
    if (normalized.extract.empty()) return "Original";
    std::string name = "Extract ";
    for (std::size_t i = 0; i < normalized.extract.size(); ++i) {
        if (i > 0) name += '+';
        name += find_category(taxonomy, normalized.extract[i])->abbreviation;
    }
    return name;
}

void write_dataset_csv(const LabeledDataset& dataset, std::ostream& out) {
    std::string buf = "# class_names: ";
    for (std::size_t i = 0; i < dataset.class_names.size(); ++i) {
        if (i > 0) buf += ',';
        buf += dataset.class_names[i];
    }
    buf += "\n# extract: ";
    for (std::size_t i = 0; i < dataset.provenance.extract.size(); ++i) {
        if (i > 0) buf += ',';
        buf += dataset.provenance.extract[i];
    }
    buf += "\n# design: " + dataset.design_name + "\n";
    for (std::size_t d = 0; d < dataset.feature_dim; ++d) buf += "f" + std::to_string(d) + ",";
    buf += "class_index,class_name\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (double v : dataset.row(i)) {
            append_double(buf, v);
            buf += ',';
        }
        buf += std::to_string(dataset.labels[i]);
        buf += ',';
        buf += dataset.class_names.at(dataset.labels[i]);
        buf += '\n';
    }
    out << buf;
}

LabeledDataset read_dataset_csv(std::istream& in, std::string_view source) {
    LabeledDataset out;
    bool have_header = false;
    bool have_class_names = false;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        return ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty()) continue;
        if (text.front() == '#') {
            auto body = trim(text.substr(1));
            auto colon = body.find(':');
            if (colon == std::string_view::npos) continue;
            const auto key = trim(body.substr(0, colon));
            const auto value = trim(body.substr(colon + 1));
            if (key == "class_names") {
                out.class_names = split_on(value, ',');
                have_class_names = true;
            } else if (key == "extract") {
                out.provenance.extract = value.empty() ? std::vector<std::string>{} : split_on(value, ',');
            } else if (key == "design") {
                out.design_name = std::string(value);
            }
            continue;
        }
        const auto fields = split_on(text, ',');
        if (!have_header) {
            if (fields.size() < 3 || fields[fields.size() - 2] != "class_index" || fields.back() != "class_name") {
                throw fail("expected header f0,...,class_index,class_name");
            }
            out.feature_dim = fields.size() - 2;
            have_header = true;
            continue;
        }
        if (fields.size() != out.feature_dim + 2) {
            throw fail("expected " + std::to_string(out.feature_dim + 2) + " fields, got " +
                       std::to_string(fields.size()));
        }
        try {
            for (std::size_t d = 0; d < out.feature_dim; ++d) {
                const double v = parse_number<double>(fields[d], "feature");
                if (!std::isfinite(v)) throw ValidationError("non-finite feature");
                out.features.push_back(v);
            }
            const auto label = parse_number<std::size_t>(fields[out.feature_dim], "class_index");
            const std::string& name = fields[out.feature_dim + 1];
            if (!have_class_names) {
                // Without a class_names comment, fall back to the fixed index order.
                static const std::string kOrder[] = {std::string(kPositiveClass), std::string(kNegativeClass),
                                                     std::string(kUncertainClass)};
                if (label >= 3 || kOrder[label] != name) throw ValidationError("unexpected class '" + name + "'");
                while (out.class_names.size() <= label) out.class_names.push_back(kOrder[out.class_names.size()]);
            } else if (label >= out.class_names.size() || out.class_names[label] != name) {
                throw ValidationError("class_index " + std::to_string(label) + " does not match class_name '" +
                                      name + "'");
            }
            out.labels.push_back(label);
        } catch (const ValidationError& e) {
            throw fail(e.what());
        }
    }
    if (!have_header) throw ValidationError(std::string(source) + ": missing CSV header");
    if (out.class_names.size() < 2) {
        out.class_names = {std::string(kPositiveClass), std::string(kNegativeClass)};
    }
    return out;
}

void save_dataset_csv(const LabeledDataset& dataset, const std::filesystem::path& path) {
    std::ostringstream buffer;
    write_dataset_csv(dataset, buffer);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << buffer.str();
    if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
}

LabeledDataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
    return read_dataset_csv(in, path.string());
}

}  // namespace finedesign
