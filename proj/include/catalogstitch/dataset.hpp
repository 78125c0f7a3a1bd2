#pragma once

#include "catalogstitch/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace catalogstitch {

enum class Category { dimension, occlusion };

inline const char* category_name(Category c) {
    return c == Category::dimension ? "dimension" : "occlusion";
}

inline Category parse_category(const std::string& s) {
    if (s == "dimension") return Category::dimension;
    if (s == "occlusion") return Category::occlusion;
    throw SchemaError("index.json: unknown category '" + s + "'");
}

/// One benchmark example: scene, product, masks, and optional per-occluder
/// ground-truth masks. Paths are absolute after loading.
struct ExampleRecord {
    std::string id;
    std::filesystem::path background;
    std::filesystem::path product;
    std::filesystem::path target_mask;
    std::filesystem::path product_mask;
    std::vector<std::filesystem::path> occluder_masks;
    Category category = Category::dimension;
};

namespace detail {

inline std::string require_string(const nlohmann::json& j, const char* field,
                                  const std::string& ctx) {
    if (!j.contains(field) || !j[field].is_string())
        throw SchemaError("index.json: " + ctx + ": missing or non-string field '" +
                          field + "'");
    return j[field].get<std::string>();
}

inline std::filesystem::path resolve_checked(const std::filesystem::path& root,
                                             const std::string& rel) {
    std::filesystem::path p = root / rel;
    if (!std::filesystem::exists(p))
        throw DanglingPathError("index.json references missing file: " + p.string());
    return p;
}

} // namespace detail

/// Load `<root>/index.json` and validate every referenced file exists.
/// Records come back sorted by id.
inline std::vector<ExampleRecord> load_dataset(const std::filesystem::path& root) {
    const std::filesystem::path index_path = root / "index.json";
    if (!std::filesystem::exists(index_path))
        throw IndexMissingError("no index.json under " + root.string());

    nlohmann::json j;
    {
        std::ifstream in(index_path);
        if (!in)
            throw IoError("cannot read " + index_path.string());
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("index.json: parse error: " + std::string(e.what()));
        }
    }
    if (!j.contains("examples") || !j["examples"].is_array())
        throw SchemaError("index.json: missing or non-array field 'examples'");

    std::vector<ExampleRecord> records;
    for (const auto& ex : j["examples"]) {
        ExampleRecord rec;
        rec.id = detail::require_string(ex, "id", "example");
        const std::string ctx = "example '" + rec.id + "'";
        rec.category = parse_category(detail::require_string(ex, "category", ctx));
        rec.background = detail::resolve_checked(root, detail::require_string(ex, "background", ctx));
        rec.product = detail::resolve_checked(root, detail::require_string(ex, "product", ctx));
        rec.target_mask = detail::resolve_checked(root, detail::require_string(ex, "target_mask", ctx));
        rec.product_mask = detail::resolve_checked(root, detail::require_string(ex, "product_mask", ctx));
        if (ex.contains("occluder_masks")) {
            if (!ex["occluder_masks"].is_array())
                throw SchemaError("index.json: " + ctx + ": field 'occluder_masks' must be an array");
            for (const auto& m : ex["occluder_masks"]) {
                if (!m.is_string())
                    throw SchemaError("index.json: " + ctx + ": occluder_masks entries must be strings");
                rec.occluder_masks.push_back(detail::resolve_checked(root, m.get<std::string>()));
            }
        }
        records.push_back(std::move(rec));
    }
    std::sort(records.begin(), records.end(),
              [](const ExampleRecord& a, const ExampleRecord& b) { return a.id < b.id; });
    return records;
}

} // namespace catalogstitch
