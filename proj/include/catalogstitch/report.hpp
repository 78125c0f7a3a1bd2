#pragma once

#include "catalogstitch/errors.hpp"
#include "catalogstitch/pipeline.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace catalogstitch {

inline nlohmann::ordered_json result_to_json(const RunResult& r) {
    nlohmann::ordered_json j;
    j["example_id"] = r.example_id;
    j["success"] = r.success;
    if (!r.success)
        j["error"] = r.error;
    j["flags"] = {{"adapted", r.flags.adapted},
                  {"clipped", r.flags.clipped},
                  {"n_occluders", r.flags.n_occluders}};
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    if (r.metrics.ar_error_pct)
        metrics["ar_error_pct"] = *r.metrics.ar_error_pct;
    if (r.metrics.occluder_psnr_db)
        metrics["occluder_psnr_db"] = *r.metrics.occluder_psnr_db;
    metrics["notes"] = r.metrics.notes;
    j["metrics"] = std::move(metrics);
    nlohmann::ordered_json timings = nlohmann::ordered_json::object();
    for (const auto& [stage, ms] : r.timings_ms)
        timings[stage] = ms;
    j["timings_ms"] = std::move(timings);
    nlohmann::ordered_json artifacts = nlohmann::ordered_json::object();
    for (const auto& [role, path] : r.artifacts)
        artifacts[role] = path;
    j["artifacts"] = std::move(artifacts);
    return j;
}

inline RunResult result_from_json(const nlohmann::ordered_json& j) {
    RunResult r;
    r.example_id = j.at("example_id").get<std::string>();
    r.success = j.at("success").get<bool>();
    if (j.contains("error"))
        r.error = j["error"].get<std::string>();
    const auto& flags = j.at("flags");
    r.flags.adapted = flags.at("adapted").get<bool>();
    r.flags.clipped = flags.at("clipped").get<bool>();
    r.flags.n_occluders = flags.at("n_occluders").get<int>();
    const auto& metrics = j.at("metrics");
    if (metrics.contains("ar_error_pct"))
        r.metrics.ar_error_pct = metrics["ar_error_pct"].get<double>();
    if (metrics.contains("occluder_psnr_db"))
        r.metrics.occluder_psnr_db = metrics["occluder_psnr_db"].get<double>();
    r.metrics.notes = metrics.at("notes").get<std::vector<std::string>>();
    for (const auto& [stage, ms] : j.at("timings_ms").items())
        r.timings_ms.emplace_back(stage, ms.get<double>());
    for (const auto& [role, path] : j.at("artifacts").items())
        r.artifacts.emplace_back(role, path.get<std::string>());
    return r;
}

inline nlohmann::ordered_json results_to_json(const std::vector<RunResult>& results) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const RunResult& r : results)
        arr.push_back(result_to_json(r));
    return arr;
}

inline std::vector<RunResult> results_from_json(const nlohmann::ordered_json& arr) {
    std::vector<RunResult> out;
    for (const auto& j : arr)
        out.push_back(result_from_json(j));
    return out;
}

inline void write_results_json(const std::vector<RunResult>& results,
                               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << results_to_json(results).dump(2) << "\n";
}

inline std::vector<RunResult> load_results_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read " + path.string());
    nlohmann::ordered_json arr;
    try {
        in >> arr;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("results.json: parse error: " + std::string(e.what()));
    }
    return results_from_json(arr);
}

namespace detail {

inline std::string html_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string fmt_fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

// Artifact paths are stored relative to the results directory; rebase them
// onto the report's directory with pure path arithmetic (the report dir may
// not exist yet, so no filesystem access here).
inline std::string href(const std::string& artifact_rel,
                        const std::filesystem::path& results_dir,
                        const std::filesystem::path& report_dir) {
    const std::filesystem::path abs_results =
        std::filesystem::absolute(results_dir).lexically_normal();
    const std::filesystem::path abs_report =
        std::filesystem::absolute(report_dir).lexically_normal();
    if (abs_results == abs_report)
        return artifact_rel;
    std::filesystem::path base = abs_results.lexically_relative(abs_report);
    if (base.empty())
        base = abs_results;
    return (base / artifact_rel).lexically_normal().generic_string();
}

inline void thumb_cell(std::string& html, const RunResult& r, const char* role,
                       const std::filesystem::path& results_dir,
                       const std::filesystem::path& report_dir) {
    html += "<td>";
    if (const std::string* rel = r.artifact(role))
        html += "<a href=\"" + href(*rel, results_dir, report_dir) + "\"><img src=\"" +
                href(*rel, results_dir, report_dir) + "\" alt=\"" + role + "\"></a>";
    else
        html += "&mdash;";
    html += "</td>";
}

} // namespace detail

/// Write a single self-contained static HTML report next to the artifact
/// tree, plus a results.json snapshot beside it. Returns the report path.
inline std::filesystem::path emit_report(const std::vector<RunResult>& results,
                                         const std::filesystem::path& out_html,
                                         const std::filesystem::path& results_dir) {
    if (results.empty())
        throw Error("emit_report: no results to report");

    const std::filesystem::path report_dir =
        out_html.has_parent_path() ? out_html.parent_path() : std::filesystem::path(".");
    const BatchAggregates agg = aggregate(results);

    std::string html;
    html += "<!doctype html>\n<html><head><meta charset=\"utf-8\">\n"
            "<title>CatalogStitch results</title>\n<style>\n"
            "body{font-family:system-ui,sans-serif;margin:24px;background:#fafafa;color:#222}\n"
            "table{border-collapse:collapse;margin:16px 0}\n"
            "td,th{border:1px solid #ccc;padding:4px 8px;text-align:center;font-size:13px}\n"
            "th{background:#eee}\n"
            "img{height:96px;display:block;margin:auto}\n"
            ".num{font-variant-numeric:tabular-nums}\n"
            ".fail{background:#fdd}\n"
            ".note{color:#777;font-size:12px}\n"
            "</style></head><body>\n";
    html += "<h1>CatalogStitch results</h1>\n";
    html += "<p>" + std::to_string(results.size()) + " example(s): " +
            std::to_string(agg.n_success) + " succeeded, " + std::to_string(agg.n_failed) +
            " failed.</p>\n";

    html += "<h2>Aggregate</h2>\n<table>\n"
            "<tr><th>Run</th><th>AR Error (%) &darr;</th><th>Occluder PSNR (dB) &uarr;</th>"
            "<th>FID &darr;</th><th>CLIP-score &uarr;</th><th>DINO-score &uarr;</th></tr>\n";
    html += "<tr><td>this run</td><td class=\"num\">" +
            (agg.mean_ar_error_pct ? detail::fmt_fixed(*agg.mean_ar_error_pct)
                                   : std::string("n/a")) +
            "</td><td class=\"num\">" +
            (agg.mean_occluder_psnr_db ? detail::fmt_fixed(*agg.mean_occluder_psnr_db)
                                       : std::string("n/a")) +
            "</td><td>n/a</td><td>n/a</td><td>n/a</td></tr>\n</table>\n";

    html += "<h2>Examples</h2>\n<table>\n"
            "<tr><th>id</th><th>background</th><th>product</th><th>mask overlay</th>"
            "<th>before restore</th><th>final</th><th>AR Error (%)</th>"
            "<th>Occluder PSNR (dB)</th><th>adapted</th><th>clipped</th>"
            "<th>occluders</th><th>notes</th></tr>\n";
    for (const RunResult& r : results) {
        if (!r.success) {
            html += "<tr class=\"fail\"><td>" + detail::html_escape(r.example_id) +
                    "</td><td colspan=\"11\">" + detail::html_escape(r.error) +
                    "</td></tr>\n";
            continue;
        }
        html += "<tr><td>" + detail::html_escape(r.example_id) + "</td>";
        detail::thumb_cell(html, r, "background", results_dir, report_dir);
        detail::thumb_cell(html, r, "product", results_dir, report_dir);
        detail::thumb_cell(html, r, "mask_overlay", results_dir, report_dir);
        detail::thumb_cell(html, r, "before_restore", results_dir, report_dir);
        detail::thumb_cell(html, r, "final", results_dir, report_dir);
        html += "<td class=\"num\">" +
                (r.metrics.ar_error_pct ? detail::fmt_fixed(*r.metrics.ar_error_pct)
                                        : std::string("n/a")) +
                "</td>";
        html += "<td class=\"num\">" +
                (r.metrics.occluder_psnr_db ? detail::fmt_fixed(*r.metrics.occluder_psnr_db)
                                            : std::string("n/a")) +
                "</td>";
        html += std::string("<td>") + (r.flags.adapted ? "yes" : "no") + "</td>";
        html += std::string("<td>") + (r.flags.clipped ? "yes" : "no") + "</td>";
        html += "<td>" + std::to_string(r.flags.n_occluders) + "</td>";
        std::string notes;
        for (const std::string& n : r.metrics.notes) {
            if (!notes.empty()) notes += "; ";
            notes += n;
        }
        html += "<td class=\"note\">" + detail::html_escape(notes) + "</td></tr>\n";
    }
    html += "</table>\n</body></html>\n";

    if (!report_dir.empty())
        std::filesystem::create_directories(report_dir);
    {
        std::ofstream out(out_html);
        if (!out)
            throw IoError("cannot write " + out_html.string());
        out << html;
    }
    write_results_json(results, report_dir / "results.json");
    return out_html;
}

} // namespace catalogstitch
