// catalogstitch CLI: run the compositing pipeline over a dataset, generate
// synthetic benchmark fixtures, or render an HTML report from results.json.

#include "catalogstitch/catalogstitch.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace cs = catalogstitch;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_command(const std::string& cmd) {
    std::vector<std::string> argv;
    std::istringstream in(cmd);
    std::string tok;
    while (in >> tok)
        argv.push_back(tok);
    return argv;
}

struct RunOptions {
    std::string dataset;
    std::string out;
    std::string mask_mode = "dim-aware";
    bool restore = true;
    double tau = 0.06;
    double tau_occ = 0.01;
    std::string backend_segment, backend_inpaint, backend_composite;
    bool mock = false;
    std::string mock_compositor = "fit-inside";
    int jobs = 1;
};

cs::BackendSpec pick_backend(const std::string& external_cmd, bool mock,
                             cs::MockVariant mock_variant, const char* stage) {
    if (!external_cmd.empty())
        return cs::BackendSpec::external(split_command(external_cmd));
    if (mock)
        return cs::BackendSpec::builtin(mock_variant);
    throw cs::Error(std::string("no backend configured for the ") + stage +
                    " stage; pass --backend-" + stage + " CMD or --mock");
}

int cmd_run(const RunOptions& opt) {
    cs::PipelineConfig cfg;
    cfg.tau = opt.tau;
    cfg.tau_occ = opt.tau_occ;
    cfg.output_dir = opt.out;
    cfg.parallelism = opt.jobs;
    cfg.restore_occluders = opt.restore;

    if (opt.mask_mode == "freeform")
        cfg.mask_mode = cs::MaskMode::freeform;
    else if (opt.mask_mode == "bbox")
        cfg.mask_mode = cs::MaskMode::bbox;
    else if (opt.mask_mode == "dim-aware")
        cfg.mask_mode = cs::MaskMode::dim_aware;
    else
        throw cs::Error("unknown --mask-mode '" + opt.mask_mode + "'");

    const cs::MockVariant comp_mock = [&] {
        if (opt.mock_compositor == "fit-inside")
            return cs::MockVariant::fit_inside_compositor;
        if (opt.mock_compositor == "stretch-fill")
            return cs::MockVariant::stretch_fill_compositor;
        throw cs::Error("unknown --mock-compositor '" + opt.mock_compositor + "'");
    }();

    cfg.composite_backend =
        pick_backend(opt.backend_composite, opt.mock, comp_mock, "composite");
    if (opt.restore) {
        cfg.segment_backend = pick_backend(opt.backend_segment, opt.mock,
                                           cs::MockVariant::oracle_segmenter, "segment");
        cfg.inpaint_backend = pick_backend(opt.backend_inpaint, opt.mock,
                                           cs::MockVariant::nearest_fill_inpainter, "inpaint");
    }
    cfg.validate();

    const std::vector<cs::ExampleRecord> records = cs::load_dataset(opt.dataset);
    if (records.empty()) {
        std::fprintf(stderr, "dataset %s has no examples\n", opt.dataset.c_str());
        return 1;
    }
    fs::create_directories(cfg.output_dir);

    const std::vector<cs::RunResult> results = cs::run_batch(records, cfg);
    cs::write_results_json(results, cfg.output_dir / "results.json");
    cs::emit_report(results, cfg.output_dir / "report.html", cfg.output_dir);

    const cs::BatchAggregates agg = cs::aggregate(results);
    std::printf("%d/%zu example(s) succeeded", agg.n_success, results.size());
    if (agg.mean_ar_error_pct)
        std::printf(", mean AR error %.3f%%", *agg.mean_ar_error_pct);
    if (agg.mean_occluder_psnr_db)
        std::printf(", mean occluder PSNR %.2f dB", *agg.mean_occluder_psnr_db);
    std::printf("\nresults: %s\nreport:  %s\n",
                (cfg.output_dir / "results.json").string().c_str(),
                (cfg.output_dir / "report.html").string().c_str());
    for (const cs::RunResult& r : results)
        if (!r.success)
            std::fprintf(stderr, "FAILED %s\n", r.error.c_str());

    return agg.n_failed == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CatalogStitch: dimension-aware mask computation and occlusion-aware "
                 "hybrid restoration around pluggable compositing backends"};
    app.require_subcommand(1);

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand("run", "Run the pipeline over a dataset");
    run->add_option("--dataset", run_opt.dataset, "Dataset root (contains index.json)")
        ->required();
    run->add_option("--out", run_opt.out, "Output directory for artifacts and reports")
        ->required();
    run->add_option("--mask-mode", run_opt.mask_mode,
                    "Target mask strategy: freeform|bbox|dim-aware (default dim-aware)");
    run->add_flag("--restore,!--no-restore", run_opt.restore,
                  "Enable occluder caching and restoration (default on)");
    run->add_option("--tau", run_opt.tau, "Aspect-ratio difference threshold (default 0.06)");
    run->add_option("--tau-occ", run_opt.tau_occ,
                    "Occluder bounding-box IoU threshold (default 0.01)");
    run->add_option("--backend-segment", run_opt.backend_segment,
                    "External segmenter command (receives a manifest path)");
    run->add_option("--backend-inpaint", run_opt.backend_inpaint,
                    "External inpainter command (receives a manifest path)");
    run->add_option("--backend-composite", run_opt.backend_composite,
                    "External compositor command (receives a manifest path)");
    run->add_flag("--mock", run_opt.mock, "Use the built-in deterministic mock backends");
    run->add_option("--mock-compositor", run_opt.mock_compositor,
                    "Mock compositor variant: fit-inside|stretch-fill (default fit-inside)");
    run->add_option("--jobs", run_opt.jobs, "Examples to run in parallel (default 1)")
        ->check(CLI::PositiveNumber);

    std::string fx_out;
    std::uint64_t fx_seed = 0;
    int fx_dimension = 35;
    int fx_occlusion = 23;
    CLI::App* fixtures = app.add_subcommand("fixtures", "Generate a synthetic benchmark dataset");
    fixtures->add_option("--out", fx_out, "Dataset directory to create")->required();
    fixtures->add_option("--seed", fx_seed, "RNG seed; same seed, same bytes")->required();
    fixtures->add_option("--dimension", fx_dimension, "Dimension-mismatch scene count (default 35)");
    fixtures->add_option("--occlusion", fx_occlusion, "Occlusion scene count (default 23)");

    std::string rp_results;
    std::string rp_out;
    CLI::App* report = app.add_subcommand("report", "Render an HTML report from results.json");
    report->add_option("--results", rp_results, "Directory containing results.json")->required();
    report->add_option("--out", rp_out, "Report file to write")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(run_opt);
        if (fixtures->parsed()) {
            const auto records = cs::generate_fixtures(fx_out, fx_seed, fx_dimension, fx_occlusion);
            std::printf("wrote %zu example(s) under %s\n", records.size(), fx_out.c_str());
            return 0;
        }
        if (report->parsed()) {
            const auto results = cs::load_results_json(fs::path(rp_results) / "results.json");
            const fs::path out = cs::emit_report(results, rp_out, rp_results);
            std::printf("report: %s\n", out.string().c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
