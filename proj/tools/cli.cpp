#include "cli.hpp"

#include "benchmark.hpp"

#include <socialsparse/data_io.hpp>
#include <socialsparse/error.hpp>
#include <socialsparse/model_selection.hpp>
#include <socialsparse/synthetic.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace socialsparse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct FitFlags {
    std::string penalty = "social";
    std::string loss = "logistic";
    int folds = 8;
    int n_lambdas = 5;
    double lambda_min_ratio = 0.05;
    double screen = 0.20;
    double neighbor_weight = 0.7;
    double tol = 1e-4;
    int max_iter = 10000;
    bool no_intercept = false;
    bool no_early_stopping = false;
    std::uint64_t seed = 0;
    int threads = 1;

    FitConfig config() const
    {
        FitConfig cfg;
        cfg.n_folds = folds;
        cfg.n_lambdas = n_lambdas;
        cfg.lambda_min_ratio = lambda_min_ratio;
        cfg.screening_fraction = screen;
        cfg.penalty = parse_penalty(penalty);
        cfg.neighbor_weight = neighbor_weight;
        cfg.loss.kind = loss == "squared" ? LossKind::squared : LossKind::logistic;
        cfg.loss.fit_intercept = !no_intercept;
        cfg.solver.tol = tol;
        cfg.solver.max_iter = max_iter;
        cfg.early_stopping = !no_early_stopping;
        cfg.seed = seed;
        cfg.threads = threads;
        cfg.validate();
        return cfg;
    }

    Task task() const { return loss == "squared" ? Task::regression : Task::classification; }
};

void add_fit_flags(CLI::App* app, FitFlags& f, bool with_penalty)
{
    if (with_penalty) {
        app->add_option("--penalty", f.penalty, "Shrinkage: social, l1 or group")
            ->check(CLI::IsMember({"social", "l1", "group"}))
            ->capture_default_str();
    }
    app->add_option("--loss", f.loss, "Data-fit term")->check(CLI::IsMember({"logistic", "squared"}))->capture_default_str();
    app->add_option("--folds", f.folds, "Cross-validation folds")->capture_default_str();
    app->add_option("--n-lambdas", f.n_lambdas, "Number of lambdas on the path")->capture_default_str();
    app->add_option("--lambda-min-ratio", f.lambda_min_ratio, "Smallest lambda as a fraction of lambda_max")->capture_default_str();
    app->add_option("--screen", f.screen, "Fraction of voxels kept by univariate screening")->capture_default_str();
    app->add_option("--neighbor-weight", f.neighbor_weight, "Weight of the 6 face neighbors")->capture_default_str();
    app->add_option("--tol", f.tol, "Relative max-change stopping tolerance")->capture_default_str();
    app->add_option("--max-iter", f.max_iter, "Iteration cap per solve")->capture_default_str();
    app->add_flag("--no-intercept", f.no_intercept, "Do not fit an intercept");
    app->add_flag("--no-early-stopping", f.no_early_stopping, "Run every solve to convergence");
    app->add_option("--seed", f.seed, "Seed for folds and power iteration")->capture_default_str();
    app->add_option("--threads", f.threads, "Worker threads across folds")->capture_default_str();
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path model_sidecar(const fs::path& out)
{
    if (out.filename().string().ends_with(".ssvol.json")) return out;
    return out / "model.ssvol.json";
}

int cmd_fit(const std::string& data_path, const std::string& labels_path, const std::string& out_path,
            const FitFlags& flags, std::ostream& out)
{
    const FitConfig cfg = flags.config();
    const auto start = std::chrono::steady_clock::now();
    const LoadedData loaded = load_package(data_path, labels_path.empty() ? std::nullopt : std::optional<fs::path>(labels_path),
                                           flags.task());
    const CvResult cv = fit_cv(loaded.dataset, cfg);
    const double wall = seconds_since(start);

    json grids = json::array();
    json fold_lambdas = json::array();
    for (const auto& fold : cv.folds) {
        grids.push_back(fold.path.lambdas);
        fold_lambdas.push_back(fold.chosen_lambda);
    }
    json meta{
        {"lambda_grid", grids},
        {"fold_lambdas", fold_lambdas},
        {"runtime_seconds", wall},
        {"penalty", penalty_name(cfg.penalty)},
        {"loss", flags.loss},
        {"cv_accuracy", cv.mean_validation_score},
    };
    if (!loaded.labels.classes.empty()) meta["classes"] = loaded.labels.classes;
    write_package(weight_map_package(cv.model, std::move(meta)), model_sidecar(out_path));

    out << json{{"cv_accuracy", cv.mean_validation_score}, {"wall_time", wall}, {"n_nonzero", cv.model.n_nonzero()}}.dump()
        << '\n';
    return exit_ok;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& labels_path,
                const std::string& out_path, std::ostream& out)
{
    const LoadedModel model = read_weight_map(fs::is_directory(model_path) ? model_sidecar(model_path) : fs::path(model_path));
    const fs::path sidecar = resolve_sidecar(data_path);
    const VolumePackage pkg = read_package(sidecar);
    if (!(pkg.dims == model.dims)) {
        throw FormatError("model grid " + std::to_string(model.dims.nx) + "x" + std::to_string(model.dims.ny) + "x"
                          + std::to_string(model.dims.nz) + " does not match data grid " + std::to_string(pkg.dims.nx) + "x"
                          + std::to_string(pkg.dims.ny) + "x" + std::to_string(pkg.dims.nz));
    }
    const auto grid = package_grid(pkg);
    const Vector weights = restrict_to_mask(*grid, model.volume);

    const bool regression = model.metadata.is_object() && model.metadata.value("loss", "") == "squared";
    std::vector<std::string> classes{"-1", "1"};
    if (model.metadata.is_object() && model.metadata.contains("classes")) {
        classes = model.metadata.at("classes").get<std::vector<std::string>>();
        if (classes.size() != 2) throw FormatError("model metadata must list two classes");
    }

    const auto volume = static_cast<std::size_t>(pkg.dims.volume());
    Vector scores(pkg.n_samples);
    for (Index s = 0; s < pkg.n_samples; ++s) {
        const float* sample = pkg.data.data() + static_cast<std::size_t>(s) * volume;
        double acc = model.intercept;
        for (Index m = 0; m < weights.size(); ++m) acc += weights[m] * sample[grid->full_index_of(m)];
        scores[s] = acc;
    }

    std::vector<std::string> predicted(static_cast<std::size_t>(pkg.n_samples));
    for (Index s = 0; s < pkg.n_samples; ++s) {
        predicted[static_cast<std::size_t>(s)] = regression ? format_double(scores[s]) : classes[scores[s] >= 0.0 ? 1 : 0];
    }

    {
        std::ofstream csv(out_path, std::ios::trunc);
        if (!csv) throw FormatError("cannot write " + out_path);
        csv << "sample,score,label\n";
        for (Index s = 0; s < pkg.n_samples; ++s) {
            csv << s << ',' << format_double(scores[s]) << ',' << predicted[static_cast<std::size_t>(s)] << '\n';
        }
    }

    const fs::path labels_file = labels_path.empty() ? companion_labels(sidecar) : fs::path(labels_path);
    if (fs::exists(labels_file)) {
        const Labels labels = read_labels(labels_file, pkg.n_samples, regression ? Task::regression : Task::classification);
        if (regression) {
            out << json{{"r2", prediction_score(Task::regression, labels.values, scores)}}.dump() << '\n';
        } else {
            Index correct = 0;
            for (Index s = 0; s < pkg.n_samples; ++s) {
                const auto& truth = labels.classes[labels.values[s] > 0 ? 1 : 0];
                correct += truth == predicted[static_cast<std::size_t>(s)];
            }
            out << json{{"accuracy", static_cast<double>(correct) / static_cast<double>(pkg.n_samples)}}.dump() << '\n';
        }
    }
    return exit_ok;
}

int cmd_simulate(const SyntheticSpec& spec, const std::string& out_dir, std::ostream& out)
{
    const SyntheticData sim = generate_synthetic(spec);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_package(dataset_to_package(sim.data), dir / "data.ssvol.json");

    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(sim.data.n_samples()));
    for (Index s = 0; s < sim.data.n_samples(); ++s) {
        const double y = sim.data.y()[s];
        labels.push_back(spec.task == Task::classification ? (y > 0 ? "1" : "-1") : format_double(static_cast<float>(y)));
    }
    write_labels(dir / "labels.csv", labels);

    json centers = json::array();
    for (const auto& c : sim.centers) centers.push_back({c.x, c.y, c.z});
    write_package(weight_map_package(sim.truth, json{{"blob_centers", centers}, {"seed", spec.seed}}),
                  dir / "truth.ssvol.json");

    out << json{{"n_samples", sim.data.n_samples()},
                {"n_voxels", sim.grid->voxel_count()},
                {"n_support", sim.truth.n_nonzero()},
                {"n_positive", spec.task == Task::classification ? sim.data.n_positive() : 0}}
               .dump()
        << '\n';
    return exit_ok;
}

int cmd_benchmark(const std::string& data_path, const std::string& labels_path, const std::string& out_path,
                  const std::string& estimators, int repeats, double test_fraction, const FitFlags& flags,
                  std::ostream& out)
{
    BenchmarkOptions options;
    options.repeats = repeats;
    options.test_fraction = test_fraction;
    options.fit = flags.config();
    options.estimators.clear();
    std::stringstream ss(estimators);
    for (std::string name; std::getline(ss, name, ',');) {
        if (!name.empty()) options.estimators.push_back(parse_penalty(name));
    }

    const LoadedData loaded = load_package(data_path, labels_path.empty() ? std::nullopt : std::optional<fs::path>(labels_path),
                                           flags.task());
    const auto rows = run_benchmark(loaded.dataset, options);

    const fs::path report(out_path);
    if (report.has_parent_path()) fs::create_directories(report.parent_path());
    {
        std::ofstream csv(report, std::ios::trunc);
        if (!csv) throw FormatError("cannot write " + report.string());
        write_report_csv(csv, rows);
    }
    fs::path timing = report;
    timing.replace_extension(".timing.csv");
    {
        std::ofstream csv(timing, std::ios::trunc);
        if (!csv) throw FormatError("cannot write " + timing.string());
        write_timing_csv(csv, rows);
    }
    fs::path summary_path = report;
    summary_path.replace_extension(".summary.json");
    const json summary = benchmark_summary(rows);
    {
        std::ofstream js(summary_path, std::ios::trunc);
        if (!js) throw FormatError("cannot write " + summary_path.string());
        js << summary.dump(2) << '\n';
    }
    out << summary.dump() << '\n';
    return exit_ok;
}

int cmd_convert(const std::string& data_path, const std::string& csv_path, const std::string& mask_from,
                const std::string& out_path)
{
    if (!data_path.empty()) {
        write_flat_csv(read_package(resolve_sidecar(data_path)), out_path);
        return exit_ok;
    }
    if (csv_path.empty() || mask_from.empty()) throw UsageError("convert needs --data, or --csv with --mask-from");
    const VolumePackage like = read_package(resolve_sidecar(mask_from));
    write_package(read_flat_csv(csv_path, like.dims, like.mask), out_path);
    return exit_ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Spatially structured sparse linear decoders on voxel grids"};
    app.name("socialsparse");
    app.require_subcommand(1);

    // fit
    FitFlags fit_flags;
    std::string fit_data, fit_labels, fit_out;
    auto* fit = app.add_subcommand("fit", "Cross-validated fit, writes a weight-map volume");
    fit->add_option("--data", fit_data, "Package sidecar (.ssvol.json) or directory")->required();
    fit->add_option("--labels", fit_labels, "sample,label CSV (default: labels.csv next to the package)");
    fit->add_option("--out", fit_out, "Output sidecar (.ssvol.json) or directory")->required();
    add_fit_flags(fit, fit_flags, true);

    // predict
    std::string pred_model, pred_data, pred_labels, pred_out;
    auto* pred = app.add_subcommand("predict", "Score a package with a fitted weight map");
    pred->add_option("--model", pred_model, "Weight-map sidecar or the directory given to fit --out")->required();
    pred->add_option("--data", pred_data, "Package sidecar or directory")->required();
    pred->add_option("--labels", pred_labels, "Optional labels for accuracy (default: companion labels.csv)");
    pred->add_option("--out", pred_out, "Output CSV sample,score,label")->required();

    // simulate
    SyntheticSpec sim_spec;
    std::vector<Index> sim_dims{20, 20, 20};
    std::string sim_task = "classification", sim_mask = "ellipsoid", sim_out;
    auto* sim = app.add_subcommand("simulate", "Write a synthetic spatial decoding package");
    sim->add_option("--out", sim_out, "Output directory")->required();
    sim->add_option("--dims", sim_dims, "Grid size nx,ny,nz")->delimiter(',')->expected(3)->capture_default_str();
    sim->add_option("--n-samples", sim_spec.n_samples, "Number of samples")->capture_default_str();
    sim->add_option("--n-blobs", sim_spec.n_blobs, "Number of signal blobs")->capture_default_str();
    sim->add_option("--blob-radius", sim_spec.blob_radius, "Blob radius in voxels")->capture_default_str();
    sim->add_option("--snr", sim_spec.snr, "Signal to noise variance ratio (inf for noiseless)")->capture_default_str();
    sim->add_option("--fwhm", sim_spec.smoothing_fwhm, "Smoothing FWHM in voxels")->capture_default_str();
    sim->add_option("--task", sim_task, "classification or regression")
        ->check(CLI::IsMember({"classification", "regression"}))
        ->capture_default_str();
    sim->add_option("--mask", sim_mask, "ellipsoid or full")->check(CLI::IsMember({"ellipsoid", "full"}))->capture_default_str();
    sim->add_option("--seed", sim_spec.seed, "Random seed")->capture_default_str();

    // benchmark
    FitFlags bench_flags;
    std::string bench_data, bench_labels, bench_out, bench_estimators = "social,l1,group";
    int bench_repeats = 10;
    double bench_test_fraction = 0.2;
    auto* bench = app.add_subcommand("benchmark", "Outer-CV accuracy and wall time per estimator");
    bench->add_option("--data", bench_data, "Package sidecar or directory")->required();
    bench->add_option("--labels", bench_labels, "sample,label CSV (default: companion labels.csv)");
    bench->add_option("--out", bench_out, "Report CSV")->required();
    bench->add_option("--repeats", bench_repeats, "Outer random splits")->capture_default_str();
    bench->add_option("--estimators", bench_estimators, "Comma-separated list of social, l1, group")->capture_default_str();
    bench->add_option("--test-fraction", bench_test_fraction, "Held-out fraction per split")->capture_default_str();
    add_fit_flags(bench, bench_flags, false);

    // convert
    std::string conv_data, conv_csv, conv_mask, conv_out;
    auto* conv = app.add_subcommand("convert", "Convert between packages and flat voxel CSV");
    conv->add_option("--data", conv_data, "Package to flatten into CSV");
    conv->add_option("--csv", conv_csv, "Flat CSV to pack");
    conv->add_option("--mask-from", conv_mask, "Package providing dims and mask for --csv");
    conv->add_option("--out", conv_out, "Output CSV or sidecar")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return exit_usage;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_data, fit_labels, fit_out, fit_flags, out);
        if (pred->parsed()) return cmd_predict(pred_model, pred_data, pred_labels, pred_out, out);
        if (sim->parsed()) {
            sim_spec.dims = {sim_dims[0], sim_dims[1], sim_dims[2]};
            sim_spec.task = sim_task == "regression" ? Task::regression : Task::classification;
            sim_spec.mask = sim_mask == "full" ? MaskShape::full : MaskShape::ellipsoid;
            return cmd_simulate(sim_spec, sim_out, out);
        }
        if (bench->parsed()) {
            return cmd_benchmark(bench_data, bench_labels, bench_out, bench_estimators, bench_repeats, bench_test_fraction,
                                 bench_flags, out);
        }
        if (conv->parsed()) return cmd_convert(conv_data, conv_csv, conv_mask, conv_out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return exit_format;
    } catch (const fs::filesystem_error& e) {
        err << "format error: " << e.what() << '\n';
        return exit_format;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return exit_numeric;
    }
    return exit_usage;
}

} // namespace socialsparse::cli
