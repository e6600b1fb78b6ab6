#include "stochdiag/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "stochdiag/csv.hpp"
#include "stochdiag/design.hpp"
#include "stochdiag/errors.hpp"
#include "stochdiag/report_io.hpp"
#include "stochdiag/svg.hpp"

namespace stochdiag::pipeline {

namespace {

using nlohmann::json;

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

}  // namespace

void RunConfig::validate() const {
    if (dimension < 1) throw DataError("config: dimension must be >= 1");
    if (train_locations < 1 || train_replicates < 1 ||
        validation_locations_per_dim < 1 || validation_replicates < 1 ||
        lhs_restarts < 1) {
        throw DataError("config: all design counts must be positive");
    }
    if (emulator_kind != "hom" && emulator_kind != "het") {
        throw DataError("config: emulator kind must be 'hom' or 'het'");
    }
    if (has_bounds()) {
        if (lower.size() != dimension || upper.size() != dimension) {
            throw DataError("config: bounds must have one entry per dimension");
        }
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            if (!(lower[i] < upper[i])) {
                throw DataError("config: bounds must be ordered");
            }
        }
    }
    tolerance.validate();
}

RunConfig default_config() { return RunConfig{}; }

RunConfig load_config(const std::string& path) {
    RunConfig config;
    if (path.empty()) return config;
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open config file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("config file is not valid JSON: " + std::string(e.what()));
    }

    config.seed = j.value("seed", config.seed);
    config.dimension = j.value("dimension", config.dimension);
    if (j.contains("bounds")) {
        config.lower = vector_from_json(j.at("bounds").at("lower"));
        config.upper = vector_from_json(j.at("bounds").at("upper"));
    }
    if (j.contains("design")) {
        const auto& d = j.at("design");
        config.train_locations = d.value("train_locations", config.train_locations);
        config.train_replicates = d.value("train_replicates", config.train_replicates);
        config.validation_locations_per_dim =
            d.value("validation_locations_per_dim", config.validation_locations_per_dim);
        config.validation_replicates =
            d.value("validation_replicates", config.validation_replicates);
        config.lhs_restarts = d.value("lhs_restarts", config.lhs_restarts);
    }
    if (j.contains("emulator")) {
        const auto& e = j.at("emulator");
        config.emulator_kind = e.value("kind", config.emulator_kind);
        config.fit.n_starts = e.value("n_starts", config.fit.n_starts);
        config.fit.max_evals = e.value("max_evals", config.fit.max_evals);
        config.fit.het_max_iterations =
            e.value("het_max_iterations", config.fit.het_max_iterations);
        config.fit.het_tolerance = e.value("het_tolerance", config.fit.het_tolerance);
        if (e.contains("fixed_nugget") && !e.at("fixed_nugget").is_null()) {
            config.fit.fixed_nugget = e.at("fixed_nugget").get<double>();
        }
        const std::string mean = e.value("mean", "zero");
        if (mean == "zero") {
            config.fit.mean.form = gp::MeanSpec::Form::Zero;
        } else if (mean == "constant") {
            config.fit.mean.form = gp::MeanSpec::Form::Constant;
            config.fit.mean.value = e.value("mean_value", 0.0);
        } else {
            throw DataError("config: emulator mean must be 'zero' or 'constant'");
        }
    }
    if (j.contains("tolerance")) {
        const auto& t = j.at("tolerance");
        if (t.contains("sd_multipliers")) {
            if (t.at("sd_multipliers").is_null()) {
                config.tolerance.sd_multipliers.reset();
            } else {
                config.tolerance.sd_multipliers = {
                    t.at("sd_multipliers")[0].get<double>(),
                    t.at("sd_multipliers")[1].get<double>()};
            }
        }
        if (t.contains("skew_half_width")) {
            if (t.at("skew_half_width").is_null()) {
                config.tolerance.skew_half_width.reset();
            } else {
                config.tolerance.skew_half_width = t.at("skew_half_width").get<double>();
            }
        }
        if (t.contains("kurt_half_width")) {
            if (t.at("kurt_half_width").is_null()) {
                config.tolerance.kurt_half_width.reset();
            } else {
                config.tolerance.kurt_half_width = t.at("kurt_half_width").get<double>();
            }
        }
        config.tolerance.shape = t.value("shape", "uniform") == "triangular"
                                     ? diag::ToleranceSpec::Shape::Triangular
                                     : diag::ToleranceSpec::Shape::Uniform;
    }
    if (j.contains("diagnostics")) {
        const auto& d = j.at("diagnostics");
        config.diagnostics.n_mc_mean = d.value("n_mc_mean", config.diagnostics.n_mc_mean);
        config.diagnostics.n_mc_variance =
            d.value("n_mc_variance", config.diagnostics.n_mc_variance);
        config.diagnostics.n_mc_normality =
            d.value("n_mc_normality", config.diagnostics.n_mc_normality);
        config.diagnostics.include_mean_uncertainty = d.value(
            "include_mean_uncertainty", config.diagnostics.include_mean_uncertainty);
        config.diagnostics.exec =
            d.value("parallel", true) ? Exec::Parallel : Exec::Serial;
    }
    config.grouping_tolerance = j.value("grouping_tolerance", config.grouping_tolerance);
    config.validate();
    return config;
}

void save_config(const std::string& path, const RunConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["dimension"] = config.dimension;
    if (config.has_bounds()) {
        j["bounds"] = {{"lower", vector_to_json(config.lower)},
                       {"upper", vector_to_json(config.upper)}};
    }
    j["design"] = {{"train_locations", config.train_locations},
                   {"train_replicates", config.train_replicates},
                   {"validation_locations_per_dim", config.validation_locations_per_dim},
                   {"validation_replicates", config.validation_replicates},
                   {"lhs_restarts", config.lhs_restarts}};
    json emulator = {{"kind", config.emulator_kind},
                     {"n_starts", config.fit.n_starts},
                     {"max_evals", config.fit.max_evals},
                     {"het_max_iterations", config.fit.het_max_iterations},
                     {"het_tolerance", config.fit.het_tolerance},
                     {"mean", config.fit.mean.form == gp::MeanSpec::Form::Zero
                                  ? "zero"
                                  : "constant"}};
    if (config.fit.mean.form == gp::MeanSpec::Form::Constant) {
        emulator["mean_value"] = config.fit.mean.value;
    }
    if (config.fit.fixed_nugget) {
        emulator["fixed_nugget"] = *config.fit.fixed_nugget;
    } else {
        emulator["fixed_nugget"] = nullptr;
    }
    j["emulator"] = std::move(emulator);
    json tolerance;
    if (config.tolerance.sd_multipliers) {
        tolerance["sd_multipliers"] = {config.tolerance.sd_multipliers->first,
                                       config.tolerance.sd_multipliers->second};
    } else {
        tolerance["sd_multipliers"] = nullptr;
    }
    tolerance["skew_half_width"] = config.tolerance.skew_half_width
                                       ? json(*config.tolerance.skew_half_width)
                                       : json(nullptr);
    tolerance["kurt_half_width"] = config.tolerance.kurt_half_width
                                       ? json(*config.tolerance.kurt_half_width)
                                       : json(nullptr);
    tolerance["shape"] = config.tolerance.shape == diag::ToleranceSpec::Shape::Uniform
                             ? "uniform"
                             : "triangular";
    j["tolerance"] = std::move(tolerance);
    j["diagnostics"] = {
        {"n_mc_mean", config.diagnostics.n_mc_mean},
        {"n_mc_variance", config.diagnostics.n_mc_variance},
        {"n_mc_normality", config.diagnostics.n_mc_normality},
        {"include_mean_uncertainty", config.diagnostics.include_mean_uncertainty},
        {"parallel", config.diagnostics.exec == Exec::Parallel}};
    j["grouping_tolerance"] = config.grouping_tolerance;

    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open config file for writing: " + path);
    }
    out << j.dump(2) << "\n";
}

namespace {

std::string format_u(double u) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", u);
    return buf;
}

svg::ScatterSpec u_scatter(const diag::DiagnosticReport& report,
                           const std::vector<diag::UnexpectednessResult>& results,
                           const std::string& family, Eigen::Index coordinate) {
    svg::ScatterSpec spec;
    spec.title = family + " unexpectedness";
    spec.x_label = "x" + std::to_string(coordinate + 1);
    spec.y_label = "U";
    spec.h_guides = {-0.995, -0.95, 0.0, 0.95, 0.995};
    spec.x_auto = false;
    double lo = 0.0, hi = 1.0;
    if (report.locations.rows() > 0) {
        lo = report.locations.col(coordinate).minCoeff();
        hi = report.locations.col(coordinate).maxCoeff();
        const double pad = (hi - lo) * 0.05 + 1e-9;
        lo -= pad;
        hi += pad;
    }
    spec.x_min = lo;
    spec.x_max = hi;
    for (const auto& r : results) {
        svg::AnnotatedPoint p;
        p.x = report.locations(r.location, coordinate);
        p.y = r.u;
        if (r.flag0995) p.annotation = format_u(r.u);
        spec.points.push_back(std::move(p));
    }
    return spec;
}

}  // namespace

std::vector<std::string> write_report_plots(const diag::DiagnosticReport& report,
                                            const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> files;
    const std::pair<const char*, const std::vector<diag::UnexpectednessResult>*> families[] = {
        {"mean", &report.mean_u},
        {"variance", &report.variance_u},
        {"skewness", &report.skewness_u},
        {"kurtosis", &report.kurtosis_u}};
    for (const auto& [name, results] : families) {
        for (Eigen::Index d = 0; d < report.locations.cols(); ++d) {
            const std::string path = out_dir + "/u_" + name + "_x" +
                                     std::to_string(d + 1) + ".svg";
            svg::write_svg(path, svg::render_scatter(u_scatter(report, *results, name, d)));
            files.push_back(path);
        }
    }

    svg::ScatterSpec qq;
    qq.title = "QQ plot of standardised errors";
    qq.x_label = "theoretical quantile";
    qq.y_label = "sample quantile";
    qq.diagonal = true;
    qq.x_auto = true;
    double yq_lo = -1.0, yq_hi = 1.0;
    if (!report.qq.empty()) {
        yq_lo = yq_hi = report.qq.front().second;
        for (const auto& [t, s] : report.qq) {
            yq_lo = std::min({yq_lo, s, t});
            yq_hi = std::max({yq_hi, s, t});
        }
        const double pad = (yq_hi - yq_lo) * 0.05 + 1e-9;
        yq_lo -= pad;
        yq_hi += pad;
    }
    qq.y_min = yq_lo;
    qq.y_max = yq_hi;
    for (const auto& [t, s] : report.qq) {
        qq.points.push_back({t, s, ""});
    }
    const std::string qq_path = out_dir + "/qq.svg";
    svg::write_svg(qq_path, svg::render_scatter(qq));
    files.push_back(qq_path);

    svg::ScatterSpec coverage;
    coverage.title = "credible interval coverage";
    coverage.x_label = "nominal level";
    coverage.y_label = "empirical coverage";
    coverage.diagonal = true;
    coverage.x_auto = false;
    coverage.x_min = 0.0;
    coverage.x_max = 1.0;
    coverage.y_min = 0.0;
    coverage.y_max = 1.05;
    for (const auto& [level, cov] : report.coverage) {
        coverage.points.push_back({level, cov, ""});
    }
    const std::string coverage_path = out_dir + "/coverage.svg";
    svg::write_svg(coverage_path, svg::render_scatter(coverage));
    files.push_back(coverage_path);
    return files;
}

ExperimentResult run_experiment(const RunConfig& config, const ExperimentSpec& spec,
                                const std::string& out_dir, bool plots) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    ExperimentResult result;

    const RngStream base(config.seed, spec.stream);

    // Training data.
    const design::Design train_design = design::maximin_lhs(
        static_cast<std::size_t>(spec.train_locations), 1,
        base.substream(stream_key::kTrainDesign),
        static_cast<std::size_t>(config.lhs_restarts), spec.train_replicates,
        config.diagnostics.exec);
    const Eigen::MatrixXd X_train = design::expand_replicates(train_design);
    const sim::SimulationBatch train_batch =
        sim::run_toy_batch(spec.family, X_train,
                           base.substream(stream_key::kTrainSimulate),
                           config.diagnostics.exec);

    std::vector<std::string> run_header = {"x1", "y"};
    Eigen::MatrixXd run_table(X_train.rows(), 2);
    run_table.col(0) = X_train.col(0);
    run_table.col(1) = train_batch.outputs;
    const std::string runs_path = out_dir + "/runs.csv";
    csv::write_csv(runs_path, run_header, run_table);
    result.files.push_back(runs_path);

    // Emulator.
    gp::Model model = gp::fit_hetgp(X_train, train_batch.outputs, config.fit,
                                    base.substream(stream_key::kFit));
    const std::string model_path = out_dir + "/model.json";
    gp::save_model(model_path, model);
    result.files.push_back(model_path);

    // Replicated validation data from an independent design.
    const design::Design val_design = design::maximin_lhs(
        static_cast<std::size_t>(spec.validation_locations), 1,
        base.substream(stream_key::kValidationDesign),
        static_cast<std::size_t>(config.lhs_restarts), spec.validation_replicates,
        config.diagnostics.exec);
    const Eigen::MatrixXd X_val = design::expand_replicates(val_design);
    const sim::SimulationBatch val_batch =
        sim::run_toy_batch(spec.family, X_val,
                           base.substream(stream_key::kValidationSimulate),
                           config.diagnostics.exec);
    Eigen::MatrixXd val_table(X_val.rows(), 2);
    val_table.col(0) = X_val.col(0);
    val_table.col(1) = val_batch.outputs;
    const std::string val_path = out_dir + "/validation_runs.csv";
    csv::write_csv(val_path, run_header, val_table);
    result.files.push_back(val_path);

    const data::ReplicatedDataset validation =
        data::group_runs(X_val, val_batch.outputs, config.grouping_tolerance);
    result.report = diag::run_all(model, validation, config.tolerance,
                                  config.diagnostics,
                                  base.substream(stream_key::kDiagnostics));
    const std::string report_path = out_dir + "/report.json";
    diag::save_report(report_path, result.report);
    result.files.push_back(report_path);

    const std::string summary_path = out_dir + "/summary.txt";
    {
        std::ofstream summary(summary_path);
        summary << spec.name << "\n" << diag::render_summary(result.report);
    }
    result.files.push_back(summary_path);

    if (plots) {
        auto plot_files = write_report_plots(result.report, out_dir + "/plots");
        result.files.insert(result.files.end(), plot_files.begin(), plot_files.end());
    }
    return result;
}

std::vector<ExperimentSpec> paper_experiments() {
    std::vector<ExperimentSpec> experiments(3);
    experiments[0].name = "good-emulator";
    experiments[0].family = sim::ToyFamily::NormalHeteroscedastic;
    experiments[0].train_locations = 20;
    experiments[0].train_replicates = 20;
    experiments[0].stream = 101;

    experiments[1].name = "small-data";
    experiments[1].family = sim::ToyFamily::NormalHeteroscedastic;
    experiments[1].train_locations = 10;
    experiments[1].train_replicates = 2;
    experiments[1].stream = 102;

    experiments[2].name = "gamma";
    experiments[2].family = sim::ToyFamily::Gamma;
    experiments[2].train_locations = 20;
    experiments[2].train_replicates = 20;
    experiments[2].stream = 103;

    for (auto& e : experiments) {
        e.validation_locations = 10;
        e.validation_replicates = 5;
    }
    return experiments;
}

void reproduce_paper(const RunConfig& config, const std::string& out_dir, bool plots) {
    for (const auto& spec : paper_experiments()) {
        run_experiment(config, spec, out_dir + "/" + spec.name, plots);
    }
}

}  // namespace stochdiag::pipeline
