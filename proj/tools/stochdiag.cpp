#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>

#include "stochdiag/csv.hpp"
#include "stochdiag/dataset.hpp"
#include "stochdiag/design.hpp"
#include "stochdiag/diagnostics.hpp"
#include "stochdiag/errors.hpp"
#include "stochdiag/gp.hpp"
#include "stochdiag/pipeline.hpp"
#include "stochdiag/report_io.hpp"
#include "stochdiag/simulators.hpp"

namespace {

using namespace stochdiag;

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    bool plots = false;
};

pipeline::RunConfig resolve_config(const GlobalOptions& options) {
    pipeline::RunConfig config = pipeline::load_config(options.config_path);
    if (options.seed) config.seed = *options.seed;
    return config;
}

Eigen::MatrixXd to_unit_cube(const pipeline::RunConfig& config, const Eigen::MatrixXd& X) {
    return config.has_bounds() ? design::scale_to_unit(X, config.lower, config.upper) : X;
}

sim::SimulationBatch dispatch_simulator(const std::string& simulator,
                                        const pipeline::RunConfig& config,
                                        const Eigen::MatrixXd& X_unit,
                                        const std::string& workdir, Exec exec) {
    const RngStream rng =
        RngStream(config.seed, 0).substream(pipeline::stream_key::kTrainSimulate);
    if (simulator == "toy-normal") {
        return sim::run_toy_batch(sim::ToyFamily::NormalHeteroscedastic, X_unit, rng, exec);
    }
    if (simulator == "toy-gamma") {
        return sim::run_toy_batch(sim::ToyFamily::Gamma, X_unit, rng, exec);
    }
    const Eigen::MatrixXd X_native =
        config.has_bounds() ? design::scale_to_bounds(X_unit, config.lower, config.upper)
                            : X_unit;
    if (simulator.rfind("table:", 0) == 0) {
        return sim::run_table_adapter(simulator.substr(6), X_native);
    }
    if (simulator.rfind("exec:", 0) == 0) {
        return sim::run_subprocess_adapter(simulator.substr(5), workdir, X_native);
    }
    throw DataError("unknown simulator '" + simulator +
                    "' (expected toy-normal, toy-gamma, table:<path>, exec:<cmd>)");
}

int run_design(const GlobalOptions& options, const std::string& out,
               int n_override, int replicates_override) {
    pipeline::RunConfig config = resolve_config(options);
    const int n = n_override > 0 ? n_override : config.validation_locations();
    const int r = replicates_override > 0 ? replicates_override
                                          : config.validation_replicates;
    const design::Design d = design::maximin_lhs(
        static_cast<std::size_t>(n), static_cast<std::size_t>(config.dimension),
        RngStream(config.seed, 0).substream(pipeline::stream_key::kTrainDesign),
        static_cast<std::size_t>(config.lhs_restarts), r, config.diagnostics.exec);
    std::vector<std::string> header;
    for (int j = 0; j < config.dimension; ++j) header.push_back("x" + std::to_string(j + 1));
    header.push_back("r");
    Eigen::MatrixXd table(d.points.rows(), config.dimension + 1);
    table.leftCols(config.dimension) = d.points;
    for (Eigen::Index i = 0; i < d.points.rows(); ++i) {
        table(i, config.dimension) = d.replicates[static_cast<std::size_t>(i)];
    }
    csv::write_csv(out, header, table);
    std::cout << "wrote " << out << " (" << n << " locations x " << r
              << " replicates, min distance "
              << design::min_pairwise_distance(d.points) << ")\n";
    return 0;
}

int run_simulate(const GlobalOptions& options, const std::string& design_path,
                 const std::string& simulator, const std::string& out,
                 const std::string& workdir) {
    pipeline::RunConfig config = resolve_config(options);
    const csv::Table table = csv::read_numeric_csv(design_path);
    const auto d = static_cast<Eigen::Index>(table.header.size()) -
                   (table.header.back() == "r" ? 1 : 0);
    design::Design dsn;
    dsn.points = table.values.leftCols(d);
    if (table.header.back() == "r") {
        for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
            dsn.replicates.push_back(static_cast<int>(table.values(i, d)));
        }
    } else {
        dsn.replicates.assign(static_cast<std::size_t>(table.values.rows()), 1);
    }
    const Eigen::MatrixXd X = design::expand_replicates(dsn);
    const sim::SimulationBatch batch =
        dispatch_simulator(simulator, config, X, workdir, config.diagnostics.exec);

    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < batch.inputs.cols(); ++j) {
        header.push_back("x" + std::to_string(j + 1));
    }
    header.push_back("y");
    Eigen::MatrixXd runs(batch.inputs.rows(), batch.inputs.cols() + 1);
    runs.leftCols(batch.inputs.cols()) = batch.inputs;
    runs.col(batch.inputs.cols()) = batch.outputs;
    csv::write_csv(out, header, runs);
    std::cout << "wrote " << out << " (" << runs.rows() << " runs, "
              << batch.provenance << ")\n";
    return 0;
}

int run_fit(const GlobalOptions& options, const std::string& runs_path,
            const std::string& out) {
    pipeline::RunConfig config = resolve_config(options);
    const data::ReplicatedDataset dataset =
        data::ingest_runs(runs_path, config.grouping_tolerance);
    const auto [X_raw, y] = dataset.expanded();
    const Eigen::MatrixXd X = to_unit_cube(config, X_raw);
    const RngStream rng = RngStream(config.seed, 0).substream(pipeline::stream_key::kFit);
    gp::Model model = config.emulator_kind == "hom"
                          ? gp::Model(gp::fit_homgp(X, y, config.fit, rng))
                          : gp::Model(gp::fit_hetgp(X, y, config.fit, rng));
    gp::save_model(out, model);
    const bool converged = std::visit(
        [](const auto& m) { return m.fit_converged(); }, model);
    std::cout << "wrote " << out << " (" << config.emulator_kind << " emulator, "
              << dataset.n_locations() << " unique locations"
              << (converged ? "" : ", fit did not fully converge") << ")\n";
    return 0;
}

int run_validate(const GlobalOptions& options, const std::string& model_path,
                 const std::string& runs_path, const std::string& out) {
    pipeline::RunConfig config = resolve_config(options);
    const gp::Model model = gp::load_model(model_path);
    data::ReplicatedDataset validation =
        data::ingest_runs(runs_path, config.grouping_tolerance);
    validation.locations = to_unit_cube(config, validation.locations);
    const RngStream rng =
        RngStream(config.seed, 0).substream(pipeline::stream_key::kDiagnostics);
    const diag::DiagnosticReport report =
        diag::run_all(model, validation, config.tolerance, config.diagnostics, rng);
    diag::save_report(out, report);
    std::cout << "wrote " << out << "\n" << diag::render_summary(report);
    if (options.plots) {
        for (const auto& f : pipeline::write_report_plots(report, options.out_dir)) {
            std::cout << "wrote " << f << "\n";
        }
    }
    return 0;
}

int run_report(const GlobalOptions& options, const std::string& report_path) {
    const diag::DiagnosticReport report = diag::load_report(report_path);
    std::cout << diag::render_summary(report);
    for (const auto& f : pipeline::write_report_plots(report, options.out_dir)) {
        std::cout << "wrote " << f << "\n";
    }
    return 0;
}

int run_reproduce(const GlobalOptions& options) {
    pipeline::RunConfig config = resolve_config(options);
    pipeline::reproduce_paper(config, options.out_dir, true);
    for (const auto& spec : pipeline::paper_experiments()) {
        std::cout << "experiment " << spec.name << ": " << options.out_dir << "/"
                  << spec.name << "/report.json\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic-emulator validation diagnostics"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    GlobalOptions options;
    app.add_option("--config", options.config_path, "JSON config file");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "master seed override");
    app.add_option("--out-dir", options.out_dir, "output directory for plots/artifacts");
    app.add_flag("--plots", options.plots, "emit SVG plots where applicable");

    auto* design_cmd = app.add_subcommand("design", "generate a maximin LHS design CSV");
    std::string design_out = "design.csv";
    int design_n = 0, design_r = 0;
    design_cmd->add_option("--out", design_out, "output CSV path");
    design_cmd->add_option("--n", design_n, "number of unique locations");
    design_cmd->add_option("--replicates", design_r, "replicates per location");

    auto* simulate_cmd = app.add_subcommand("simulate", "run a simulator over a design");
    std::string sim_design, sim_out = "runs.csv", sim_id = "toy-normal", sim_workdir = ".";
    simulate_cmd->add_option("--design", sim_design, "design CSV (x1..xd[,r])")->required();
    simulate_cmd->add_option("--simulator", sim_id,
                             "toy-normal | toy-gamma | table:<path> | exec:<cmd>");
    simulate_cmd->add_option("--out", sim_out, "output runs CSV");
    simulate_cmd->add_option("--workdir", sim_workdir, "working dir for exec adapters");

    auto* fit_cmd = app.add_subcommand("fit", "fit a GP emulator to run data");
    std::string fit_runs, fit_out = "model.json";
    fit_cmd->add_option("--runs", fit_runs, "training runs CSV")->required();
    fit_cmd->add_option("--out", fit_out, "output model file");

    auto* validate_cmd = app.add_subcommand("validate", "run diagnostics on a model");
    std::string val_model, val_runs, val_out = "report.json";
    validate_cmd->add_option("--model", val_model, "model file")->required();
    validate_cmd->add_option("--runs", val_runs, "replicated validation runs CSV")->required();
    validate_cmd->add_option("--out", val_out, "output report file");

    auto* report_cmd = app.add_subcommand("report", "summarize a report and emit plots");
    std::string report_path;
    report_cmd->add_option("--report", report_path, "report file")->required();

    auto* reproduce_cmd =
        app.add_subcommand("reproduce-paper", "run the three toy studies end to end");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*seed_opt) options.seed = seed_value;

    try {
        if (*design_cmd) return run_design(options, design_out, design_n, design_r);
        if (*simulate_cmd)
            return run_simulate(options, sim_design, sim_id, sim_out, sim_workdir);
        if (*fit_cmd) return run_fit(options, fit_runs, fit_out);
        if (*validate_cmd) return run_validate(options, val_model, val_runs, val_out);
        if (*report_cmd) return run_report(options, report_path);
        if (*reproduce_cmd) return run_reproduce(options);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
