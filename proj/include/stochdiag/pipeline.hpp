#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stochdiag/diagnostics.hpp"
#include "stochdiag/gp.hpp"
#include "stochdiag/simulators.hpp"

namespace stochdiag::pipeline {

// Substream keys for the pipeline stages, so every stage draws from its own
// reproducible stream.
namespace stream_key {
inline constexpr std::uint64_t kTrainDesign = 1;
inline constexpr std::uint64_t kValidationDesign = 2;
inline constexpr std::uint64_t kTrainSimulate = 3;
inline constexpr std::uint64_t kValidationSimulate = 4;
inline constexpr std::uint64_t kFit = 5;
inline constexpr std::uint64_t kDiagnostics = 6;
}  // namespace stream_key

struct RunConfig {
    std::uint64_t seed = 2;  // published default; reports echo it
    int dimension = 1;
    Eigen::VectorXd lower;  // empty = unit cube
    Eigen::VectorXd upper;

    int train_locations = 20;
    int train_replicates = 20;
    int validation_locations_per_dim = 10;  // 10 per input dimension
    int validation_replicates = 4;          // enables all four diagnostics
    int lhs_restarts = 1000;

    std::string emulator_kind = "het";  // "hom" or "het"
    gp::FitConfig fit;

    diag::ToleranceSpec tolerance;
    diag::DiagnosticsConfig diagnostics;
    double grouping_tolerance = 0.0;

    int validation_locations() const {
        return validation_locations_per_dim * dimension;
    }
    bool has_bounds() const { return lower.size() > 0; }
    void validate() const;
};

// JSON config file; every key is optional and falls back to the defaults
// above. Round-trips losslessly.
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& config);
RunConfig default_config();

// One U-scatter SVG per (diagnostic family, input coordinate) with guide
// lines at 0 and +-0.95/+-0.995 and |U| > 0.995 points annotated with their
// value, plus a QQ plot and a coverage plot. Returns the files written.
std::vector<std::string> write_report_plots(const diag::DiagnosticReport& report,
                                            const std::string& out_dir);

// Runs one full experiment (design -> simulate -> fit -> validate -> report)
// into out_dir. Used by `reproduce-paper` three times; exposed for tests.
struct ExperimentSpec {
    std::string name;
    sim::ToyFamily family = sim::ToyFamily::NormalHeteroscedastic;
    int train_locations = 20;
    int train_replicates = 20;
    int validation_locations = 10;
    int validation_replicates = 5;
    std::uint64_t stream = 0;
};

struct ExperimentResult {
    diag::DiagnosticReport report;
    std::vector<std::string> files;
};

ExperimentResult run_experiment(const RunConfig& config, const ExperimentSpec& spec,
                                const std::string& out_dir, bool plots);

// The three toy studies: a well-trained emulator, a small-data emulator, and
// the gamma-noise simulator that breaks the normality assumption.
std::vector<ExperimentSpec> paper_experiments();
void reproduce_paper(const RunConfig& config, const std::string& out_dir, bool plots);

}  // namespace stochdiag::pipeline
