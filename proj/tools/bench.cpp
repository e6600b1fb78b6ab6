// Times the OpenMP kernels against their serial reference implementations and
// checks that both paths produce identical results.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "stochdiag/dataset.hpp"
#include "stochdiag/design.hpp"
#include "stochdiag/diagnostics.hpp"
#include "stochdiag/gp.hpp"
#include "stochdiag/parallel.hpp"
#include "stochdiag/simulators.hpp"

using namespace stochdiag;

namespace {

double time_ms(const std::function<void()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count();
}

void report_row(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-28s %10.1f ms %10.1f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, identical ? "identical" : "MISMATCH");
}

bool reports_equal(const diag::DiagnosticReport& a, const diag::DiagnosticReport& b) {
    auto lists_equal = [](const std::vector<diag::UnexpectednessResult>& x,
                          const std::vector<diag::UnexpectednessResult>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].location != y[i].location || x[i].u != y[i].u) return false;
        }
        return true;
    };
    return lists_equal(a.mean_u, b.mean_u) && lists_equal(a.variance_u, b.variance_u) &&
           lists_equal(a.skewness_u, b.skewness_u) &&
           lists_equal(a.kurtosis_u, b.kurtosis_u);
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", max_threads());
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    {
        design::Design serial_design, parallel_design;
        const RngStream rng(7, 0);
        const double t_serial = time_ms([&] {
            serial_design = design::maximin_lhs(40, 3, rng, 4000, 1, Exec::Serial);
        });
        const double t_parallel = time_ms([&] {
            parallel_design = design::maximin_lhs(40, 3, rng, 4000, 1, Exec::Parallel);
        });
        report_row("maximin_lhs (4000 restarts)", t_serial, t_parallel,
                   serial_design.points == parallel_design.points);
    }

    Eigen::MatrixXd inputs(400000, 1);
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        inputs(i, 0) = static_cast<double>(i % 1000) / 1000.0;
    }
    sim::SimulationBatch serial_batch, parallel_batch;
    {
        const RngStream rng(11, 0);
        const double t_serial = time_ms([&] {
            serial_batch = sim::run_toy_batch(sim::ToyFamily::NormalHeteroscedastic,
                                              inputs, rng, Exec::Serial);
        });
        const double t_parallel = time_ms([&] {
            parallel_batch = sim::run_toy_batch(sim::ToyFamily::NormalHeteroscedastic,
                                                inputs, rng, Exec::Parallel);
        });
        report_row("toy batch (400000 runs)", t_serial, t_parallel,
                   serial_batch.outputs == parallel_batch.outputs);
    }

    {
        // Synthetic validation set with a known predictive law; the per
        // (location, kind) tasks are the diagnostics hot loop.
        const int n_loc = 40;
        const int r = 5;
        RngStream data_rng(13, 0);
        Eigen::MatrixXd X(n_loc * r, 1);
        Eigen::VectorXd y(n_loc * r);
        std::vector<gp::PointPrediction> preds;
        for (int i = 0; i < n_loc; ++i) {
            const double x = (i + 0.5) / n_loc;
            gp::PointPrediction p;
            p.mean = sim::toy_trend(x);
            p.mean_variance = 0.01;
            p.intrinsic_variance = 0.25;
            preds.push_back(p);
            for (int k = 0; k < r; ++k) {
                X(i * r + k, 0) = x;
                y[i * r + k] = p.mean + 0.5 * data_rng.normal();
            }
        }
        const data::ReplicatedDataset validation = data::group_runs(X, y);
        diag::DiagnosticsConfig config;
        config.n_mc_mean = 20000;
        config.n_mc_variance = 20000;
        config.n_mc_normality = 20000;
        const RngStream rng(17, 0);
        diag::DiagnosticReport serial_report, parallel_report;
        config.exec = Exec::Serial;
        const double t_serial = time_ms([&] {
            serial_report = diag::run_all_with_predictions(
                preds, std::nullopt, validation, diag::ToleranceSpec{}, config, rng);
        });
        config.exec = Exec::Parallel;
        const double t_parallel = time_ms([&] {
            parallel_report = diag::run_all_with_predictions(
                preds, std::nullopt, validation, diag::ToleranceSpec{}, config, rng);
        });
        report_row("diagnostics (40 x 4 tasks)", t_serial, t_parallel,
                   reports_equal(serial_report, parallel_report));
    }
    return 0;
}
