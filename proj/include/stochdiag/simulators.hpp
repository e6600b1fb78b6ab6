#pragma once

#include <Eigen/Dense>
#include <string>

#include "stochdiag/parallel.hpp"
#include "stochdiag/rng.hpp"

namespace stochdiag::sim {

// Shared trend of both toy simulators.
double toy_trend(double x);

// One draw of y = trend(x) + N(0, (0.1 + 0.9x)^2), x in [0,1].
double toy_normal_run(double x, RngStream& rng);

// One draw of y = trend(x) + Gamma(shape 1, rate 1), added un-centered, so
// the simulator mean sits one above the trend.
double toy_gamma_run(double x, RngStream& rng);

struct SimulationBatch {
    Eigen::MatrixXd inputs;   // one row per run, replicates as repeated rows
    Eigen::VectorXd outputs;  // aligned row-for-row with inputs
    std::string provenance;   // simulator id + seed
};

enum class ToyFamily { NormalHeteroscedastic, Gamma };

// Evaluates the toy simulator over all rows. Row i draws from
// rng.substream(i), so the batch is reproducible and identical for the
// serial and parallel paths.
SimulationBatch run_toy_batch(ToyFamily family, const Eigen::MatrixXd& inputs,
                              const RngStream& rng, Exec exec = Exec::Parallel);

// Precomputed-run-table adapter: each input row consumes the next unused
// table row whose inputs match exactly. Throws DataError naming the first
// input row with no remaining match.
SimulationBatch run_table_adapter(const std::string& table_path,
                                  const Eigen::MatrixXd& inputs);

// Subprocess adapter. Writes <workdir>/inputs.csv (header x1..xd), runs
// `command` with the shell in that directory, then reads
// <workdir>/outputs.csv (single column y). Throws DataError on a nonzero
// exit status or a row-count mismatch.
SimulationBatch run_subprocess_adapter(const std::string& command,
                                       const std::string& workdir,
                                       const Eigen::MatrixXd& inputs);

}  // namespace stochdiag::sim
