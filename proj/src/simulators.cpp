#include "stochdiag/simulators.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "stochdiag/csv.hpp"
#include "stochdiag/errors.hpp"

namespace stochdiag::sim {

namespace {

void require_unit_interval(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("toy simulator input must lie in [0,1]");
    }
}

}  // namespace

double toy_trend(double x) {
    return std::sin(16.0 * x) + std::cos(24.0 * x) + 8.0 * x;
}

double toy_normal_run(double x, RngStream& rng) {
    require_unit_interval(x);
    const double sd = 0.1 + 0.9 * x;
    return toy_trend(x) + sd * rng.normal();
}

double toy_gamma_run(double x, RngStream& rng) {
    require_unit_interval(x);
    return toy_trend(x) + rng.gamma(1.0);
}

SimulationBatch run_toy_batch(ToyFamily family, const Eigen::MatrixXd& inputs,
                              const RngStream& rng, Exec exec) {
    if (inputs.cols() != 1) {
        throw std::domain_error("toy simulators take a single input column");
    }
    SimulationBatch batch;
    batch.inputs = inputs;
    batch.outputs.resize(inputs.rows());
    batch.provenance =
        std::string(family == ToyFamily::Gamma ? "toy-gamma" : "toy-normal") +
        " seed=" + std::to_string(rng.seed()) +
        " stream=" + std::to_string(rng.stream_id());
    parallel_for(static_cast<std::size_t>(inputs.rows()), exec, [&](std::size_t i) {
        RngStream row_rng = rng.substream(i);
        const double x = inputs(static_cast<Eigen::Index>(i), 0);
        batch.outputs[static_cast<Eigen::Index>(i)] =
            family == ToyFamily::Gamma ? toy_gamma_run(x, row_rng)
                                       : toy_normal_run(x, row_rng);
    });
    return batch;
}

SimulationBatch run_table_adapter(const std::string& table_path,
                                  const Eigen::MatrixXd& inputs) {
    const csv::Table table = csv::read_numeric_csv(table_path);
    const Eigen::Index d = inputs.cols();
    if (table.values.cols() != d + 1) {
        throw DataError("run table must have d input columns plus one output column");
    }
    std::vector<bool> used(static_cast<std::size_t>(table.values.rows()), false);
    SimulationBatch batch;
    batch.inputs = inputs;
    batch.outputs.resize(inputs.rows());
    batch.provenance = "table:" + table_path;
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        bool found = false;
        for (Eigen::Index t = 0; t < table.values.rows(); ++t) {
            if (used[static_cast<std::size_t>(t)]) continue;
            if ((table.values.row(t).head(d).array() == inputs.row(i).array()).all()) {
                batch.outputs[i] = table.values(t, d);
                used[static_cast<std::size_t>(t)] = true;
                found = true;
                break;
            }
        }
        if (!found) {
            throw DataError("run table has no unused row matching input row " +
                            std::to_string(i));
        }
    }
    return batch;
}

SimulationBatch run_subprocess_adapter(const std::string& command,
                                       const std::string& workdir,
                                       const Eigen::MatrixXd& inputs) {
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
        header.push_back("x" + std::to_string(j + 1));
    }
    csv::write_csv(workdir + "/inputs.csv", header, inputs);

    const std::string shell_command = "cd '" + workdir + "' && " + command;
    const int status = std::system(shell_command.c_str());
    if (status != 0) {
        throw DataError("simulator command failed with status " +
                        std::to_string(status) + ": " + command);
    }

    const csv::Table out = csv::read_numeric_csv(workdir + "/outputs.csv");
    if (out.values.cols() != 1) {
        throw DataError("outputs.csv must contain a single column y");
    }
    if (out.values.rows() != inputs.rows()) {
        throw DataError("outputs.csv has " + std::to_string(out.values.rows()) +
                        " rows, expected " + std::to_string(inputs.rows()) +
                        "; first missing row " + std::to_string(out.values.rows()));
    }
    SimulationBatch batch;
    batch.inputs = inputs;
    batch.outputs = out.values.col(0);
    batch.provenance = "exec:" + command;
    return batch;
}

}  // namespace stochdiag::sim
