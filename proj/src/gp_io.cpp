#include <fstream>

#include <json.hpp>

#include "stochdiag/errors.hpp"
#include "stochdiag/gp.hpp"

namespace stochdiag::gp {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto n = static_cast<Eigen::Index>(j.size());
    const auto d = n > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < d; ++c) {
            m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

json covariance_to_json(const CovarianceSpec& cov) {
    return json{{"lengthscales", vector_to_json(cov.lengthscales)},
                {"signal_variance", cov.signal_variance}};
}

CovarianceSpec covariance_from_json(const json& j) {
    CovarianceSpec cov;
    cov.lengthscales = vector_from_json(j.at("lengthscales"));
    cov.signal_variance = j.at("signal_variance").get<double>();
    return cov;
}

json mean_to_json(const MeanSpec& mean) {
    return json{{"form", mean.form == MeanSpec::Form::Zero ? "zero" : "constant"},
                {"value", mean.value}};
}

MeanSpec mean_from_json(const json& j) {
    MeanSpec mean;
    const std::string form = j.at("form").get<std::string>();
    if (form == "zero") {
        mean.form = MeanSpec::Form::Zero;
    } else if (form == "constant") {
        mean.form = MeanSpec::Form::Constant;
    } else {
        throw DataError("model file: unknown mean form '" + form + "'");
    }
    mean.value = j.at("value").get<double>();
    return mean;
}

}  // namespace

// Private-member access for serialization; declared as a friend in gp.hpp.
struct ModelIO {
    static json to_json(const FittedHomGP& m) {
        json j;
        j["format"] = "stochdiag-model";
        j["version"] = 1;
        j["kind"] = "homgp";
        j["mean"] = mean_to_json(m.mean_);
        j["standardization"] = {{"y_mean", m.y_mean_}, {"y_sd", m.y_sd_}};
        // Hyperparameters are stored on the standardized-output scale,
        // matching the internal representation.
        j["covariance"] = covariance_to_json(m.core_.cov);
        j["nugget"] = m.core_.noise[0];
        j["prior_mean"] = m.core_.prior_mean;
        j["inputs"] = matrix_to_json(m.core_.X);
        j["outputs"] = vector_to_json(m.y_raw_);
        j["fit_converged"] = m.converged_;
        return j;
    }

    static FittedHomGP homgp_from_json(const json& j) {
        FittedHomGP m;
        m.mean_ = mean_from_json(j.at("mean"));
        m.y_mean_ = j.at("standardization").at("y_mean").get<double>();
        m.y_sd_ = j.at("standardization").at("y_sd").get<double>();
        m.y_raw_ = vector_from_json(j.at("outputs"));
        m.converged_ = j.at("fit_converged").get<bool>();
        m.core_.X = matrix_from_json(j.at("inputs"));
        m.core_.targets = ((m.y_raw_.array() - m.y_mean_) / m.y_sd_).matrix();
        m.core_.prior_mean = j.at("prior_mean").get<double>();
        m.core_.cov = covariance_from_json(j.at("covariance"));
        m.core_.noise = Eigen::VectorXd::Constant(m.core_.X.rows(),
                                                  j.at("nugget").get<double>());
        m.core_.factorize();
        return m;
    }

    static json to_json(const FittedHetGP& m) {
        json j;
        j["format"] = "stochdiag-model";
        j["version"] = 1;
        j["kind"] = "hetgp";
        j["mean"] = mean_to_json(m.mean_);
        j["standardization"] = {{"y_mean", m.y_mean_}, {"y_sd", m.y_sd_}};
        j["unique_inputs"] = matrix_to_json(m.mean_core_.X);
        j["replicate_counts"] = m.replicate_counts_;
        j["replicate_means"] = vector_to_json(m.replicate_means_raw_);
        j["mean_process"] = {{"covariance", covariance_to_json(m.mean_core_.cov)},
                             {"prior_mean", m.mean_core_.prior_mean},
                             {"noise_variances", vector_to_json(m.mean_core_.noise)}};
        j["variance_process"] = {{"covariance", covariance_to_json(m.var_core_.cov)},
                                 {"prior_mean", m.var_core_.prior_mean},
                                 {"noise_variances", vector_to_json(m.var_core_.noise)},
                                 {"log_variance_targets", vector_to_json(m.var_core_.targets)}};
        j["iterations"] = m.iterations_;
        j["fit_converged"] = m.converged_;
        return j;
    }

    static FittedHetGP hetgp_from_json(const json& j) {
        FittedHetGP m;
        m.mean_ = mean_from_json(j.at("mean"));
        m.y_mean_ = j.at("standardization").at("y_mean").get<double>();
        m.y_sd_ = j.at("standardization").at("y_sd").get<double>();
        m.replicate_counts_ = j.at("replicate_counts").get<std::vector<int>>();
        m.replicate_means_raw_ = vector_from_json(j.at("replicate_means"));
        m.iterations_ = j.at("iterations").get<int>();
        m.converged_ = j.at("fit_converged").get<bool>();

        m.mean_core_.X = matrix_from_json(j.at("unique_inputs"));
        m.mean_core_.targets =
            ((m.replicate_means_raw_.array() - m.y_mean_) / m.y_sd_).matrix();
        m.mean_core_.prior_mean = j.at("mean_process").at("prior_mean").get<double>();
        m.mean_core_.cov = covariance_from_json(j.at("mean_process").at("covariance"));
        m.mean_core_.noise = vector_from_json(j.at("mean_process").at("noise_variances"));
        m.mean_core_.factorize();

        m.var_core_.X = m.mean_core_.X;
        m.var_core_.targets = vector_from_json(j.at("variance_process").at("log_variance_targets"));
        m.var_core_.prior_mean = j.at("variance_process").at("prior_mean").get<double>();
        m.var_core_.cov = covariance_from_json(j.at("variance_process").at("covariance"));
        m.var_core_.noise = vector_from_json(j.at("variance_process").at("noise_variances"));
        m.var_core_.factorize();
        return m;
    }
};

void save_model(const std::string& path, const Model& model) {
    const json j = std::visit([](const auto& m) { return ModelIO::to_json(m); }, model);
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open model file for writing: " + path);
    }
    out << j.dump(2) << "\n";
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open model file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("model file is not valid JSON: " + std::string(e.what()));
    }
    if (j.value("format", "") != "stochdiag-model") {
        throw DataError("not a stochdiag model file: " + path);
    }
    if (j.value("version", 0) != 1) {
        throw DataError("unsupported model file version in " + path);
    }
    const std::string kind = j.value("kind", "");
    if (kind == "homgp") return ModelIO::homgp_from_json(j);
    if (kind == "hetgp") return ModelIO::hetgp_from_json(j);
    throw DataError("unknown model kind '" + kind + "' in " + path);
}

}  // namespace stochdiag::gp
