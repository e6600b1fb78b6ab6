#include "stochdiag/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stochdiag/errors.hpp"

namespace stochdiag::diag {

namespace {

using nlohmann::json;

json tolerance_to_json(const ToleranceSpec& tol) {
    json j;
    if (tol.sd_multipliers) {
        j["sd_multipliers"] = {tol.sd_multipliers->first, tol.sd_multipliers->second};
    } else {
        j["sd_multipliers"] = nullptr;
    }
    j["skew_half_width"] = tol.skew_half_width ? json(*tol.skew_half_width) : json(nullptr);
    j["kurt_half_width"] = tol.kurt_half_width ? json(*tol.kurt_half_width) : json(nullptr);
    j["shape"] = tol.shape == ToleranceSpec::Shape::Uniform ? "uniform" : "triangular";
    return j;
}

ToleranceSpec tolerance_from_json(const json& j) {
    ToleranceSpec tol = ToleranceSpec::none();
    if (!j.at("sd_multipliers").is_null()) {
        tol.sd_multipliers = {j.at("sd_multipliers")[0].get<double>(),
                              j.at("sd_multipliers")[1].get<double>()};
    }
    if (!j.at("skew_half_width").is_null()) {
        tol.skew_half_width = j.at("skew_half_width").get<double>();
    }
    if (!j.at("kurt_half_width").is_null()) {
        tol.kurt_half_width = j.at("kurt_half_width").get<double>();
    }
    tol.shape = j.at("shape").get<std::string>() == "triangular"
                    ? ToleranceSpec::Shape::Triangular
                    : ToleranceSpec::Shape::Uniform;
    return tol;
}

json results_to_json(const std::vector<UnexpectednessResult>& results) {
    json out = json::array();
    for (const auto& r : results) {
        out.push_back({{"location", r.location},
                       {"u", r.u},
                       {"flag095", r.flag095},
                       {"flag0995", r.flag0995},
                       {"mc_draws", r.mc_draws_used}});
    }
    return out;
}

std::vector<UnexpectednessResult> results_from_json(const json& j, DiagnosticKind kind) {
    std::vector<UnexpectednessResult> out;
    for (const auto& e : j) {
        UnexpectednessResult r;
        r.location = e.at("location").get<int>();
        r.kind = kind;
        r.u = e.at("u").get<double>();
        r.flag095 = e.at("flag095").get<bool>();
        r.flag0995 = e.at("flag0995").get<bool>();
        r.mc_draws_used = e.at("mc_draws").get<long>();
        out.push_back(r);
    }
    return out;
}

json pairs_to_json(const std::vector<std::pair<double, double>>& pairs) {
    json out = json::array();
    for (const auto& [a, b] : pairs) out.push_back({a, b});
    return out;
}

std::vector<std::pair<double, double>> pairs_from_json(const json& j) {
    std::vector<std::pair<double, double>> out;
    for (const auto& e : j) out.emplace_back(e[0].get<double>(), e[1].get<double>());
    return out;
}

json summary_to_json(const SummaryCounts& s) {
    return json{{"n", s.n}, {"negative", s.negative}, {"flag095", s.flag095},
                {"flag0995", s.flag0995}};
}

SummaryCounts summary_from_json(const json& j) {
    SummaryCounts s;
    s.n = j.at("n").get<int>();
    s.negative = j.at("negative").get<int>();
    s.flag095 = j.at("flag095").get<int>();
    s.flag0995 = j.at("flag0995").get<int>();
    return s;
}

}  // namespace

void save_report(const std::string& path, const DiagnosticReport& report) {
    json j;
    j["format"] = "stochdiag-report";
    j["version"] = report.version;
    j["config"] = {{"seed", report.config.seed},
                   {"stream_id", report.config.stream_id},
                   {"tolerance", tolerance_to_json(report.config.tolerance)},
                   {"n_mc_mean", report.config.n_mc_mean},
                   {"n_mc_variance", report.config.n_mc_variance},
                   {"n_mc_normality", report.config.n_mc_normality},
                   {"include_mean_uncertainty", report.config.include_mean_uncertainty}};

    json locations = json::array();
    for (Eigen::Index i = 0; i < report.locations.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index d = 0; d < report.locations.cols(); ++d) {
            row.push_back(report.locations(i, d));
        }
        locations.push_back(std::move(row));
    }
    j["locations"] = std::move(locations);
    j["replicate_counts"] = report.replicate_counts;

    j["unexpectedness"] = {{"mean", results_to_json(report.mean_u)},
                           {"variance", results_to_json(report.variance_u)},
                           {"skewness", results_to_json(report.skewness_u)},
                           {"kurtosis", results_to_json(report.kurtosis_u)}};
    json skipped = json::array();
    for (const auto& [loc, message] : report.skipped) {
        skipped.push_back({{"location", loc}, {"message", message}});
    }
    j["skipped"] = std::move(skipped);

    j["deterministic"] = {{"standardized_errors", report.standardized_errs},
                          {"pivoted_errors", report.pivoted_errs},
                          {"pivot_order", report.pivot_order},
                          {"qq", pairs_to_json(report.qq)},
                          {"coverage", pairs_to_json(report.coverage)}};

    j["summary"] = {{"mean", summary_to_json(report.mean_summary)},
                    {"variance", summary_to_json(report.variance_summary)},
                    {"skewness", summary_to_json(report.skewness_summary)},
                    {"kurtosis", summary_to_json(report.kurtosis_summary)}};

    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open report file for writing: " + path);
    }
    out << j.dump(2) << "\n";
}

DiagnosticReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open report file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("report file is not valid JSON: " + std::string(e.what()));
    }
    if (j.value("format", "") != "stochdiag-report") {
        throw DataError("not a stochdiag report file: " + path);
    }
    if (j.value("version", 0) != 1) {
        throw DataError("unsupported report version in " + path);
    }
    DiagnosticReport report;
    report.version = j.at("version").get<int>();
    const auto& cfg = j.at("config");
    report.config.seed = cfg.at("seed").get<std::uint64_t>();
    report.config.stream_id = cfg.at("stream_id").get<std::uint64_t>();
    report.config.tolerance = tolerance_from_json(cfg.at("tolerance"));
    report.config.n_mc_mean = cfg.at("n_mc_mean").get<int>();
    report.config.n_mc_variance = cfg.at("n_mc_variance").get<int>();
    report.config.n_mc_normality = cfg.at("n_mc_normality").get<int>();
    report.config.include_mean_uncertainty = cfg.at("include_mean_uncertainty").get<bool>();

    const auto& locations = j.at("locations");
    const auto n = static_cast<Eigen::Index>(locations.size());
    const auto d = n > 0 ? static_cast<Eigen::Index>(locations[0].size()) : 0;
    report.locations.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < d; ++c) {
            report.locations(i, c) =
                locations[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
        }
    }
    report.replicate_counts = j.at("replicate_counts").get<std::vector<int>>();

    const auto& u = j.at("unexpectedness");
    report.mean_u = results_from_json(u.at("mean"), DiagnosticKind::Mean);
    report.variance_u = results_from_json(u.at("variance"), DiagnosticKind::Variance);
    report.skewness_u = results_from_json(u.at("skewness"), DiagnosticKind::Skewness);
    report.kurtosis_u = results_from_json(u.at("kurtosis"), DiagnosticKind::Kurtosis);
    for (const auto& e : j.at("skipped")) {
        report.skipped.emplace_back(e.at("location").get<int>(),
                                    e.at("message").get<std::string>());
    }

    const auto& det = j.at("deterministic");
    report.standardized_errs = det.at("standardized_errors").get<std::vector<double>>();
    report.pivoted_errs = det.at("pivoted_errors").get<std::vector<double>>();
    report.pivot_order = det.at("pivot_order").get<std::vector<int>>();
    report.qq = pairs_from_json(det.at("qq"));
    report.coverage = pairs_from_json(det.at("coverage"));

    const auto& summary = j.at("summary");
    report.mean_summary = summary_from_json(summary.at("mean"));
    report.variance_summary = summary_from_json(summary.at("variance"));
    report.skewness_summary = summary_from_json(summary.at("skewness"));
    report.kurtosis_summary = summary_from_json(summary.at("kurtosis"));
    return report;
}

namespace {

void render_family(std::ostringstream& out, const char* name,
                   const std::vector<UnexpectednessResult>& results,
                   const SummaryCounts& summary) {
    out << name << ": " << summary.n << " locations, " << summary.negative
        << " negative, " << summary.flag095 << " with |U| > 0.95, "
        << summary.flag0995 << " with |U| > 0.995\n";
    for (const auto& r : results) {
        if (r.flag0995) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "  location %d: U = %.4f\n", r.location, r.u);
            out << buf;
        }
    }
}

}  // namespace

std::string render_summary(const DiagnosticReport& report) {
    std::ostringstream out;
    out << "unexpectedness summary (flags at |U| > 0.95 and |U| > 0.995)\n";
    render_family(out, "mean", report.mean_u, report.mean_summary);
    render_family(out, "variance", report.variance_u, report.variance_summary);
    render_family(out, "skewness", report.skewness_u, report.skewness_summary);
    render_family(out, "kurtosis", report.kurtosis_u, report.kurtosis_summary);
    if (!report.skipped.empty()) {
        out << "skipped:\n";
        for (const auto& [loc, message] : report.skipped) {
            out << "  location " << loc << ": " << message << "\n";
        }
    }
    return out.str();
}

}  // namespace stochdiag::diag
