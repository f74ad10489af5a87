#include "scop/results_io.hpp"

#include "scop/csv.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace scop {

namespace {

using json = nlohmann::ordered_json;

std::string real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

std::string real(const std::optional<double>& v) { return v ? real(*v) : std::string(); }

std::string_view acp_mode_name(AcpMode mode) { return mode == AcpMode::Exact ? "exact" : "selected-size"; }

AcpMode parse_acp_mode(std::string_view name) {
    if (name == "exact") return AcpMode::Exact;
    if (name == "selected-size") return AcpMode::SelectedSize;
    throw DataError("unknown acp_mode '" + std::string(name) + "'");
}

json number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

double to_real(const json& j) {
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        throw DataError("bad real '" + s + "'");
    }
    return j.get<double>();
}

std::optional<double> to_opt_real(const json& j) {
    if (j.is_null()) return std::nullopt;
    return to_real(j);
}

json config_json(const ExperimentConfig& c) {
    json j;
    j["scenario"] = c.scenario ? json(std::string(scenario_name(*c.scenario))) : json(nullptr);
    j["fixed_beta"] = c.fixed_beta;
    j["beta_scale"] = c.beta_scale;
    j["n_train"] = c.n_train;
    j["n_cal"] = c.n_cal;
    j["m"] = c.m;
    j["alpha"] = c.alpha;
    j["rule"] = to_string(c.rule);
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(std::string(method_name(m)));
    j["methods"] = methods;
    j["score_kind"] = std::string(score_kind_name(c.score_kind));
    j["acp_mode"] = std::string(acp_mode_name(c.acp_mode));
    j["reps"] = c.reps;
    j["master_seed"] = c.master_seed;
    return j;
}

ExperimentConfig config_from(const json& j) {
    ExperimentConfig c;
    c.scenario = j.at("scenario").is_null() ? std::nullopt
                                             : std::optional(parse_scenario(j.at("scenario").get<std::string>()));
    c.fixed_beta = j.at("fixed_beta").get<bool>();
    c.beta_scale = j.at("beta_scale").get<double>();
    c.n_train = j.at("n_train").get<std::size_t>();
    c.n_cal = j.at("n_cal").get<std::size_t>();
    c.m = j.at("m").get<std::size_t>();
    c.alpha = j.at("alpha").get<double>();
    c.rule = parse_rule(j.at("rule").get<std::string>());
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    c.score_kind = parse_score_kind(j.at("score_kind").get<std::string>());
    c.acp_mode = parse_acp_mode(j.at("acp_mode").get<std::string>());
    c.reps = j.at("reps").get<std::size_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    return c;
}

json summary_json(const MethodSummary& s) {
    json j;
    j["method"] = std::string(method_name(s.method));
    j["fcr"] = s.fcr;
    j["fcr_se"] = number(s.fcr_se);
    j["mean_length"] = number(s.mean_length);
    j["infinite_rep_count"] = s.infinite_rep_count;
    j["mean_selected"] = s.mean_selected;
    j["reps"] = s.reps;
    j["length_reps"] = s.length_reps;
    return j;
}

MethodSummary summary_from(const json& j) {
    MethodSummary s;
    s.method = parse_method(j.at("method").get<std::string>());
    s.fcr = j.at("fcr").get<double>();
    s.fcr_se = to_opt_real(j.at("fcr_se"));
    s.mean_length = to_opt_real(j.at("mean_length"));
    s.infinite_rep_count = j.at("infinite_rep_count").get<std::size_t>();
    s.mean_selected = j.at("mean_selected").get<double>();
    s.reps = j.at("reps").get<std::size_t>();
    s.length_reps = j.at("length_reps").get<std::size_t>();
    return s;
}

json rep_json(const RepRecord& r) {
    json j;
    j["rep"] = r.rep;
    j["seed"] = r.seed;
    j["failed"] = r.failed;
    j["failure"] = r.failure;
    j["n_selected"] = r.n_selected;
    j["n_cal_selected"] = r.n_cal_selected;
    j["n_cal_plus"] = r.n_cal_plus;
    j["tau_hat"] = number(r.tau_hat);
    j["kappa_hat"] = r.kappa_hat ? json(*r.kappa_hat) : json(nullptr);
    j["selection_fdp"] = number(r.selection_fdp);
    j["degenerate_split"] = r.degenerate_split;
    j["ols_regularized"] = r.ols_regularized;
    j["quantile_converged"] = r.quantile_converged;
    json methods = json::array();
    for (const auto& m : r.methods) {
        json mj;
        mj["method"] = std::string(method_name(m.method));
        mj["fcp"] = m.fcp;
        mj["avg_length"] = number(m.avg_length);
        mj["n_selected"] = m.n_selected;
        mj["infinite"] = m.infinite;
        methods.push_back(std::move(mj));
    }
    j["methods"] = std::move(methods);
    return j;
}

RepRecord rep_from(const json& j) {
    RepRecord r;
    r.rep = j.at("rep").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.failed = j.at("failed").get<bool>();
    r.failure = j.at("failure").get<std::string>();
    r.n_selected = j.at("n_selected").get<std::size_t>();
    r.n_cal_selected = j.at("n_cal_selected").get<std::size_t>();
    r.n_cal_plus = j.at("n_cal_plus").get<std::size_t>();
    r.tau_hat = to_real(j.at("tau_hat"));
    if (!j.at("kappa_hat").is_null()) r.kappa_hat = j.at("kappa_hat").get<std::size_t>();
    r.selection_fdp = to_opt_real(j.at("selection_fdp"));
    r.degenerate_split = j.at("degenerate_split").get<bool>();
    r.ols_regularized = j.at("ols_regularized").get<bool>();
    r.quantile_converged = j.at("quantile_converged").get<bool>();
    for (const auto& mj : j.at("methods")) {
        MethodRecord m;
        m.method = parse_method(mj.at("method").get<std::string>());
        m.fcp = mj.at("fcp").get<double>();
        m.avg_length = to_opt_real(mj.at("avg_length"));
        m.n_selected = mj.at("n_selected").get<std::size_t>();
        m.infinite = mj.at("infinite").get<bool>();
        r.methods.push_back(m);
    }
    return r;
}

json result_body(const ExperimentResult& result, json j = json::object()) {
    j["config"] = config_json(result.config);
    j["failed_reps"] = result.failed_reps;
    j["selection_fdr"] = number(result.selection_fdr);
    json summaries = json::array();
    for (const auto& s : result.summaries) summaries.push_back(summary_json(s));
    j["summaries"] = std::move(summaries);
    json reps = json::array();
    for (const auto& r : result.reps) reps.push_back(rep_json(r));
    j["reps"] = std::move(reps);
    return j;
}

ExperimentResult result_from(const json& j) {
    ExperimentResult result;
    result.config = config_from(j.at("config"));
    result.failed_reps = j.at("failed_reps").get<std::size_t>();
    result.selection_fdr = to_opt_real(j.at("selection_fdr"));
    for (const auto& s : j.at("summaries")) result.summaries.push_back(summary_from(s));
    for (const auto& r : j.at("reps")) result.reps.push_back(rep_from(r));
    return result;
}

void csv_rows(std::ostream& out, const ExperimentResult& result, const std::string& prefix) {
    for (const auto& r : result.reps) {
        if (r.failed) continue;
        for (const auto& m : r.methods) {
            out << prefix << r.rep << ',' << method_name(m.method) << ',' << real(m.fcp) << ','
                << real(m.avg_length) << ',' << m.n_selected << ',' << (m.infinite ? 1 : 0) << '\n';
        }
    }
}

void csv_summary(std::ostream& out, const ExperimentResult& result, const std::string& prefix) {
    for (const auto& s : result.summaries) {
        out << prefix << method_name(s.method) << ',' << real(s.fcr) << ',' << real(s.fcr_se) << ','
            << real(s.mean_length) << ',' << s.infinite_rep_count << ',' << real(s.mean_selected) << ','
            << s.reps << '\n';
    }
}

template <class Writer>
void write_to(const std::filesystem::path& path, Writer writer) {
    if (path == "-") {
        writer(std::cout);
        std::cout.flush();
        if (!std::cout) throw std::runtime_error("write failed: <stdout>");
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    writer(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace

Format parse_format(std::string_view name) {
    if (name == "csv") return Format::Csv;
    if (name == "json") return Format::Json;
    throw std::invalid_argument("unknown format '" + std::string(name) + "' (expected csv or json)");
}

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
    out << "rep,method,fcp,avg_length,n_selected,infinite_flag\n";
    csv_rows(out, result, "");
    out << "\nmethod,fcr,fcr_se,mean_length,infinite_reps,mean_selected,reps\n";
    csv_summary(out, result, "");
}

void write_sweep_csv(std::ostream& out, std::span<const ExperimentResult> results) {
    out << "point,rep,method,fcp,avg_length,n_selected,infinite_flag\n";
    for (std::size_t g = 0; g < results.size(); ++g) csv_rows(out, results[g], std::to_string(g) + ",");
    out << "\npoint,method,fcr,fcr_se,mean_length,infinite_reps,mean_selected,reps\n";
    for (std::size_t g = 0; g < results.size(); ++g) csv_summary(out, results[g], std::to_string(g) + ",");
}

std::string results_json(const ExperimentResult& result) {
    json head;
    head["version"] = std::string(version());
    return result_body(result, std::move(head)).dump(2) + "\n";
}

std::string sweep_json(std::span<const ExperimentResult> results) {
    json j;
    j["version"] = std::string(version());
    json points = json::array();
    for (const auto& r : results) points.push_back(result_body(r));
    j["points"] = std::move(points);
    return j.dump(2) + "\n";
}

ExperimentResult parse_results_json(std::string_view text) {
    try {
        return result_from(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed results JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("malformed results JSON: ") + e.what());
    }
}

void write_results(const std::filesystem::path& path, const ExperimentResult& result, Format format) {
    write_to(path, [&](std::ostream& out) {
        if (format == Format::Csv) {
            write_results_csv(out, result);
        } else {
            out << results_json(result);
        }
    });
}

void write_sweep(const std::filesystem::path& path, std::span<const ExperimentResult> results, Format format) {
    write_to(path, [&](std::ostream& out) {
        if (format == Format::Csv) {
            write_sweep_csv(out, results);
        } else {
            out << sweep_json(results);
        }
    });
}

std::string format_summary_table(const ExperimentResult& result) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %9s %8s %10s %9s %9s\n", "method", "FCR(%)", "se(%)", "length",
                  "inf reps", "selected");
    out << line;
    for (const auto& s : result.summaries) {
        const std::string se = s.fcr_se ? [&] {
            char b[32];
            std::snprintf(b, sizeof b, "%.2f", 100.0 * *s.fcr_se);
            return std::string(b);
        }()
                                       : std::string("-");
        const std::string len = s.mean_length ? [&] {
            char b[32];
            std::snprintf(b, sizeof b, "%.3f", *s.mean_length);
            return std::string(b);
        }()
                                              : std::string("-");
        const std::string name(method_name(s.method));
        std::snprintf(line, sizeof line, "%-8s %9.2f %8s %10s %9zu %9.2f\n", name.c_str(), 100.0 * s.fcr,
                      se.c_str(), len.c_str(), s.infinite_rep_count, s.mean_selected);
        out << line;
    }
    if (result.selection_fdr) {
        std::snprintf(line, sizeof line, "selection FDR: %.2f%%\n", 100.0 * *result.selection_fdr);
        out << line;
    }
    if (result.failed_reps > 0) out << "failed repetitions: " << result.failed_reps << "\n";
    return out.str();
}

} // namespace scop
