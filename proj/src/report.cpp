#include "ses/report.hpp"

#include <fstream>

#include "ses/errors.hpp"

namespace ses {

namespace {
constexpr int kReportSchemaVersion = 1;
}

nlohmann::json make_run_report(const SesOutput& out, const Dataset& ds, const RunMeta& meta) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "select";
    j["config"] = {{"alpha", out.threshold},
                   {"max_k", out.max_k},
                   {"test", out.test_name},
                   {"mmpc", meta.mmpc},
                   {"workers", meta.workers}};
    j["data"] = {{"path", meta.data_path},
                 {"target", meta.target_name},
                 {"n_rows", ds.n_rows()},
                 {"n_cols", ds.n_cols()}};
    j["columns"] = ds.names();

    nlohmann::json selected = nlohmann::json::array();
    for (std::size_t i = 0; i < out.selected_vars.size(); ++i) {
        int v = out.selected_vars[i];
        nlohmann::json queue_names = nlohmann::json::array();
        for (int q : out.queues[i]) queue_names.push_back(ds.name(q));
        selected.push_back({{"index", v},
                            {"name", ds.name(v)},
                            {"pvalue", out.pvalues[v]},
                            {"statistic", out.stats[v]},
                            {"queue", out.queues[i]},
                            {"queue_names", queue_names}});
    }
    j["selected"] = std::move(selected);
    j["selected_by_pvalue"] = out.selected_vars_by_pvalue;
    j["pvalues"] = out.pvalues;
    j["stats"] = out.stats;
    j["signature_count"] = out.signature_count;
    j["runtime_seconds"] = out.runtime_seconds;
    j["cache"] = {{"hits", meta.cache_hits}, {"misses", meta.cache_misses}};
    return j;
}

SesOutput parse_run_report(const nlohmann::json& j) {
    if (!j.is_object() || j.value("schema_version", -1) != kReportSchemaVersion)
        throw IngestError("report: missing or unsupported schema_version");
    SesOutput out;
    out.threshold = j.at("config").at("alpha").get<double>();
    out.max_k = j.at("config").at("max_k").get<int>();
    out.test_name = j.at("config").at("test").get<std::string>();
    for (const auto& s : j.at("selected")) {
        out.selected_vars.push_back(s.at("index").get<int>());
        out.queues.push_back(s.at("queue").get<std::vector<int>>());
    }
    out.selected_vars_by_pvalue = j.at("selected_by_pvalue").get<std::vector<int>>();
    out.pvalues = j.at("pvalues").get<std::vector<double>>();
    out.stats = j.at("stats").get<std::vector<double>>();
    out.signature_count = j.at("signature_count").get<std::uint64_t>();
    out.runtime_seconds = j.at("runtime_seconds").get<double>();
    return out;
}

nlohmann::json make_cv_report(const CvResult& cv, const CvConfig& cfg,
                              const std::string& test_name) {
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& cell : cv.per_config)
        grid.push_back({{"alpha", cell.alpha},
                        {"max_k", cell.max_k},
                        {"fold_scores", cell.fold_scores},
                        {"mean_score", cell.mean_score}});
    return nlohmann::json{
        {"schema_version", kReportSchemaVersion},
        {"command", "cv"},
        {"kfolds", cfg.kfolds},
        {"task", cfg.task == Task::Classification ? "C" : "R"},
        {"seed", cfg.seed},
        {"test", test_name},
        {"grid", std::move(grid)},
        {"best",
         {{"alpha", cv.best_alpha}, {"max_k", cv.best_max_k}, {"performance", cv.best_performance}}}};
}

nlohmann::json make_bench_report(const ProtocolResult& protocol, const SyntheticSpec& spec,
                                 const ProtocolGrid& grid, int reps, std::uint64_t seed) {
    nlohmann::json spec_j = {{"n_rows", spec.n_rows},
                             {"n_cols", spec.n_cols},
                             {"value_lo", spec.value_lo},
                             {"value_hi", spec.value_hi},
                             {"noise_lo", spec.noise_lo},
                             {"noise_hi", spec.noise_hi},
                             {"seed", spec.seed}};
    for (const auto& [var, coef] : spec.coefficients)
        spec_j["coefficients"][std::to_string(var)] = coef;
    for (const auto& [copy, source] : spec.duplicate_map)
        spec_j["duplicates"][std::to_string(copy)] = source;

    nlohmann::json rep_rows = nlohmann::json::array();
    for (const auto& rr : protocol.repetitions) {
        nlohmann::json row = {{"rep", rr.rep},
                              {"alpha", rr.chosen_alpha},
                              {"max_k", rr.chosen_max_k},
                              {"selected_count", rr.selected_count},
                              {"signature_count", rr.signature_count},
                              {"performances", rr.performances}};
        if (rr.cv_of_performances) row["cv_of_performances"] = *rr.cv_of_performances;
        else row["cv_of_performances"] = nullptr;
        rep_rows.push_back(std::move(row));
    }

    return nlohmann::json{
        {"schema_version", kReportSchemaVersion},
        {"command", "bench"},
        {"reps", reps},
        {"seed", seed},
        {"spec", std::move(spec_j)},
        {"grid",
         {{"alphas", grid.alphas}, {"max_ks", grid.max_ks}, {"kfolds", grid.kfolds}}},
        {"repetitions", std::move(rep_rows)},
        {"summary",
         {{"cv_quantiles",
           {{"q025", protocol.summary.cv_q025},
            {"median", protocol.summary.cv_median},
            {"q975", protocol.summary.cv_q975}}},
          {"defined_cv_count", protocol.summary.defined_cv_count},
          {"multiplicity_histogram", protocol.summary.multiplicity_histogram}}}};
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IngestError("report: cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("report: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError(std::string("report: invalid JSON: ") + e.what());
    }
    return j;
}

} // namespace ses
