#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ses/benchmark.hpp"
#include "ses/cross_validation.hpp"
#include "ses/dataset.hpp"
#include "ses/engine.hpp"
#include "ses/errors.hpp"
#include "ses/report.hpp"

namespace {

int default_workers() {
    if (const char* env = std::getenv("SES_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 1;
}

struct SelectArgs {
    std::string data_path;
    std::string target;
    std::string schema_path;
    double alpha = 0.05;
    int max_k = 3;
    std::string test = "auto";
    int workers = default_workers();
    std::string cache_path;
    std::string audit_path;
    bool mmpc = false;
    std::string out_path;
};

void print_select_summary(const ses::SesOutput& out, const ses::Dataset& ds,
                          const ses::TestCache& cache) {
    std::cout << "Selected variables:";
    for (int v : out.selected_vars) std::cout << ' ' << ds.name(v);
    std::cout << "\nSelected variables ordered by pvalue:";
    for (int v : out.selected_vars_by_pvalue) std::cout << ' ' << ds.name(v);
    std::cout << "\nQueue sizes (equivalences per selected variable):";
    for (const auto& q : out.queues) std::cout << ' ' << q.size();
    std::cout << "\nNumber of signatures: " << out.signature_count;
    std::cout << "\nmax_k: " << out.max_k << "  threshold: " << out.threshold
              << "  test: " << out.test_name;
    std::cout << "\nCache: " << cache.hits() << " hits, " << cache.misses() << " misses";
    std::cout << "\nRuntime: " << out.runtime_seconds << " s\n";
}

int run_select(const SelectArgs& args) {
    ses::ColumnSchema schema;
    if (!args.schema_path.empty()) schema = ses::load_schema(args.schema_path);
    ses::LoadedTable table = ses::load_dataset_file(args.data_path, args.target, schema);

    auto zero_var = table.dataset.zero_variance_columns();
    if (!zero_var.empty()) {
        std::cerr << "warning: zero-variance columns:";
        for (int j : zero_var) std::cerr << ' ' << table.dataset.name(j);
        std::cerr << '\n';
    }

    ses::SesConfig cfg;
    cfg.threshold = args.alpha;
    cfg.max_k = args.max_k;
    cfg.test = ses::TestSpec::from_name(args.test);
    cfg.workers = args.workers;
    cfg.equivalences_enabled = !args.mmpc;

    ses::TestSpec resolved = ses::dispatch_test(table.target, table.dataset, cfg.test);
    std::uint64_t digest = ses::data_digest(table.dataset, table.target, resolved.name());

    std::shared_ptr<ses::TestCache> cache;
    if (!args.cache_path.empty())
        cache = std::make_shared<ses::TestCache>(
            ses::TestCache::load(args.cache_path, digest, resolved.name()));

    ses::AuditLog audit;
    ses::AuditLog* audit_ptr = args.audit_path.empty() ? nullptr : &audit;

    ses::SesOutput out = ses::ses_run(table.dataset, table.target, cfg, cache, audit_ptr);

    if (!args.cache_path.empty()) out.cache->save(args.cache_path, resolved.name());
    if (audit_ptr) {
        std::ofstream f(args.audit_path);
        if (!f) throw ses::IngestError("audit: cannot write '" + args.audit_path + "'");
        audit.write_tsv(f);
    }

    ses::RunMeta meta;
    meta.data_path = args.data_path;
    meta.target_name = args.target;
    meta.workers = args.workers;
    meta.mmpc = args.mmpc;
    meta.cache_hits = out.cache->hits();
    meta.cache_misses = out.cache->misses();
    if (!args.out_path.empty())
        ses::write_json_file(args.out_path, ses::make_run_report(out, table.dataset, meta));

    print_select_summary(out, table.dataset, *out.cache);
    return 0;
}

struct CvArgs {
    std::string data_path;
    std::string target;
    std::string schema_path;
    std::vector<double> alphas = {0.01, 0.05, 0.1};
    std::vector<int> max_ks = {3, 5};
    int kfolds = 10;
    std::string task = "R";
    std::string test = "auto";
    std::uint64_t seed = 0;
    std::string out_path;
};

int run_cv(const CvArgs& args) {
    ses::ColumnSchema schema;
    if (!args.schema_path.empty()) schema = ses::load_schema(args.schema_path);
    ses::LoadedTable table = ses::load_dataset_file(args.data_path, args.target, schema);

    ses::CvConfig cfg;
    cfg.kfolds = args.kfolds;
    cfg.alphas = args.alphas;
    cfg.max_ks = args.max_ks;
    cfg.seed = args.seed;
    if (args.task == "R") cfg.task = ses::Task::Regression;
    else if (args.task == "C") cfg.task = ses::Task::Classification;
    else throw ses::ConfigError("cv: task must be R or C");

    ses::TestSpec test = ses::TestSpec::from_name(args.test);
    ses::CvResult cv = ses::cv_ses(table.dataset, table.target, cfg, test);

    std::string test_name =
        ses::dispatch_test(table.target, table.dataset, test).name();
    if (!args.out_path.empty())
        ses::write_json_file(args.out_path, ses::make_cv_report(cv, cfg, test_name));

    std::cout << "Best configuration: alpha = " << cv.best_alpha
              << ", max_k = " << cv.best_max_k << '\n';
    std::cout << "Best performance: " << cv.best_performance << '\n';
    return 0;
}

struct SignaturesArgs {
    std::string report_path;
    std::uint64_t limit = 1'000'000;
    std::string out_path;
};

int run_signatures(const SignaturesArgs& args) {
    nlohmann::json report = ses::read_json_file(args.report_path);
    ses::SesOutput out = ses::parse_run_report(report);
    std::vector<std::string> columns = report.at("columns").get<std::vector<std::string>>();

    std::uint64_t limit = args.limit;
    const std::uint64_t cap = ses::SesConfig{}.signature_cap;
    if (limit > cap) {
        std::cerr << "note: limit clamped to the signature cap of " << cap << '\n';
        limit = cap;
    }
    ses::SignatureList list = ses::enumerate_signatures(out, limit);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!args.out_path.empty()) {
        file.open(args.out_path);
        if (!file) throw ses::IngestError("signatures: cannot write '" + args.out_path + "'");
        os = &file;
    }
    for (const auto& sig : list.signatures) {
        for (std::size_t i = 0; i < sig.size(); ++i) {
            if (i) *os << ',';
            *os << columns.at(sig[i]);
        }
        *os << '\n';
    }
    if (list.truncated)
        std::cerr << "note: signature list truncated at " << limit << " of "
                  << out.signature_count << '\n';
    return 0;
}

struct BenchArgs {
    int reps = 50;
    std::uint64_t seed = 1;
    std::string spec_path;
    std::string out_path;
};

ses::SyntheticSpec parse_spec_json(const nlohmann::json& j) {
    ses::SyntheticSpec spec;
    spec.n_rows = j.value("n_rows", spec.n_rows);
    spec.n_cols = j.value("n_cols", spec.n_cols);
    spec.value_lo = j.value("value_lo", spec.value_lo);
    spec.value_hi = j.value("value_hi", spec.value_hi);
    spec.noise_lo = j.value("noise_lo", spec.noise_lo);
    spec.noise_hi = j.value("noise_hi", spec.noise_hi);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("coefficients")) {
        spec.coefficients.clear();
        for (auto it = j["coefficients"].begin(); it != j["coefficients"].end(); ++it)
            spec.coefficients[std::stoi(it.key())] = it.value().get<double>();
    }
    if (j.contains("duplicates")) {
        spec.duplicate_map.clear();
        for (auto it = j["duplicates"].begin(); it != j["duplicates"].end(); ++it)
            spec.duplicate_map[std::stoi(it.key())] = it.value().get<int>();
    }
    return spec;
}

int run_bench(const BenchArgs& args) {
    ses::SyntheticSpec spec;
    if (!args.spec_path.empty()) spec = parse_spec_json(ses::read_json_file(args.spec_path));

    ses::LoadedTable table = ses::generate_synthetic(spec);
    ses::ProtocolGrid grid;
    ses::ProtocolResult protocol =
        ses::run_protocol(table.dataset, table.target, args.reps, args.seed, grid);

    if (!args.out_path.empty())
        ses::write_json_file(args.out_path,
                             ses::make_bench_report(protocol, spec, grid, args.reps, args.seed));

    std::cout << "Repetitions: " << args.reps << '\n';
    std::cout << "Defined CV values: " << protocol.summary.defined_cv_count << '\n';
    std::cout << "CV of signature performances, quantiles (2.5% / 50% / 97.5%): "
              << protocol.summary.cv_q025 << " / " << protocol.summary.cv_median << " / "
              << protocol.summary.cv_q975 << '\n';
    std::cout << "Signature multiplicity histogram (1..9, 10+):";
    for (int c : protocol.summary.multiplicity_histogram) std::cout << ' ' << c;
    std::cout << '\n';
    return 0;
}

struct SynthArgs {
    std::string spec_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int run_synth(const SynthArgs& args) {
    ses::SyntheticSpec spec;
    if (!args.spec_path.empty()) spec = parse_spec_json(ses::read_json_file(args.spec_path));
    if (args.seed_given) spec.seed = args.seed;
    ses::LoadedTable table = ses::generate_synthetic(spec);
    std::ofstream out(args.out_path);
    if (!out) throw ses::IngestError("synth: cannot write '" + args.out_path + "'");
    ses::write_csv(out, table.dataset, table.target, "target");
    std::cout << "Wrote " << table.dataset.n_rows() << " rows x "
              << table.dataset.n_cols() << " predictors to " << args.out_path << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SES: statistically equivalent signature selection"};
    app.require_subcommand(1);

    SelectArgs sel;
    CLI::App* select = app.add_subcommand("select", "Run the SES feature selection");
    select->add_option("--data", sel.data_path, "Input CSV/TSV with header")->required();
    select->add_option("--target", sel.target, "Target column name or index")->required();
    select->add_option("--schema", sel.schema_path, "Column-kind sidecar (JSON)");
    select->add_option("--alpha", sel.alpha, "Significance threshold");
    select->add_option("--max-k", sel.max_k, "Max conditioning-set size");
    select->add_option("--test", sel.test, "fisher|spearman|g2|linreg|logistic|auto");
    select->add_option("--workers", sel.workers, "Worker threads for the univariate screen");
    select->add_option("--cache", sel.cache_path, "Test-cache sidecar to load/save");
    select->add_option("--audit", sel.audit_path, "Write a per-test audit log (TSV)");
    select->add_flag("--mmpc", sel.mmpc, "Disable equivalence tracking (plain MMPC)");
    select->add_option("--out", sel.out_path, "Write the JSON run report here");

    CvArgs cv;
    CLI::App* cvcmd = app.add_subcommand("cv", "Cross-validated (alpha, max_k) tuning");
    cvcmd->add_option("--data", cv.data_path, "Input CSV/TSV with header")->required();
    cvcmd->add_option("--target", cv.target, "Target column name or index")->required();
    cvcmd->add_option("--schema", cv.schema_path, "Column-kind sidecar (JSON)");
    cvcmd->add_option("--alphas", cv.alphas, "Threshold grid");
    cvcmd->add_option("--max-ks", cv.max_ks, "max_k grid");
    cvcmd->add_option("--kfolds", cv.kfolds, "Number of folds");
    cvcmd->add_option("--task", cv.task, "R (regression) or C (classification)");
    cvcmd->add_option("--test", cv.test, "Conditional independence test");
    cvcmd->add_option("--seed", cv.seed, "Fold-assignment seed");
    cvcmd->add_option("--out", cv.out_path, "Write the JSON CV report here");

    SignaturesArgs sig;
    CLI::App* sigcmd =
        app.add_subcommand("signatures", "Enumerate signatures from a run report");
    sigcmd->add_option("--report", sig.report_path, "Run report from `select --out`")->required();
    sigcmd->add_option("--limit", sig.limit, "Maximum signatures to list");
    sigcmd->add_option("--out", sig.out_path, "Write signatures here instead of stdout");

    BenchArgs bench;
    CLI::App* benchcmd =
        app.add_subcommand("bench", "Repeated-split protocol on synthetic data");
    benchcmd->add_option("--reps", bench.reps, "Number of repetitions");
    benchcmd->add_option("--seed", bench.seed, "Master seed");
    benchcmd->add_option("--spec", bench.spec_path, "Synthetic-data spec (JSON)");
    benchcmd->add_option("--out", bench.out_path, "Write the JSON protocol report here");

    SynthArgs synth;
    CLI::App* synthcmd = app.add_subcommand("synth", "Write a synthetic data set as CSV");
    synthcmd->add_option("--spec", synth.spec_path, "Synthetic-data spec (JSON)");
    synthcmd->add_option("--out", synth.out_path, "Output CSV path")->required();
    auto* seed_opt = synthcmd->add_option("--seed", synth.seed, "Generator seed");

    CLI11_PARSE(app, argc, argv);
    synth.seed_given = seed_opt->count() > 0;

    try {
        if (select->parsed()) return run_select(sel);
        if (cvcmd->parsed()) return run_cv(cv);
        if (sigcmd->parsed()) return run_signatures(sig);
        if (benchcmd->parsed()) return run_bench(bench);
        if (synthcmd->parsed()) return run_synth(synth);
    } catch (const ses::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ses::IngestError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
