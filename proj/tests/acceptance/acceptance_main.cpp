// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "ses/benchmark.hpp"
#include "ses/citests.hpp"
#include "ses/cross_validation.hpp"
#include "ses/distributions.hpp"
#include "ses/engine.hpp"
#include "ses/report.hpp"
#include "ses/rng.hpp"
#include "../support/reference_ses.hpp"

using namespace ses;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << " (" << name
              << "): " << detail << std::endl;
    if (!pass) ++g_failures;
}

std::vector<double> gaussian_column(Rng& rng, int n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.gaussian();
    return v;
}

Dataset make_continuous(std::vector<std::vector<double>> cols) {
    std::vector<std::string> names;
    std::vector<ColumnKind> kinds(cols.size(), ColumnKind::continuous());
    for (std::size_t j = 0; j < cols.size(); ++j) names.push_back("v" + std::to_string(j));
    return Dataset(std::move(names), std::move(cols), std::move(kinds));
}

SesConfig planted_run_config() {
    SesConfig cfg;
    cfg.threshold = 0.2;
    cfg.max_k = 5;
    cfg.test = TestSpec::of(TestKind::Fisher);
    return cfg;
}

bool queues_match_planted(const SesOutput& out) {
    if (out.selected_vars != std::vector<int>{9, 19, 199}) return false;
    if (out.queues.size() != 3) return false;
    std::set<int> q0(out.queues[0].begin(), out.queues[0].end());
    std::set<int> q1(out.queues[1].begin(), out.queues[1].end());
    std::set<int> q2(out.queues[2].begin(), out.queues[2].end());
    return q0 == std::set<int>{9, 14} && q1 == std::set<int>{19} &&
           q2 == std::set<int>{199, 229, 249} && out.signature_count == 6;
}

// ---- criteria 1 and 10 share the 20-seed sweep --------------------------

void criteria_1_and_10() {
    const int seeds = 20;
    int recovered = 0;
    int mmpc_consistent = 0;
    double worst_runtime = 0.0;
    for (int s = 0; s < seeds; ++s) {
        SyntheticSpec spec;
        spec.seed = Rng::derive_seed(20260808, s);
        LoadedTable t = generate_synthetic(spec);

        SesOutput out = ses_run(t.dataset, t.target, planted_run_config());
        worst_runtime = std::max(worst_runtime, out.runtime_seconds);
        if (queues_match_planted(out)) ++recovered;

        SesConfig mmpc = planted_run_config();
        mmpc.equivalences_enabled = false;
        SesOutput mout = ses_run(t.dataset, t.target, mmpc);
        bool singletons = true;
        for (const auto& q : mout.queues) singletons = singletons && q.size() == 1;
        if (mout.selected_vars == out.selected_vars && singletons) ++mmpc_consistent;
    }
    {
        std::ostringstream d;
        d << recovered << "/20 seeds recovered {10,20,200} with queues {2,1,3} and 6 "
             "signatures; worst runtime "
          << worst_runtime << " s";
        report(1, "synthetic equivalence recovery", recovered >= 18 && worst_runtime < 5.0,
               d.str());
    }
    {
        std::ostringstream d;
        d << mmpc_consistent << "/20 seeds: MMPC selected set equals SES owners with "
             "singleton queues";
        report(10, "MMPC consistency", mmpc_consistent == 20, d.str());
    }
}

// ---- criterion 2: cache reuse -------------------------------------------

void criterion_2() {
    SyntheticSpec spec;
    spec.seed = Rng::derive_seed(20260808, 0);
    LoadedTable t = generate_synthetic(spec);

    auto cache = std::make_shared<TestCache>();
    SesOutput cold = ses_run(t.dataset, t.target, planted_run_config(), cache);
    cache->reset_counters();
    SesOutput warm = ses_run(t.dataset, t.target, planted_run_config(), cache);

    RunMeta meta;
    nlohmann::json jc = make_run_report(cold, t.dataset, meta);
    nlohmann::json jw = make_run_report(warm, t.dataset, meta);
    jc.erase("runtime_seconds");
    jw.erase("runtime_seconds");
    jc.erase("cache");
    jw.erase("cache");

    bool zero_miss = warm.cache->misses() == 0;
    bool identical = jc == jw;
    std::ostringstream d;
    d << "warm rerun: " << warm.cache->misses() << " fresh evaluations, reports "
      << (identical ? "identical" : "differ") << " outside runtime/cache counters";
    report(2, "cache reuse", zero_miss && identical, d.str());
}

// ---- criterion 3: recurrence equals direct enumeration ------------------

void criterion_3() {
    Rng master(3333);
    int agree = 0;
    const int instances = 100;
    double worst_gap = 0.0;
    for (int i = 0; i < instances; ++i) {
        Rng rng(master.next_u64());
        int nvars = 8 + static_cast<int>(rng.below(5)); // 8..12
        int n = 60 + static_cast<int>(rng.below(60));
        std::vector<std::vector<double>> cols;
        for (int j = 0; j < nvars; ++j) cols.push_back(gaussian_column(rng, n));
        std::vector<double> t(n);
        int signals = 1 + static_cast<int>(rng.below(3));
        for (int i2 = 0; i2 < n; ++i2) {
            double v = rng.gaussian();
            for (int s = 0; s < signals; ++s) v += (0.6 + 0.3 * s) * cols[s][i2];
            t[i2] = v;
        }
        Dataset ds = make_continuous(cols);
        Target target = Target::continuous(t);

        SesConfig cfg;
        cfg.threshold = 0.05 + 0.1 * rng.uniform01();
        cfg.max_k = 1 + static_cast<int>(rng.below(3));
        cfg.test = TestSpec::of(TestKind::Fisher);
        SesOutput out = ses_run(ds, target, cfg);
        auto ref = ses_ref::reference_ses(ds, target, cfg.threshold, cfg.max_k,
                                          make_test_function(cfg.test));
        bool ok = out.selected_vars == ref.selected;
        for (int v = 0; v < nvars && ok; ++v) {
            double gap = std::abs(out.pvalues[v] - ref.maxp[v]);
            worst_gap = std::max(worst_gap, gap);
            ok = gap <= 1e-12;
        }
        if (ok) ++agree;
    }
    std::ostringstream d;
    d << agree << "/" << instances << " instances agree exactly; worst max-p gap "
      << worst_gap;
    report(3, "recurrence correctness", agree == instances, d.str());
}

// ---- criterion 4: fisher vs inversion oracle -----------------------------

double inversion_partial_corr(const std::vector<std::vector<double>>& vars) {
    const int k = static_cast<int>(vars.size());
    const int n = static_cast<int>(vars[0].size());
    Eigen::MatrixXd corr(k, k);
    for (int a = 0; a < k; ++a) {
        double ma = 0;
        for (double x : vars[a]) ma += x;
        ma /= n;
        for (int b = 0; b < k; ++b) {
            double mb = 0;
            for (double x : vars[b]) mb += x;
            mb /= n;
            double dot = 0, sa = 0, sb = 0;
            for (int i = 0; i < n; ++i) {
                dot += (vars[a][i] - ma) * (vars[b][i] - mb);
                sa += (vars[a][i] - ma) * (vars[a][i] - ma);
                sb += (vars[b][i] - mb) * (vars[b][i] - mb);
            }
            corr(a, b) = dot / std::sqrt(sa * sb);
        }
    }
    Eigen::MatrixXd omega = corr.inverse();
    return -omega(0, 1) / std::sqrt(omega(0, 0) * omega(1, 1));
}

void criterion_4() {
    Rng master(4444);
    int ok = 0;
    const int instances = 100;
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        Rng rng(master.next_u64());
        const int n = 50;
        int ncond = static_cast<int>(rng.below(4)); // 0..3
        auto x = gaussian_column(rng, n);
        std::vector<std::vector<double>> cond_cols;
        for (int c = 0; c < ncond; ++c) cond_cols.push_back(gaussian_column(rng, n));
        std::vector<double> t(n);
        for (int j = 0; j < n; ++j) {
            double v = 0.4 * x[j] + rng.gaussian();
            for (const auto& cc : cond_cols) v += 0.3 * cc[j];
            t[j] = v;
        }
        std::vector<std::vector<double>> cols = {x};
        std::vector<int> cond;
        for (int c = 0; c < ncond; ++c) {
            cols.push_back(cond_cols[c]);
            cond.push_back(c + 1);
        }
        Dataset ds = make_continuous(cols);
        TestResult res = fisher_test(ds, Target::continuous(t), 0, cond);

        std::vector<std::vector<double>> inv_vars = {x, t};
        for (const auto& cc : cond_cols) inv_vars.push_back(cc);
        double r = inversion_partial_corr(inv_vars);
        r = std::clamp(r, -(1.0 - 1e-12), 1.0 - 1e-12);
        double z = std::sqrt(static_cast<double>(n - ncond - 3)) * 0.5 *
                   std::log((1.0 + r) / (1.0 - r));
        double p = std::erfc(std::abs(z) / std::sqrt(2.0));
        double gap = std::abs(res.p_value - p);
        worst = std::max(worst, gap);
        if (res.valid && gap <= 1e-10) ++ok;
    }
    std::ostringstream d;
    d << ok << "/" << instances << " instances within 1e-10; worst gap " << worst;
    report(4, "fisher oracle equivalence", ok == instances, d.str());
}

// ---- criterion 5: G^2 exact values and dof hand counts -------------------

void criterion_5() {
    auto make_2x2 = [](int c00, int c01, int c10, int c11) {
        std::vector<double> x, t;
        auto add = [&](int count, double xv, double tv) {
            for (int i = 0; i < count; ++i) {
                x.push_back(xv);
                t.push_back(tv);
            }
        };
        add(c00, 0, 0);
        add(c01, 0, 1);
        add(c10, 1, 0);
        add(c11, 1, 1);
        Dataset ds({"x"}, {x}, {ColumnKind::categorical(2)});
        return std::pair<Dataset, Target>(std::move(ds), Target::binary(t));
    };

    auto [ds_ind, t_ind] = make_2x2(25, 25, 25, 25);
    TestResult ind = g2_test(ds_ind, t_ind, 0, {});
    bool ok_ind = ind.valid && ind.statistic == 0.0 && ind.p_value == 1.0 && ind.dof == 1.0;

    auto [ds_dep, t_dep] = make_2x2(50, 0, 0, 50);
    TestResult dep = g2_test(ds_dep, t_dep, 0, {});
    bool ok_dep = dep.valid && std::abs(dep.statistic - 200.0 * std::log(2.0)) < 1e-9 &&
                  dep.p_value < 1e-12;

    // 3-way table: X 3 levels, T 2, W1 2, W2 3 -> dof 2*1*6 = 12 by hand
    Rng rng(5555);
    const int n = 720;
    std::vector<double> x(n), t(n), w1(n), w2(n);
    for (int i = 0; i < n; ++i) {
        x[i] = static_cast<double>(rng.below(3));
        t[i] = static_cast<double>(rng.below(2));
        w1[i] = static_cast<double>(rng.below(2));
        w2[i] = static_cast<double>(rng.below(3));
    }
    Dataset ds3({"x", "w1", "w2"}, {x, w1, w2},
                {ColumnKind::categorical(3), ColumnKind::categorical(2),
                 ColumnKind::categorical(3)});
    std::vector<int> cond = {1, 2};
    TestResult res3 = g2_test(ds3, Target::binary(t), 0, cond);
    bool ok_dof = res3.valid && res3.dof == 12.0;

    // empty slice: w2 stuck at level 0 -> 4 of 6 slices empty, dof 2*1*2 = 4
    std::vector<double> w2c(n, 0.0);
    Dataset ds3b({"x", "w1", "w2"}, {x, w1, w2c},
                 {ColumnKind::categorical(3), ColumnKind::categorical(2),
                  ColumnKind::categorical(3)});
    TestResult res3b = g2_test(ds3b, Target::binary(t), 0, cond);
    bool ok_dof_reduced = res3b.valid && res3b.dof == 4.0;

    std::ostringstream d;
    d << "independent table: G2=" << ind.statistic << ", p=" << ind.p_value
      << "; diagonal table: G2=" << dep.statistic << " (target 138.629), p=" << dep.p_value
      << "; 3-way dof " << res3.dof << "/12, reduced dof " << res3b.dof << "/4";
    report(5, "G^2 correctness", ok_ind && ok_dep && ok_dof && ok_dof_reduced, d.str());
}

// ---- criterion 6: calibration --------------------------------------------

void criterion_6() {
    Rng master(6666);
    int rejections = 0;
    const int fisher_seeds = 1000;
    for (int s = 0; s < fisher_seeds; ++s) {
        Rng rng(master.next_u64());
        const int n = 200;
        auto x = gaussian_column(rng, n);
        auto c1 = gaussian_column(rng, n);
        auto c2 = gaussian_column(rng, n);
        auto t = gaussian_column(rng, n);
        Dataset ds = make_continuous({x, c1, c2});
        std::vector<int> cond = {1, 2};
        TestResult res = fisher_test(ds, Target::continuous(t), 0, cond);
        if (res.p_value < 0.05) ++rejections;
    }
    double rate = static_cast<double>(rejections) / fisher_seeds;

    std::vector<double> logistic_ps;
    const int logistic_seeds = 200;
    for (int s = 0; s < logistic_seeds; ++s) {
        Rng rng(master.next_u64());
        const int n = 500;
        auto x = gaussian_column(rng, n);
        std::vector<double> labels(n);
        for (int i = 0; i < n; ++i) labels[i] = static_cast<double>(rng.below(2));
        Dataset ds = make_continuous({x});
        TestResult res = logistic_lrt_test(ds, Target::binary(labels), 0, {});
        logistic_ps.push_back(res.p_value);
    }
    double median = quantile(logistic_ps, 0.5);

    bool ok = rate >= 0.03 && rate <= 0.07 && median >= 0.35 && median <= 0.65;
    std::ostringstream d;
    d << "fisher type-I rate " << rate << " (target [0.03,0.07]); logistic null median p "
      << median << " (target [0.35,0.65])";
    report(6, "test calibration", ok, d.str());
}

// ---- criterion 7: desk-scale protocol ------------------------------------

void criterion_7() {
    SyntheticSpec spec; // default planted-duplicates recipe
    LoadedTable t = generate_synthetic(spec);
    ProtocolGrid grid; // alphas {.01,.05,.1}, ks {3,5}, 10 folds
    ProtocolResult res = run_protocol(t.dataset, t.target, 50, 20260808, grid);
    bool ok = res.summary.defined_cv_count > 0 && res.summary.cv_median < 0.05;
    std::ostringstream d;
    d << "median CV of per-signature holdout MSE " << res.summary.cv_median
      << " over " << res.summary.defined_cv_count << " defined repetitions (target < 0.05)";
    report(7, "signature equivalence property", ok, d.str());
}

// ---- criterion 8: cv plausibility -----------------------------------------

void criterion_8() {
    SyntheticSpec spec;
    LoadedTable t = generate_synthetic(spec);
    CvConfig cfg;
    cfg.kfolds = 10;
    cfg.task = Task::Regression;
    cfg.seed = 7;
    CvResult cv = cv_ses(t.dataset, t.target, cfg, TestSpec::auto_select());
    bool ok = cv.best_performance >= -10.0 && cv.best_performance <= -7.0;
    std::ostringstream d;
    d << "best mean negated MSE " << cv.best_performance
      << " at alpha=" << cv.best_alpha << ", max_k=" << cv.best_max_k
      << " (target [-10,-7], noise variance 100/12 = 8.33)";
    report(8, "cv plausibility", ok, d.str());
}

// ---- criterion 9: determinism and parallel equivalence ---------------------

int run_cli(const std::string& args) {
    std::string cmd = std::string(SES_CLI_PATH) + " " + args;
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_9() {
    bool ok = true;
    std::string detail;

    // synth is byte-reproducible
    ok = ok && run_cli("synth --out acc_data.csv --seed 5 > /dev/null") == 0;
    std::string d1 = slurp("acc_data.csv");
    ok = ok && run_cli("synth --out acc_data.csv --seed 5 > /dev/null") == 0;
    ok = ok && d1 == slurp("acc_data.csv");
    if (!ok) detail = "synth output differs between identical invocations";

    // select: workers 1 vs 4 give identical reports up to wall-clock
    if (ok) {
        ok = run_cli("select --data acc_data.csv --target target --alpha 0.2 --max-k 5 "
                     "--workers 1 --out acc_w1.json > /dev/null") == 0 &&
             run_cli("select --data acc_data.csv --target target --alpha 0.2 --max-k 5 "
                     "--workers 4 --out acc_w4.json > /dev/null") == 0;
        if (ok) {
            nlohmann::json a = read_json_file("acc_w1.json");
            nlohmann::json b = read_json_file("acc_w4.json");
            a.erase("runtime_seconds");
            b.erase("runtime_seconds");
            // config echoes the worker count by design; mask it
            a["config"].erase("workers");
            b["config"].erase("workers");
            ok = a == b;
            if (!ok) detail = "workers=1 vs workers=4 select reports differ";
        } else {
            detail = "select invocation failed";
        }
    }

    // cv and bench are byte-reproducible with a fixed seed
    if (ok) {
        ok = run_cli("cv --data acc_data.csv --target target --alphas 0.05 0.1 "
                     "--max-ks 2 --kfolds 4 --seed 9 --out acc_cv1.json > /dev/null") == 0 &&
             run_cli("cv --data acc_data.csv --target target --alphas 0.05 0.1 "
                     "--max-ks 2 --kfolds 4 --seed 9 --out acc_cv2.json > /dev/null") == 0 &&
             slurp("acc_cv1.json") == slurp("acc_cv2.json");
        if (!ok) detail = "cv reports differ between identical invocations";
    }
    if (ok) {
        std::ofstream spec("acc_spec.json");
        spec << R"({"n_rows": 200, "n_cols": 20, "coefficients": {"3": 3.0},
                    "duplicates": {"7": 3}, "seed": 11})";
        spec.close();
        ok = run_cli("bench --reps 2 --seed 3 --spec acc_spec.json --out acc_b1.json "
                     "> /dev/null") == 0 &&
             run_cli("bench --reps 2 --seed 3 --spec acc_spec.json --out acc_b2.json "
                     "> /dev/null") == 0 &&
             slurp("acc_b1.json") == slurp("acc_b2.json");
        if (!ok) detail = "bench reports differ between identical invocations";
    }

    for (const char* f : {"acc_data.csv", "acc_w1.json", "acc_w4.json", "acc_cv1.json",
                          "acc_cv2.json", "acc_spec.json", "acc_b1.json", "acc_b2.json"})
        std::remove(f);

    report(9, "determinism and parallel equivalence", ok,
           ok ? "synth/select/cv/bench reproducible; workers 1 vs 4 identical" : detail);
}

} // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();
    criteria_1_and_10();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED") << " ("
              << g_failures << " failures, " << secs << " s)" << std::endl;
    return g_failures == 0 ? 0 : 1;
}
