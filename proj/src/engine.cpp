#include "ses/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include "ses/errors.hpp"

namespace ses {

namespace detail {

void for_each_subset(std::span<const int> pool, int max_size,
                     const std::function<bool(std::span<const int>)>& fn) {
    const int n = static_cast<int>(pool.size());
    if (max_size > n) max_size = n;
    if (!fn({})) return;
    std::vector<int> subset;
    std::vector<int> idx;
    for (int size = 1; size <= max_size; ++size) {
        idx.resize(size);
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            subset.clear();
            for (int i : idx) subset.push_back(pool[i]);
            if (!fn(subset)) return;
            int i = size - 1;
            while (i >= 0 && idx[i] == n - size + i) --i;
            if (i < 0) break;
            ++idx[i];
            for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
}

std::optional<int> maxmin_step(std::span<const int> remaining, std::span<const double> maxp,
                               std::span<const double> stat_at_max, double threshold) {
    std::optional<int> best;
    for (int x : remaining) {
        if (maxp[x] > threshold) continue;
        if (!best) {
            best = x;
            continue;
        }
        int b = *best;
        if (maxp[x] < maxp[b] ||
            (maxp[x] == maxp[b] && std::abs(stat_at_max[x]) > std::abs(stat_at_max[b]))) {
            best = x;
        }
        // equal p and equal |stat|: the smaller index, i.e. the incumbent
    }
    return best;
}

} // namespace detail

void AuditLog::write_tsv(std::ostream& out) const {
    out << "x\tcond\tstatistic\tpvalue\tphase\n";
    for (const auto& e : entries_) {
        out << e.x << '\t';
        if (e.cond.empty()) {
            out << '-';
        } else {
            for (std::size_t i = 0; i < e.cond.size(); ++i) {
                if (i) out << ';';
                out << e.cond[i];
            }
        }
        out << '\t' << e.statistic << '\t' << e.p_value << '\t' << e.phase << '\n';
    }
}

namespace {

enum class VarStatus { Remaining, Selected, Eliminated };

struct Evaluator {
    const Dataset& ds;
    const Target& target;
    CiTestFn test;
    TestCache& cache;
    AuditLog* audit;

    TestResult operator()(int x, std::span<const int> cond, const char* phase) {
        TestKey key = TestKey::make(x, cond);
        TestResult res = cache.lookup_or_eval(
            key, [&](const TestKey& k) { return test(ds, target, k.x, k.cond); });
        if (audit) audit->append(x, key.cond, res.statistic, res.p_value, phase);
        return res;
    }
};

std::uint64_t saturating_product(const std::vector<std::vector<int>>& queues) {
    std::uint64_t prod = 1;
    for (const auto& q : queues) {
        std::uint64_t s = q.size();
        if (s != 0 && prod > std::numeric_limits<std::uint64_t>::max() / s)
            return std::numeric_limits<std::uint64_t>::max();
        prod *= s;
    }
    return prod;
}

} // namespace

std::vector<TestResult> parallel_univariate_screen(const Dataset& ds, const Target& target,
                                                   const SesConfig& cfg,
                                                   std::shared_ptr<TestCache> cache,
                                                   AuditLog* audit) {
    if (ds.n_rows() != target.size())
        throw ConfigError("screen: dataset and target lengths differ");
    if (cfg.workers < 1) throw ConfigError("screen: workers must be >= 1");

    TestSpec resolved = dispatch_test(target, ds, cfg.test);
    CiTestFn testfn = make_test_function(resolved);
    const int nvars = ds.n_cols();

    std::vector<TestResult> results(nvars);
    std::vector<int> missing;
    missing.reserve(nvars);
    for (int x = 0; x < nvars; ++x) {
        TestKey key = TestKey::make(x, {});
        if (cache && cache->contains(key)) {
            // throwing evaluator documents that a hit must not evaluate
            results[x] = cache->lookup_or_eval(key, [](const TestKey&) -> TestResult {
                throw std::logic_error("screen: unexpected cache miss");
            });
        } else {
            missing.push_back(x);
        }
    }

    if (!missing.empty()) {
        const int workers = std::min<int>(cfg.workers, static_cast<int>(missing.size()));
        if (workers <= 1) {
            for (int x : missing) results[x] = testfn(ds, target, x, {});
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&, w]() {
                    for (std::size_t i = w; i < missing.size(); i += workers) {
                        int x = missing[i];
                        results[x] = testfn(ds, target, x, {});
                    }
                });
            }
            for (auto& t : pool) t.join();
        }
        if (cache)
            for (int x : missing) {
                cache->insert(TestKey::make(x, {}), results[x]);
            }
    }
    if (audit)
        for (int x = 0; x < nvars; ++x)
            audit->append(x, {}, results[x].statistic, results[x].p_value, "screen");
    return results;
}

SesOutput ses_run(const Dataset& ds, const Target& target, const SesConfig& cfg,
                  std::shared_ptr<TestCache> cache, AuditLog* audit) {
    const auto t0 = std::chrono::steady_clock::now();

    if (ds.n_rows() != target.size())
        throw ConfigError("ses: dataset and target lengths differ");
    if (cfg.threshold <= 0.0 || cfg.threshold >= 1.0)
        throw ConfigError("ses: threshold must lie in (0,1)");
    if (cfg.max_k < 1) throw ConfigError("ses: max_k must be >= 1");

    TestSpec resolved = dispatch_test(target, ds, cfg.test);
    const std::uint64_t digest = data_digest(ds, target, resolved.name());
    if (!cache) {
        cache = std::make_shared<TestCache>(digest);
    } else if (cache->size() == 0) {
        cache->set_digest(digest);
    } else if (cache->digest() != digest) {
        throw ConfigError("ses: cache belongs to different data (digest mismatch)");
    }

    Evaluator eval{ds, target, make_test_function(resolved), *cache, audit};
    const int nvars = ds.n_cols();
    const double a = cfg.threshold;

    // Seed the running max p-values with the univariate pass.
    SesConfig screen_cfg = cfg;
    screen_cfg.test = resolved;
    std::vector<TestResult> screen = parallel_univariate_screen(ds, target, screen_cfg, cache, audit);

    std::vector<double> maxp(nvars), stat_at(nvars);
    std::vector<std::vector<int>> witness(nvars); // conditioning set that crossed a
    std::vector<VarStatus> status(nvars, VarStatus::Remaining);
    std::vector<std::vector<int>> queues(nvars);
    for (int x = 0; x < nvars; ++x) {
        maxp[x] = screen[x].p_value;
        stat_at[x] = screen[x].valid ? screen[x].statistic : 0.0;
        queues[x] = {x};
    }

    std::vector<int> selection_order;

    auto elimination_pass = [&]() {
        for (int x = 0; x < nvars; ++x) {
            if (status[x] == VarStatus::Eliminated || maxp[x] <= a) continue;
            status[x] = VarStatus::Eliminated;
            if (!cfg.equivalences_enabled || witness[x].empty()) continue;
            // Look for an interchangeable member of the witnessing set: swap
            // x into the conditioning set and test each member in its place.
            for (int y : witness[x]) {
                std::vector<int> swapped;
                swapped.reserve(witness[x].size());
                for (int z : witness[x])
                    if (z != y) swapped.push_back(z);
                swapped.push_back(x);
                std::sort(swapped.begin(), swapped.end());
                TestResult res = eval(y, swapped, "equiv");
                if (res.p_value > a) {
                    auto& qy = queues[y];
                    qy.insert(qy.end(), queues[x].begin(), queues[x].end());
                    break;
                }
            }
        }
    };

    auto remaining_vars = [&]() {
        std::vector<int> r;
        for (int x = 0; x < nvars; ++x)
            if (status[x] == VarStatus::Remaining) r.push_back(x);
        return r;
    };

    while (true) {
        elimination_pass();
        std::vector<int> remaining = remaining_vars();
        if (remaining.empty()) break;
        auto picked = detail::maxmin_step(remaining, maxp, stat_at, a);
        if (!picked) break;
        const int m = *picked;
        status[m] = VarStatus::Selected;
        selection_order.push_back(m);

        // Incremental max-p refresh: only conditioning sets containing the
        // newcomer need evaluation.
        std::vector<int> prev_selected;
        for (int v : selection_order)
            if (v != m && status[v] == VarStatus::Selected) prev_selected.push_back(v);
        std::sort(prev_selected.begin(), prev_selected.end());

        for (int x = 0; x < nvars; ++x) {
            if (x == m || status[x] == VarStatus::Eliminated) continue;
            if (maxp[x] > a) continue; // already eliminable, skip
            std::vector<int> pool;
            for (int v : prev_selected)
                if (v != x) pool.push_back(v);
            detail::for_each_subset(pool, cfg.max_k - 1, [&](std::span<const int> base) {
                std::vector<int> cond(base.begin(), base.end());
                cond.push_back(m);
                std::sort(cond.begin(), cond.end());
                TestResult res = eval(x, cond, "update");
                if (res.p_value > maxp[x]) {
                    maxp[x] = res.p_value;
                    stat_at[x] = res.valid ? res.statistic : 0.0;
                }
                if (res.p_value > a) {
                    witness[x] = cond;
                    return false; // eliminable; stop evaluating
                }
                return true;
            });
        }
    }

    // One final elimination sweep.
    elimination_pass();

    SesOutput out;
    out.threshold = cfg.threshold;
    out.max_k = cfg.max_k;
    out.test_name = resolved.name();
    out.pvalues = maxp;
    out.stats = stat_at;
    out.cache = cache;

    for (int x = 0; x < nvars; ++x)
        if (status[x] == VarStatus::Selected) out.selected_vars.push_back(x);
    for (int v : out.selected_vars) out.queues.push_back(queues[v]);

    out.selected_vars_by_pvalue = out.selected_vars;
    std::stable_sort(out.selected_vars_by_pvalue.begin(), out.selected_vars_by_pvalue.end(),
                     [&](int l, int r) { return maxp[l] < maxp[r]; });

    out.signature_count = out.selected_vars.empty() ? 1 : saturating_product(out.queues);

    out.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

SignatureList enumerate_signatures(const SesOutput& out, std::uint64_t limit) {
    SignatureList list;
    if (out.selected_vars.empty()) {
        if (limit > 0) list.signatures.push_back({});
        return list;
    }
    std::uint64_t total = out.signature_count;
    std::uint64_t count = std::min(total, limit);
    list.truncated = count < total;
    list.signatures.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) list.signatures.push_back(signature_at(out, i));
    return list;
}

std::vector<int> signature_at(const SesOutput& out, std::uint64_t index) {
    if (index >= out.signature_count)
        throw ConfigError("signature_at: index out of range");
    const std::size_t q = out.queues.size();
    // Mixed radix, first queue most significant.
    std::vector<std::uint64_t> stride(q, 1);
    for (std::size_t j = q; j-- > 1;)
        stride[j - 1] = stride[j] * out.queues[j].size();
    std::vector<int> sig(q);
    for (std::size_t j = 0; j < q; ++j) {
        std::uint64_t digit = (index / stride[j]) % out.queues[j].size();
        sig[j] = out.queues[j][digit];
    }
    return sig;
}

} // namespace ses
