#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ses/citests.hpp"
#include "ses/dataset.hpp"
#include "ses/test_cache.hpp"

namespace ses {

struct SesConfig {
    double threshold = 0.05; // significance level a
    int max_k = 3;           // conditioning-set size bound
    TestSpec test = TestSpec::auto_select();
    int workers = 1;
    bool equivalences_enabled = true; // false = plain MMPC
    std::uint64_t signature_cap = 1'000'000;
};

// One line per test evaluation, for reproducibility audits. `phase` is
// "screen", "update" or "equiv"; equivalence probes do not feed the reported
// per-variable max p-values.
struct AuditEntry {
    int x = 0;
    std::vector<int> cond;
    double statistic = 0.0;
    double p_value = 1.0;
    std::string phase;
};

class AuditLog {
public:
    void append(int x, std::vector<int> cond, double stat, double p, std::string phase) {
        entries_.push_back({x, std::move(cond), stat, p, std::move(phase)});
    }
    const std::vector<AuditEntry>& entries() const { return entries_; }
    void write_tsv(std::ostream& out) const;

private:
    std::vector<AuditEntry> entries_;
};

struct SesOutput {
    std::vector<int> selected_vars;            // ascending variable index
    std::vector<int> selected_vars_by_pvalue;  // same indices, ascending max-p
    std::vector<std::vector<int>> queues;      // aligned with selected_vars, owner first
    std::vector<double> pvalues;               // running max p per variable (all variables)
    std::vector<double> stats;                 // statistic at the maximizing subset
    std::uint64_t signature_count = 0;         // product of queue sizes (saturating)
    double threshold = 0.0;
    int max_k = 0;
    std::string test_name;
    double runtime_seconds = 0.0;
    std::shared_ptr<TestCache> cache;
};

// Forward-backward max-min selection with equivalence-queue tracking.
// Decisions depend only on test results, so a warm cache changes runtime but
// not output. A null cache means a fresh private one.
SesOutput ses_run(const Dataset& ds, const Target& target, const SesConfig& cfg,
                  std::shared_ptr<TestCache> cache = nullptr, AuditLog* audit = nullptr);

// Marginal test of every variable against the target, split across
// cfg.workers threads; the result vector does not depend on the worker count.
std::vector<TestResult> parallel_univariate_screen(const Dataset& ds, const Target& target,
                                                   const SesConfig& cfg,
                                                   std::shared_ptr<TestCache> cache = nullptr,
                                                   AuditLog* audit = nullptr);

struct SignatureList {
    std::vector<std::vector<int>> signatures;
    bool truncated = false;
};

// Cartesian product of the equivalence queues in selected_vars order,
// lexicographic by queue-member position; the first signature is always
// selected_vars itself. Stops at `limit` and flags truncation.
SignatureList enumerate_signatures(const SesOutput& out, std::uint64_t limit);

// Direct mixed-radix decode of the i-th signature (same order as
// enumerate_signatures) without materializing the product.
std::vector<int> signature_at(const SesOutput& out, std::uint64_t index);

namespace detail {

// Visits subsets of `pool` (sorted ascending) of size 0..max_size, in
// increasing size then lexicographic order. The callback returns false to
// stop the enumeration.
void for_each_subset(std::span<const int> pool, int max_size,
                     const std::function<bool(std::span<const int>)>& fn);

// Admissible max-min choice: the candidate with the smallest running max-p
// among those at or below the threshold; ties prefer the larger |statistic|,
// then the smaller index. nullopt when no candidate qualifies.
std::optional<int> maxmin_step(std::span<const int> remaining, std::span<const double> maxp,
                               std::span<const double> stat_at_max, double threshold);

} // namespace detail

} // namespace ses
