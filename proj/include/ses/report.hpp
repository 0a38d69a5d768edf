#pragma once

#include <string>

#include <json.hpp>

#include "ses/benchmark.hpp"
#include "ses/cross_validation.hpp"
#include "ses/engine.hpp"

namespace ses {

// Metadata echoed into a run report alongside the SesOutput payload.
struct RunMeta {
    std::string data_path;
    std::string target_name;
    int workers = 1;
    bool mmpc = false;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
};

nlohmann::json make_run_report(const SesOutput& out, const Dataset& ds, const RunMeta& meta);

// Reconstructs the algorithmic fields of a SesOutput from a report (cache
// and runtime are not part of the round trip).
SesOutput parse_run_report(const nlohmann::json& report);

nlohmann::json make_cv_report(const CvResult& cv, const CvConfig& cfg,
                              const std::string& test_name);

nlohmann::json make_bench_report(const ProtocolResult& protocol, const SyntheticSpec& spec,
                                 const ProtocolGrid& grid, int reps, std::uint64_t seed);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

} // namespace ses
