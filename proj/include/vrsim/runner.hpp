#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vrsim/config.hpp"
#include "vrsim/scenario.hpp"

namespace vrsim {

/// An allocation policy paired with a resolution policy, written "alloc+res".
struct SchemeSpec {
  std::string allocation = "equal";
  std::string resolution = "cc";

  std::string name() const { return allocation + "+" + resolution; }
};

/// Accepts "alloc+res" or a single controller name ("cc" means equal+cc).
SchemeSpec parse_scheme(std::string_view text);

/// Valid names, for error messages.
const std::vector<std::string>& allocation_names();
const std::vector<std::string>& resolution_names();

/// Throws ConfigError on unknown names. "agent" is rejected here; agents attach through the protocol.
std::unique_ptr<AllocationPolicy> make_allocation(const std::string& name, const SimConfig& config);
std::unique_ptr<ResolutionPolicy> make_resolution(const std::string& name, const SimConfig& config);

/// Parses "1,2,5" and ranges like "1-10". Throws ConfigError on bad or repeated seeds.
std::vector<std::uint64_t> parse_seeds(std::string_view text);

struct RunSpec {
  SimConfig config;
  SchemeSpec scheme;
  int episodes = 1;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path out = "out";
  bool slot_log = false;
  bool channel_trace = false;

  void validate() const;
};

struct RunOutcome {
  std::string scheme;
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;
  std::filesystem::path dir;
};

/// Seed of episode `index` of a run seeded with `seed` (episode 0 uses `seed` itself).
std::uint64_t episode_seed(std::uint64_t seed, int index);

/// Runs every seed of one scheme and writes <out>/<scheme>/seed_<s>/{metrics.json,frames.csv,...}.
/// Seeds run on up to `jobs` threads; outputs do not depend on `jobs`.
std::vector<RunOutcome> run(const RunSpec& spec, int jobs = 1);

/// The metrics.json document of one (scheme, seed) run.
std::string metrics_document(const std::string& scheme, std::uint64_t seed, const std::string& config_hash,
                             const std::vector<EpisodeMetrics>& episodes, const EpisodeMetrics& aggregate);

struct SchemeSummary {
  std::string scheme;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;  // ascending
  std::vector<EpisodeMetrics> per_seed;
  double avg_level = 0.0;
  double switching_rate = 0.0;
  double success_rate = 0.0;
};

/// Reads <out>/<scheme>/seed_*/metrics.json.
SchemeSummary load_summary(const std::filesystem::path& out, const std::string& scheme);
/// Scheme directories found under `out`, sorted.
std::vector<std::string> list_schemes(const std::filesystem::path& out);

inline constexpr std::size_t kReportMetrics = 3;
inline constexpr const char* kReportMetricNames[kReportMetrics] = {"avg_level", "switching_rate", "success_rate"};

struct ReportRow {
  std::string scheme;
  double raw[kReportMetrics] = {};
  /// Normalized to the best scheme (best = 1); NaN when the scheme was excluded.
  double normalized[kReportMetrics] = {};
};

struct ComparisonReport {
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<ReportRow> rows;
  std::vector<SchemeSummary> schemes;
  std::vector<std::string> warnings;
};

/// Throws ConfigError for fewer than 2 schemes or mismatched config hashes / seed sets.
ComparisonReport compare(std::vector<SchemeSummary> schemes);

std::string report_text(const ComparisonReport& report);
std::string report_csv(const ComparisonReport& report);
std::string report_long_csv(const ComparisonReport& report);

/// Writes report.txt, report.csv and report_long.csv into `dir`.
void write_report(const ComparisonReport& report, const std::filesystem::path& dir);

/// Builds the report for `schemes` (all schemes found when empty) from stored metrics files.
ComparisonReport report_from(const std::filesystem::path& out, const std::vector<std::string>& schemes = {});

}  // namespace vrsim
