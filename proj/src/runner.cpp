#include "vrsim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "vrsim/error.hpp"
#include "vrsim/format.hpp"
#include "vrsim/json.hpp"

namespace vrsim {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

template <typename T>
bool parse_exact(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

constexpr std::uint64_t kEpisodeStream = 6;

}  // namespace

const std::vector<std::string>& allocation_names() {
  static const std::vector<std::string> names = {"equal", "pf", "urgency", "cc", "agent"};
  return names;
}

const std::vector<std::string>& resolution_names() {
  static const std::vector<std::string> names = {"fixed:<level>", "cc", "threshold", "threshold:<theta>", "agent"};
  return names;
}

SchemeSpec parse_scheme(std::string_view text) {
  SchemeSpec s;
  const auto plus = text.find('+');
  if (plus != std::string_view::npos) {
    s.allocation = std::string(text.substr(0, plus));
    s.resolution = std::string(text.substr(plus + 1));
  } else if (text == "cc") {
    s.allocation = "equal";
    s.resolution = "cc";
  } else {
    s.allocation = std::string(text);
  }
  if (s.allocation.empty() || s.resolution.empty())
    throw ConfigError("scheme '" + std::string(text) + "' must be written alloc+res");
  if (s.allocation == "cc")
    throw ConfigError("'cc' is a resolution controller; write equal+cc or pair it with another allocation");
  return s;
}

std::unique_ptr<AllocationPolicy> make_allocation(const std::string& name, const SimConfig& config) {
  if (name == "equal") return std::make_unique<EqualAllocator>();
  if (name == "pf") return std::make_unique<PfAllocator>(config.baselines.pf_horizon);
  if (name == "urgency") return std::make_unique<UrgencyAllocator>();
  if (name == "agent") throw ConfigError("controller 'agent' is only available with --serve");
  throw ConfigError("unknown controller '" + name + "'; valid: " + join(allocation_names(), ", "));
}

std::unique_ptr<ResolutionPolicy> make_resolution(const std::string& name, const SimConfig& config) {
  if (name == "cc") return std::make_unique<CcResolution>(config.baselines.cc);
  if (name == "threshold") return std::make_unique<ThresholdResolution>(config.env.qoe, config.baselines.threshold);
  if (name.rfind("threshold:", 0) == 0) {
    const auto arg = std::string_view(name).substr(10);
    double theta = 0;
    if (!parse_exact(arg, theta) || !std::isfinite(theta) || theta < 0)
      throw ConfigError("bad threshold theta '" + std::string(arg) + "'");
    auto qoe = config.env.qoe;
    qoe.theta_down = theta;
    return std::make_unique<ThresholdResolution>(qoe, config.baselines.threshold);
  }
  if (name.rfind("fixed:", 0) == 0) {
    const auto arg = std::string_view(name).substr(6);
    Level level = 0;
    if (!parse_exact(arg, level) || !config.env.ladder.contains(level))
      throw ConfigError("bad fixed level '" + std::string(arg) + "'; ladder has levels 0.." +
                        std::to_string(config.env.ladder.top()));
    return std::make_unique<FixedResolution>(level);
  }
  if (name == "agent") throw ConfigError("resolution 'agent' is only available with --serve");
  throw ConfigError("unknown resolution controller '" + name + "'; valid: " + join(resolution_names(), ", "));
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const auto item = text.substr(pos, comma - pos);
    const auto dash = item.find('-');
    std::uint64_t a = 0, b = 0;
    if (dash == std::string_view::npos) {
      if (!parse_exact(item, a)) throw ConfigError("bad seed '" + std::string(item) + "'");
      seeds.push_back(a);
    } else {
      if (!parse_exact(item.substr(0, dash), a) || !parse_exact(item.substr(dash + 1), b) || b < a)
        throw ConfigError("bad seed range '" + std::string(item) + "'");
      for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    }
    pos = comma + 1;
  }
  std::set<std::uint64_t> seen;
  for (auto s : seeds)
    if (!seen.insert(s).second) throw ConfigError("seed " + std::to_string(s) + " listed twice");
  return seeds;
}

void RunSpec::validate() const {
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  std::set<std::uint64_t> seen(seeds.begin(), seeds.end());
  if (seen.size() != seeds.size()) throw ConfigError("seeds must be distinct");
  make_allocation(scheme.allocation, config);
  make_resolution(scheme.resolution, config);
}

std::uint64_t episode_seed(std::uint64_t seed, int index) {
  return index == 0 ? seed : derive_seed(seed, kEpisodeStream, static_cast<std::uint64_t>(index));
}

std::string metrics_document(const std::string& scheme, std::uint64_t seed, const std::string& config_hash,
                             const std::vector<EpisodeMetrics>& episodes, const EpisodeMetrics& aggregate) {
  Json per_episode = Json::array();
  for (const auto& m : episodes) per_episode.push_back(to_json(m));
  const Json doc = {{"scheme", scheme},
                    {"seed", seed},
                    {"config_hash", config_hash},
                    {"episodes", episodes.size()},
                    {"metrics", to_json(aggregate)},
                    {"per_episode", per_episode}};
  return canonical_dump(doc) + "\n";
}

namespace {

RunOutcome run_one(const RunSpec& spec, std::uint64_t seed, const std::string& hash) {
  const auto scheme = spec.scheme.name();
  const fs::path dir = spec.out / scheme / ("seed_" + std::to_string(seed));
  fs::create_directories(dir);

  std::ofstream frames(dir / "frames.csv", std::ios::binary);
  std::ofstream slots, channel;
  if (spec.slot_log) slots.open(dir / "slots.csv", std::ios::binary);
  if (spec.channel_trace) channel.open(dir / "channel.csv", std::ios::binary);

  ScenarioSinks sinks;
  sinks.frame_log = &frames;
  if (spec.slot_log) sinks.slot_log = &slots;
  if (spec.channel_trace) sinks.channel_trace = &channel;
  write_log_headers(sinks);

  std::vector<std::vector<TransitionEvent>> events(spec.config.env.n_users);
  std::vector<EpisodeMetrics> episodes;
  for (int ep = 0; ep < spec.episodes; ++ep) {
    auto alloc = make_allocation(spec.scheme.allocation, spec.config);
    auto res = make_resolution(spec.scheme.resolution, spec.config);
    sinks.episode = ep;
    auto r = run_scenario(spec.config.env, *alloc, *res, episode_seed(seed, ep), sinks);
    for (std::size_t u = 0; u < events.size(); ++u)
      events[u].insert(events[u].end(), r.events[u].begin(), r.events[u].end());
    episodes.push_back(r.metrics);
  }
  const auto aggregate = spec.episodes == 1 ? episodes.front() : session_metrics(events, spec.config.env.qoe);
  write_file(dir / "metrics.json", metrics_document(scheme, seed, hash, episodes, aggregate));
  return {scheme, seed, aggregate, dir};
}

}  // namespace

std::vector<RunOutcome> run(const RunSpec& spec, int jobs) {
  spec.validate();
  const auto hash = config_hash(spec.config);
  const std::size_t n = spec.seeds.size();
  std::vector<RunOutcome> outcomes(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        outcomes[i] = run_one(spec, spec.seeds[i], hash);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp(jobs, 1, static_cast<int>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outcomes;
}

std::vector<std::string> list_schemes(const fs::path& out) {
  std::vector<std::string> schemes;
  if (!fs::is_directory(out)) throw ConfigError("no such output directory: " + out.string());
  for (const auto& entry : fs::directory_iterator(out)) {
    if (!entry.is_directory()) continue;
    bool has_seed = false;
    for (const auto& sub : fs::directory_iterator(entry.path()))
      has_seed |= sub.is_directory() && sub.path().filename().string().rfind("seed_", 0) == 0;
    if (has_seed) schemes.push_back(entry.path().filename().string());
  }
  std::sort(schemes.begin(), schemes.end());
  return schemes;
}

SchemeSummary load_summary(const fs::path& out, const std::string& scheme) {
  const fs::path dir = out / scheme;
  if (!fs::is_directory(dir)) throw ConfigError("no results for scheme '" + scheme + "' in " + out.string());
  std::vector<std::pair<std::uint64_t, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    std::uint64_t seed = 0;
    if (entry.is_directory() && name.rfind("seed_", 0) == 0 && parse_exact(std::string_view(name).substr(5), seed))
      files.emplace_back(seed, entry.path() / "metrics.json");
  }
  if (files.empty()) throw ConfigError("no seed_* results for scheme '" + scheme + "'");
  std::sort(files.begin(), files.end());

  SchemeSummary s;
  s.scheme = scheme;
  for (const auto& [seed, path] : files) {
    Json doc;
    try {
      doc = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    const auto hash = doc.at("config_hash").get<std::string>();
    if (s.seeds.empty())
      s.config_hash = hash;
    else if (hash != s.config_hash)
      throw ConfigError("scheme '" + scheme + "' mixes config hashes " + s.config_hash + " and " + hash);
    s.seeds.push_back(seed);
    s.per_seed.push_back(metrics_from_json(doc.at("metrics")));
  }
  for (const auto& m : s.per_seed) {
    s.avg_level += m.avg_level;
    s.switching_rate += m.switching_rate;
    s.success_rate += m.success_rate;
  }
  const auto k = static_cast<double>(s.per_seed.size());
  s.avg_level /= k;
  s.switching_rate /= k;
  s.success_rate /= k;
  return s;
}

ComparisonReport compare(std::vector<SchemeSummary> schemes) {
  if (schemes.size() < 2) throw ConfigError("need ≥ 2 schemes");
  ComparisonReport report;
  report.config_hash = schemes.front().config_hash;
  report.seeds = schemes.front().seeds;
  for (const auto& s : schemes) {
    if (s.config_hash != report.config_hash)
      throw ConfigError("mismatched configs: '" + s.scheme + "' has config hash " + s.config_hash + ", '" +
                        schemes.front().scheme + "' has " + report.config_hash);
    if (s.seeds != report.seeds)
      throw ConfigError("mismatched seeds between '" + s.scheme + "' and '" + schemes.front().scheme + "'");
  }

  for (const auto& s : schemes) {
    ReportRow row;
    row.scheme = s.scheme;
    row.raw[0] = s.avg_level;
    row.raw[1] = s.switching_rate;
    row.raw[2] = s.success_rate;
    report.rows.push_back(row);
  }
  const bool lower_is_better[kReportMetrics] = {false, true, false};
  for (std::size_t m = 0; m < kReportMetrics; ++m) {
    double best = lower_is_better[m] ? std::numeric_limits<double>::infinity() : 0.0;
    for (const auto& row : report.rows)
      if (row.raw[m] > 0) best = lower_is_better[m] ? std::min(best, row.raw[m]) : std::max(best, row.raw[m]);
    for (auto& row : report.rows) {
      if (!(row.raw[m] > 0)) {
        row.normalized[m] = std::numeric_limits<double>::quiet_NaN();
        report.warnings.push_back("scheme '" + row.scheme + "' excluded from " + kReportMetricNames[m] +
                                  " normalization (zero value)");
      } else {
        row.normalized[m] = lower_is_better[m] ? best / row.raw[m] : row.raw[m] / best;
      }
    }
  }
  report.schemes = std::move(schemes);
  return report;
}

std::string report_text(const ComparisonReport& r) {
  std::size_t width = 6;
  for (const auto& row : r.rows) width = std::max(width, row.scheme.size());
  std::vector<std::string> seeds;
  for (auto s : r.seeds) seeds.push_back(std::to_string(s));

  std::string out = "config_hash " + r.config_hash + "\nseeds " + join(seeds, ",") + "\n\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %10s %10s %10s   %10s %10s %10s\n", static_cast<int>(width), "scheme",
                "avg_level", "switching", "success", "n_level", "n_switch", "n_success");
  out += buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof(buf), "%-*s %10.4f %10.4f %10.4f  ", static_cast<int>(width), row.scheme.c_str(),
                  row.raw[0], row.raw[1], row.raw[2]);
    out += buf;
    for (double v : row.normalized) {
      if (std::isnan(v))
        std::snprintf(buf, sizeof(buf), " %10s", "-");
      else
        std::snprintf(buf, sizeof(buf), " %10.4f", v);
      out += buf;
    }
    out += '\n';
  }
  if (!r.warnings.empty()) {
    out += "\nwarnings:\n";
    for (const auto& w : r.warnings) out += "  " + w + "\n";
  }
  return out;
}

std::string report_csv(const ComparisonReport& r) {
  std::string out = "scheme";
  for (auto m : kReportMetricNames) out += std::string(",") + m;
  for (auto m : kReportMetricNames) out += std::string(",norm_") + m;
  out += '\n';
  for (const auto& row : r.rows) {
    out += row.scheme;
    for (double v : row.raw) out += "," + format_double(v);
    for (double v : row.normalized) out += "," + (std::isnan(v) ? std::string() : format_double(v));
    out += '\n';
  }
  return out;
}

std::string report_long_csv(const ComparisonReport& r) {
  std::string out = "scheme,metric,kind,seed,value\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    const auto& s = r.schemes[i];
    for (std::size_t m = 0; m < kReportMetrics; ++m) {
      const std::string prefix = row.scheme + "," + kReportMetricNames[m] + ",";
      for (std::size_t k = 0; k < s.seeds.size(); ++k) {
        const auto& pm = s.per_seed[k];
        const double v = m == 0 ? pm.avg_level : m == 1 ? pm.switching_rate : pm.success_rate;
        out += prefix + "raw," + std::to_string(s.seeds[k]) + "," + format_double(v) + "\n";
      }
      out += prefix + "mean,," + format_double(row.raw[m]) + "\n";
      if (!std::isnan(row.normalized[m])) out += prefix + "normalized,," + format_double(row.normalized[m]) + "\n";
    }
  }
  return out;
}

void write_report(const ComparisonReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "report.txt", report_text(report));
  write_file(dir / "report.csv", report_csv(report));
  write_file(dir / "report_long.csv", report_long_csv(report));
}

ComparisonReport report_from(const fs::path& out, const std::vector<std::string>& schemes) {
  const auto names = schemes.empty() ? list_schemes(out) : schemes;
  std::vector<SchemeSummary> summaries;
  for (const auto& s : names) summaries.push_back(load_summary(out, s));
  return compare(std::move(summaries));
}

}  // namespace vrsim
