// vrsim: scenario runner, scheme comparison and protocol server.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>

#include "vrsim/config.hpp"
#include "vrsim/error.hpp"
#include "vrsim/proto.hpp"
#include "vrsim/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitAborted = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("vrsim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("VRSIM_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    if (comma > pos) items.push_back(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return items;
}

void print_outcome(const vrsim::RunOutcome& o) {
  std::cout << o.scheme << " seed " << o.seed << ": avg_level=" << o.metrics.avg_level
            << " switching_rate=" << o.metrics.switching_rate << " success_rate=" << o.metrics.success_rate
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"VR streaming dual-timescale simulator"};
  std::string config_path, controller = "equal", seeds_text = "1", out_dir = "out", compare_text, report_dir;
  std::optional<std::string> resolution;
  int episodes = 1, jobs = 1;
  unsigned short port = vrsim::proto::kDefaultPort;
  bool serve = false, use_stdio = false, multi_session = false, default_config = false, downgrade_only = false,
       slot_log = false, channel_trace = false;

  app.add_option("--config", config_path, "Config file (defaults built in when omitted)");
  app.add_option("--controller", controller, "Allocation controller: equal|pf|urgency|cc|agent");
  app.add_option("--resolution", resolution, "Resolution controller: fixed:<k>|cc|threshold|threshold:<theta>|agent");
  app.add_option("--seeds", seeds_text, "Seeds, e.g. 1,2,3 or 1-10");
  app.add_option("--episodes", episodes, "Episodes per seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--compare", compare_text, "Comma-separated schemes alloc+res to run and compare");
  app.add_option("--report-from", report_dir, "Rebuild the comparison report from stored results");
  app.add_option("--jobs", jobs, "Parallel runs");
  app.add_flag("--slot-log", slot_log, "Also write the per-slot log");
  app.add_flag("--channel-trace", channel_trace, "Also write the channel trace");
  app.add_flag("--paper-reward", downgrade_only, "Use the downgrade-only transition penalty (theta_up = 0)");
  app.add_flag("--default-config", default_config, "Print the default config and exit");
  auto* serve_flag = app.add_flag("--serve", serve, "Serve the environment over the wire protocol");
  app.add_option("--port", port, "TCP port for --serve")->needs(serve_flag);
  app.add_flag("--stdio", use_stdio, "Serve over stdin/stdout")->needs(serve_flag);
  app.add_flag("--multi-session", multi_session, "Serve TCP connections concurrently")->needs(serve_flag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadConfig;
  }

  try {
    if (default_config) {
      vrsim::SimConfig cfg;
      cfg.finalize();
      std::cout << vrsim::to_config_text(cfg);
      return kExitOk;
    }

    vrsim::SimConfig config;
    if (config_path.empty()) {
      config.finalize();
    } else {
      config = vrsim::load_config(config_path);
    }
    if (downgrade_only) {
      config.env.qoe.theta_up = 0.0;
      config.finalize();
    }
    spdlog::info("config hash {}", vrsim::config_hash(config));

    if (!report_dir.empty()) {
      const auto report = vrsim::report_from(report_dir, split_list(compare_text));
      for (const auto& w : report.warnings) spdlog::warn("{}", w);
      vrsim::write_report(report, report_dir);
      std::cout << vrsim::report_text(report);
      return kExitOk;
    }

    if (serve) {
      if (controller != "agent" && controller != "equal")
        throw vrsim::ConfigError("--serve exposes the environment to an external agent; use --controller agent");
      if (use_stdio) {
        std::ios::sync_with_stdio(false);
        return vrsim::proto::serve_stream(config, std::cin, std::cout) ? kExitOk : kExitFailure;
      }
      vrsim::proto::TcpServer server(config, port, multi_session);
      spdlog::info("listening on 127.0.0.1:{}", server.port());
      server.run();
      return kExitOk;
    }

    const auto seeds = vrsim::parse_seeds(seeds_text);

    if (!compare_text.empty()) {
      const auto names = split_list(compare_text);
      if (names.size() < 2) throw vrsim::ConfigError("need ≥ 2 schemes");
      std::vector<std::string> scheme_names;
      std::vector<vrsim::RunSpec> specs;
      for (const auto& n : names) {
        vrsim::RunSpec spec{config, vrsim::parse_scheme(n), episodes, seeds, out_dir, slot_log, channel_trace};
        spec.validate();
        scheme_names.push_back(spec.scheme.name());
        specs.push_back(std::move(spec));
      }
      for (const auto& spec : specs)
        for (const auto& o : vrsim::run(spec, jobs)) print_outcome(o);
      const auto report = vrsim::report_from(out_dir, scheme_names);
      for (const auto& w : report.warnings) spdlog::warn("{}", w);
      vrsim::write_report(report, out_dir);
      std::cout << "\n" << vrsim::report_text(report);
      return kExitOk;
    }

    vrsim::SchemeSpec scheme;
    if (controller == "cc") {
      if (resolution && *resolution != "cc")
        throw vrsim::ConfigError("--controller cc selects the cc resolution controller; drop --resolution");
      scheme = {"equal", "cc"};
    } else {
      scheme = {controller, resolution.value_or("cc")};
    }
    vrsim::RunSpec spec{config, scheme, episodes, seeds, out_dir, slot_log, channel_trace};
    for (const auto& o : vrsim::run(spec, jobs)) print_outcome(o);
    return kExitOk;
  } catch (const vrsim::ScenarioAborted& e) {
    spdlog::error("episode aborted: {}", e.what());
    return kExitAborted;
  } catch (const vrsim::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitBadConfig;
  } catch (const vrsim::ParseError& e) {
    spdlog::error("config: {}", e.what());
    return kExitBadConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
}
