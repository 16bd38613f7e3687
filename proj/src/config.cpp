#include "vrsim/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "vrsim/error.hpp"
#include "vrsim/format.hpp"

namespace vrsim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(std::size_t line, const std::string& what) { throw ParseError(what, line); }

template <typename T>
T parse_number(std::string_view raw, std::size_t line) {
  raw = trim(raw);
  T v{};
  auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc{} || ptr != raw.data() + raw.size()) bad(line, "expected a number, got '" + std::string(raw) + "'");
  return v;
}

bool parse_bool(std::string_view raw, std::size_t line) {
  raw = trim(raw);
  if (raw == "true") return true;
  if (raw == "false") return false;
  bad(line, "expected true or false, got '" + std::string(raw) + "'");
}

std::string parse_string(std::string_view raw, std::size_t line) {
  raw = trim(raw);
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') bad(line, "expected a quoted string");
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\\' && i + 2 < raw.size()) c = raw[++i];
    out += c;
  }
  return out;
}

std::vector<std::string_view> split_list(std::string_view raw, std::size_t line) {
  raw = trim(raw);
  if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') bad(line, "expected a [list]");
  raw = trim(raw.substr(1, raw.size() - 2));
  std::vector<std::string_view> items;
  if (raw.empty()) return items;
  bool in_str = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '"' && (i == 0 || raw[i - 1] != '\\')) in_str = !in_str;
    if (raw[i] == ',' && !in_str) {
      items.push_back(trim(raw.substr(start, i - start)));
      start = i + 1;
    }
  }
  items.push_back(trim(raw.substr(start)));
  return items;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

using Setter = std::function<void(SimConfig&, std::string_view, std::size_t)>;
using Getter = std::function<std::string(const SimConfig&)>;

struct Binding {
  std::string section;
  std::string key;
  Setter set;
  Getter get;
};

template <typename Access>
Binding dbl(const char* section, const char* key, Access access) {
  return {section, key, [access](SimConfig& c, std::string_view v, std::size_t l) { access(c) = parse_number<double>(v, l); },
          [access](const SimConfig& c) { return format_double(access(const_cast<SimConfig&>(c))); }};
}

template <typename T, typename Access>
Binding integer(const char* section, const char* key, Access access) {
  return {section, key, [access](SimConfig& c, std::string_view v, std::size_t l) { access(c) = parse_number<T>(v, l); },
          [access](const SimConfig& c) { return std::to_string(access(const_cast<SimConfig&>(c))); }};
}

template <typename Access>
Binding boolean(const char* section, const char* key, Access access) {
  return {section, key, [access](SimConfig& c, std::string_view v, std::size_t l) { access(c) = parse_bool(v, l); },
          [access](const SimConfig& c) { return std::string(access(const_cast<SimConfig&>(c)) ? "true" : "false"); }};
}

template <typename Access>
Binding str(const char* section, const char* key, Access access) {
  return {section, key, [access](SimConfig& c, std::string_view v, std::size_t l) { access(c) = parse_string(v, l); },
          [access](const SimConfig& c) { return quote(access(const_cast<SimConfig&>(c))); }};
}

template <typename Access>
Binding dbl_list(const char* section, const char* key, Access access) {
  return {section, key,
          [access](SimConfig& c, std::string_view v, std::size_t l) {
            auto& dst = access(c);
            dst.clear();
            for (auto item : split_list(v, l)) dst.push_back(parse_number<double>(item, l));
          },
          [access](const SimConfig& c) {
            std::string out = "[";
            const auto& src = access(const_cast<SimConfig&>(c));
            for (std::size_t i = 0; i < src.size(); ++i) out += (i ? ", " : "") + format_double(src[i]);
            return out + "]";
          }};
}

template <typename Access>
Binding str_list(const char* section, const char* key, Access access) {
  return {section, key,
          [access](SimConfig& c, std::string_view v, std::size_t l) {
            auto& dst = access(c);
            dst.clear();
            for (auto item : split_list(v, l)) dst.push_back(parse_string(item, l));
          },
          [access](const SimConfig& c) {
            std::string out = "[";
            const auto& src = access(const_cast<SimConfig&>(c));
            for (std::size_t i = 0; i < src.size(); ++i) out += (i ? ", " : "") + quote(src[i]);
            return out + "]";
          }};
}

Binding channel_mode() {
  return {"channel", "mode",
          [](SimConfig& c, std::string_view v, std::size_t l) {
            const auto s = parse_string(v, l);
            if (s == "mobility")
              c.env.channel.mode = ChannelMode::kMobility;
            else if (s == "piecewise")
              c.env.channel.mode = ChannelMode::kPiecewise;
            else
              bad(l, "channel.mode must be \"mobility\" or \"piecewise\"");
          },
          [](const SimConfig& c) {
            return quote(c.env.channel.mode == ChannelMode::kPiecewise ? "piecewise" : "mobility");
          }};
}

#define VR_FIELD(expr) [](SimConfig& c) -> auto& { return expr; }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> b = {
      integer<std::size_t>("env", "n_users", VR_FIELD(c.env.n_users)),
      dbl("env", "slot_len", VR_FIELD(c.env.slot_len)),
      integer<int>("env", "slots_per_frame", VR_FIELD(c.env.slots_per_frame)),
      integer<std::int64_t>("env", "episode_frames", VR_FIELD(c.env.episode_frames)),
      integer<std::uint64_t>("env", "seed", VR_FIELD(c.env.seed)),
      integer<int>("env", "initial_level", VR_FIELD(c.env.initial_level)),
      dbl("env", "deadline_fraction", VR_FIELD(c.env.deadline_fraction)),
      integer<int>("env", "signaling_delay_frames", VR_FIELD(c.env.signaling_delay_frames)),
      integer<int>("env", "history_slots", VR_FIELD(c.env.history_slots)),
      integer<int>("env", "history_frames", VR_FIELD(c.env.history_frames)),

      dbl("reward", "w_success", VR_FIELD(c.env.su_reward.w_success)),
      dbl("reward", "w_waste", VR_FIELD(c.env.su_reward.w_waste)),
      dbl("reward", "w_required_rate", VR_FIELD(c.env.su_reward.w_required_rate)),

      channel_mode(),
      dbl("channel", "carrier_freq", VR_FIELD(c.env.channel.carrier_freq)),
      dbl("channel", "noise_psd", VR_FIELD(c.env.channel.noise_psd)),
      dbl("channel", "tx_power", VR_FIELD(c.env.channel.tx_power)),
      dbl("channel", "total_bandwidth", VR_FIELD(c.env.channel.total_bandwidth)),
      dbl("channel", "bs_antenna_height", VR_FIELD(c.env.channel.bs_antenna_height)),
      dbl("channel", "ue_antenna_height", VR_FIELD(c.env.channel.ue_antenna_height)),
      dbl("channel", "shadow_std", VR_FIELD(c.env.channel.shadow_std)),
      dbl("channel", "shadow_corr_dist", VR_FIELD(c.env.channel.shadow_corr_dist)),
      dbl("channel", "pathloss_exponent", VR_FIELD(c.env.channel.pathloss_exponent)),
      dbl("channel", "cell_side", VR_FIELD(c.env.channel.cell_side)),
      dbl("channel", "min_distance", VR_FIELD(c.env.channel.min_distance)),
      dbl("channel", "speed", VR_FIELD(c.env.channel.speed)),
      dbl("channel", "heading_std", VR_FIELD(c.env.channel.heading_std)),
      boolean("channel", "rayleigh_fading", VR_FIELD(c.env.channel.rayleigh_fading)),
      dbl_list("channel", "piecewise_means_db", VR_FIELD(c.env.channel.piecewise_means_db)),
      dbl_list("channel", "piecewise_user_offsets_db", VR_FIELD(c.env.channel.piecewise_user_offsets_db)),
      integer<std::int64_t>("channel", "piecewise_segment_slots", VR_FIELD(c.env.channel.piecewise_segment_slots)),
      dbl("channel", "piecewise_slot_std_db", VR_FIELD(c.env.channel.piecewise_slot_std_db)),

      dbl("media", "bits_per_pixel", VR_FIELD(c.media.bits_per_pixel)),
      dbl("media", "size_cv", VR_FIELD(c.media.size_cv)),
      dbl_list("media", "mean_frame_bits", VR_FIELD(c.media.mean_frame_bits)),
      str_list("media", "labels", VR_FIELD(c.media.labels)),
      integer<std::int64_t>("media", "packet_bits", VR_FIELD(c.env.packet_bits)),
      str("media", "trace", VR_FIELD(c.media.trace)),

      dbl("qoe", "w_level", VR_FIELD(c.env.qoe.w_level)),
      dbl("qoe", "theta_down", VR_FIELD(c.env.qoe.theta_down)),
      dbl("qoe", "theta_up", VR_FIELD(c.env.qoe.theta_up)),
      dbl("qoe", "kappa_large", VR_FIELD(c.env.qoe.kappa_large)),
      integer<int>("qoe", "jump_threshold", VR_FIELD(c.env.qoe.jump_threshold)),
      dbl("qoe", "w_fail", VR_FIELD(c.env.qoe.w_fail)),

      dbl("baselines", "pf_horizon", VR_FIELD(c.baselines.pf_horizon)),
      dbl("baselines", "cc_delay_target", VR_FIELD(c.baselines.cc.delay_target)),
      dbl("baselines", "cc_beta", VR_FIELD(c.baselines.cc.beta)),
      dbl("baselines", "cc_increase_step", VR_FIELD(c.baselines.cc.increase_step)),
      dbl("baselines", "cc_min_rate", VR_FIELD(c.baselines.cc.min_rate)),
      dbl("baselines", "cc_max_rate", VR_FIELD(c.baselines.cc.max_rate)),
      dbl("baselines", "cc_initial_rate", VR_FIELD(c.baselines.cc.initial_rate)),
      dbl("baselines", "threshold_horizon_frames", VR_FIELD(c.baselines.threshold.horizon_frames)),
      integer<int>("baselines", "threshold_window_frames", VR_FIELD(c.baselines.threshold.window_frames)),
      dbl("baselines", "threshold_margin_cv", VR_FIELD(c.baselines.threshold.margin_cv)),
  };
  return b;
}

#undef VR_FIELD

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

}  // namespace

void SimConfig::finalize() {
  if (media.mean_frame_bits.empty()) {
    env.ladder = ResolutionLadder::standard(media.bits_per_pixel, media.size_cv);
    if (!media.labels.empty()) {
      if (media.labels.size() != env.ladder.size()) throw ConfigError("media.labels must have one entry per level");
      for (std::size_t i = 0; i < media.labels.size(); ++i) env.ladder.levels[i].label = media.labels[i];
    }
  } else {
    if (!media.labels.empty() && media.labels.size() != media.mean_frame_bits.size())
      throw ConfigError("media.labels and media.mean_frame_bits must have the same length");
    env.ladder.levels.clear();
    for (std::size_t i = 0; i < media.mean_frame_bits.size(); ++i)
      env.ladder.levels.push_back({media.labels.empty() ? "L" + std::to_string(i) : media.labels[i],
                                   media.mean_frame_bits[i], media.size_cv});
  }
  if (media.trace.empty()) {
    env.trace.reset();
  } else {
    std::filesystem::path p(media.trace);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    env.trace = std::make_shared<const FrameTrace>(load_trace(p));
  }
  env.validate();
  baselines.cc.validate();
  if (!(baselines.pf_horizon >= 1)) throw ConfigError("baselines.pf_horizon must be >= 1");
  if (!(baselines.threshold.horizon_frames > 0)) throw ConfigError("baselines.threshold_horizon_frames must be > 0");
  if (baselines.threshold.window_frames < 1) throw ConfigError("baselines.threshold_window_frames must be >= 1");
  if (!(baselines.threshold.margin_cv >= 0)) throw ConfigError("baselines.threshold_margin_cv must be >= 0");
}

SimConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  SimConfig cfg;
  cfg.base_dir = base_dir;
  std::string section;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string stripped = strip_comment(raw);
    auto line = trim(stripped);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad(lineno, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) bad(lineno, "expected key = value");
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const Binding* found = nullptr;
    for (const auto& b : bindings())
      if (b.section == section && b.key == key) found = &b;
    if (!found) bad(lineno, "unknown key '" + (section.empty() ? key : section + "." + key) + "'");
    found->set(cfg, value, lineno);
  }
  cfg.finalize();
  return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse_config(in, path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string to_config_text(const SimConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const auto& b : bindings()) {
    if (b.section != section) {
      if (!section.empty()) os << '\n';
      section = b.section;
      os << '[' << section << "]\n";
    }
    os << b.key << " = " << b.get(config) << '\n';
  }
  return os.str();
}

std::string config_hash(const SimConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_config_text(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vrsim
