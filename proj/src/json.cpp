#include "vrsim/json.hpp"

#include <cstdio>

#include "vrsim/format.hpp"

namespace vrsim {

namespace {

void dump_string(const std::string& s, std::string& out) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void dump(const Json& v, std::string& out) {
  switch (v.type()) {
    case Json::value_t::null: out += "null"; break;
    case Json::value_t::boolean: out += v.get<bool>() ? "true" : "false"; break;
    case Json::value_t::number_integer: out += std::to_string(v.get<std::int64_t>()); break;
    case Json::value_t::number_unsigned: out += std::to_string(v.get<std::uint64_t>()); break;
    case Json::value_t::number_float: out += format_double(v.get<double>()); break;
    case Json::value_t::string: dump_string(v.get_ref<const std::string&>(), out); break;
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ',';
        first = false;
        dump(item, out);
      }
      out += ']';
      break;
    }
    case Json::value_t::object: {
      // nlohmann::json keeps object keys in a std::map, so iteration is already in byte order.
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        dump_string(it.key(), out);
        out += ':';
        dump(it.value(), out);
      }
      out += '}';
      break;
    }
    case Json::value_t::binary:
    case Json::value_t::discarded: throw std::domain_error("cannot serialize binary or discarded JSON value");
  }
}

}  // namespace

std::string canonical_dump(const Json& value) {
  std::string out;
  dump(value, out);
  return out;
}

Json to_json(const EpisodeMetrics& m) {
  Json users = Json::array();
  for (const auto& u : m.per_user)
    users.push_back({{"avg_level", u.avg_level},
                     {"switching_rate", u.switching_rate},
                     {"success_rate", u.success_rate},
                     {"frames", u.frames}});
  return {{"avg_level", m.avg_level},     {"switching_rate", m.switching_rate}, {"success_rate", m.success_rate},
          {"mean_qoe", m.mean_qoe},       {"frames", m.frames},                 {"delivered", m.delivered},
          {"failed", m.failed},           {"switches", m.switches},             {"per_user", users},
          {"jain_level", m.jain_level},   {"jain_success", m.jain_success}};
}

EpisodeMetrics metrics_from_json(const Json& j) {
  EpisodeMetrics m;
  m.avg_level = j.at("avg_level").get<double>();
  m.switching_rate = j.at("switching_rate").get<double>();
  m.success_rate = j.at("success_rate").get<double>();
  m.mean_qoe = j.at("mean_qoe").get<double>();
  m.frames = j.at("frames").get<std::size_t>();
  m.delivered = j.at("delivered").get<std::size_t>();
  m.failed = j.at("failed").get<std::size_t>();
  m.switches = j.at("switches").get<std::size_t>();
  m.jain_level = j.at("jain_level").get<double>();
  m.jain_success = j.at("jain_success").get<double>();
  for (const auto& u : j.at("per_user"))
    m.per_user.push_back({u.at("avg_level").get<double>(), u.at("switching_rate").get<double>(),
                          u.at("success_rate").get<double>(), u.at("frames").get<std::size_t>()});
  return m;
}

Json to_json(const ObsLayout& layout) {
  Json fields = Json::array();
  for (const auto& f : layout.fields)
    fields.push_back(
        {{"name", f.name}, {"offset", f.offset}, {"length", f.length}, {"scale", f.scale}, {"unit", f.unit}});
  return {{"agent", layout.agent},
          {"n_users", layout.n_users},
          {"block", layout.block},
          {"size", layout.size()},
          {"order", "user_major"},
          {"fields", fields}};
}

Json to_json(const ResolutionLadder& ladder) {
  Json levels = Json::array();
  for (const auto& l : ladder.levels)
    levels.push_back({{"label", l.label}, {"mean_frame_bits", l.mean_frame_bits}, {"size_cv", l.size_cv}});
  return levels;
}

Json to_json(const SuReward& r) {
  return {{"success_term", r.success_term},
          {"efficiency_term", r.efficiency_term},
          {"required_rate_term", r.required_rate_term},
          {"total", r.total},
          {"frames_delivered", r.frames_delivered},
          {"waste_fraction", r.waste_fraction},
          {"required_rate", r.required_rate}};
}

Json to_json(const RsReward& r) {
  return {{"level_term", r.level_term},
          {"fail_term", r.fail_term},
          {"transition_term", r.transition_term},
          {"total", r.total}};
}

}  // namespace vrsim
