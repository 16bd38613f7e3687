#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vrsim/config.hpp"
#include "vrsim/error.hpp"
#include "vrsim/json.hpp"
#include "vrsim/proto.hpp"
#include "vrsim/runner.hpp"

namespace py = pybind11;
using namespace vrsim;

namespace {

py::object to_py(const Json& j) {
  switch (j.type()) {
    case Json::value_t::null: return py::none();
    case Json::value_t::boolean: return py::bool_(j.get<bool>());
    case Json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case Json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case Json::value_t::number_float: return py::float_(j.get<double>());
    case Json::value_t::string: return py::str(j.get<std::string>());
    case Json::value_t::array: {
      py::list l;
      for (const auto& v : j) l.append(to_py(v));
      return std::move(l);
    }
    case Json::value_t::object: {
      py::dict d;
      for (auto it = j.begin(); it != j.end(); ++it) d[py::str(it.key())] = to_py(it.value());
      return std::move(d);
    }
    default: throw std::domain_error("unsupported JSON value");
  }
}

SimConfig config_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

py::dict slot_events(const SlotEvents& e) {
  py::dict d;
  d["slot"] = e.slot;
  d["shares"] = e.shares;
  d["renormalized"] = e.renormalized;
  d["capacity_bits"] = e.capacity_bits;
  d["consumed_bits"] = e.consumed_bits;
  d["queued_bits"] = e.queued_bits;
  d["delivered"] = e.delivered;
  d["failed"] = e.failed;
  std::vector<double> snr;
  for (const auto& c : e.channel) snr.push_back(c.snr_db());
  d["snr_db"] = snr;
  return d;
}

}  // namespace

PYBIND11_MODULE(_vrsim, m) {
  m.doc() = "VR streaming dual-timescale simulator core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<SequencingError>(m, "SequencingError", PyExc_RuntimeError);
  py::register_exception<ScenarioAborted>(m, "ScenarioAborted", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<SimConfig>(m, "Config")
      .def(py::init([] {
        SimConfig c;
        c.finalize();
        return c;
      }))
      .def_static("from_text", &config_from_text, py::arg("text"))
      .def_static("load", [](const std::string& path) { return load_config(path); }, py::arg("path"))
      .def("text", [](const SimConfig& c) { return to_config_text(c); })
      .def("hash", [](const SimConfig& c) { return config_hash(c); })
      .def_property_readonly("n_users", [](const SimConfig& c) { return c.env.n_users; })
      .def_property_readonly("slots_per_frame", [](const SimConfig& c) { return c.env.slots_per_frame; })
      .def_property_readonly("episode_frames", [](const SimConfig& c) { return c.env.episode_frames; })
      .def_property_readonly("n_levels", [](const SimConfig& c) { return c.env.ladder.size(); });

  py::class_<Environment>(m, "Environment")
      .def(py::init([](const SimConfig& c) { return Environment(c.env); }), py::arg("config"))
      .def("reset", &Environment::reset, py::arg("seed") = py::none())
      .def("step_slot",
           [](Environment& env, const std::vector<double>& shares) {
             auto r = env.step_slot(shares);
             return py::make_tuple(r.obs, to_py(to_json(r.reward)), slot_events(r.events));
           },
           py::arg("shares"))
      .def("step_frame",
           [](Environment& env, const std::vector<Level>& levels) {
             auto r = env.step_frame(levels);
             py::list rewards;
             for (const auto& w : r.rewards) rewards.append(to_py(to_json(w)));
             return py::make_tuple(r.obs, rewards, r.done);
           },
           py::arg("levels"))
      .def("observe_su", &Environment::observe_su)
      .def("observe_rs", &Environment::observe_rs)
      .def("layout_su", [](const Environment& env) { return to_py(to_json(env.layout_su())); })
      .def("layout_rs", [](const Environment& env) { return to_py(to_json(env.layout_rs())); })
      .def("metrics", [](const Environment& env) { return to_py(to_json(env.metrics())); })
      .def_property_readonly("done", &Environment::done)
      .def_property_readonly("now", &Environment::now)
      .def_property_readonly("frame_index", &Environment::frame_index)
      .def_property_readonly("awaiting_frame_step", &Environment::awaiting_frame_step);

  m.def(
      "run_scenario",
      [](const SimConfig& c, const std::string& allocation, const std::string& resolution, std::uint64_t seed) {
        auto alloc = make_allocation(allocation, c);
        auto res = make_resolution(resolution, c);
        return to_py(to_json(vrsim::run_scenario(c.env, *alloc, *res, seed).metrics));
      },
      py::arg("config"), py::arg("allocation"), py::arg("resolution"), py::arg("seed"));

  m.def(
      "transition_penalty",
      [](Level prev, Level next, const SimConfig& c) { return vrsim::transition_penalty(prev, next, c.env.qoe); },
      py::arg("prev"), py::arg("next"), py::arg("config"));
  m.def("equal_allocation", &equal_allocation, py::arg("n_users"));
  m.def(
      "pf_select",
      [](const std::vector<double>& rates, const std::vector<double>& avg) { return vrsim::pf_select(rates, avg); },
      py::arg("instant_rates"), py::arg("avg_throughput"));
  m.def(
      "urgency_allocation",
      [](const std::vector<std::tuple<bool, Bits, Slot>>& demand, Slot now) {
        std::vector<PendingDemand> d;
        for (const auto& [pending, bits, deadline] : demand) d.push_back({pending, bits, deadline});
        return vrsim::urgency_allocation(d, now);
      },
      py::arg("demand"), py::arg("now"));

  m.def("canonical_json", [](const std::string& text) { return canonical_dump(Json::parse(text)); },
        py::arg("text"));

  py::class_<proto::Session>(m, "Session")
      .def(py::init<SimConfig>(), py::arg("config"))
      .def("handle_line", &proto::Session::handle_line, py::arg("line"))
      .def_property_readonly("phase", [](const proto::Session& s) { return proto::to_string(s.phase()); })
      .def_property_readonly("closed", &proto::Session::closed);
  m.def("reference_config_v1", &proto::reference_config_v1);
  m.def("reference_script_v1", &proto::reference_script_v1, py::arg("config"));
  m.def("golden_transcript", &proto::golden_transcript, py::arg("config"), py::arg("client_lines"));
  m.attr("PROTO_VERSION") = proto::kVersion;
}
