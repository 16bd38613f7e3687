// Reference data and brute-force oracles shared by unit and acceptance tests.
#pragma once

#include <optional>
#include <vector>

#include "vrsim/baselines.hpp"

namespace oracle {

struct UrgencyCase {
  vrsim::Slot now;
  std::vector<vrsim::PendingDemand> demand;
  std::vector<double> expected;
};

// Expected shares worked out by hand from remaining / max(1, deadline - now).
inline std::vector<UrgencyCase> urgency_cases() {
  using D = vrsim::PendingDemand;
  return {
      {0, {D{true, 1000, 5}}, {1.0}},
      {0, {D{true, 1000, 2}, D{true, 1000, 4}}, {2.0 / 3, 1.0 / 3}},
      {0, {D{}, D{}}, {0.0, 0.0}},
      {0, {D{true, 1000, 4}, D{true, 3000, 4}}, {0.25, 0.75}},
      {0, {D{true, 1000, 1}, D{true, 1000, 1}, D{true, 1000, 1}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}},
      {0, {D{true, 600, 3}, D{}, D{true, 200, 1}}, {0.5, 0.0, 0.5}},
      {10, {D{true, 100, 8}, D{true, 100, 20}}, {10.0 / 11, 1.0 / 11}},
      {0, {D{true, 5000, 10}, D{true, 5000, 5}}, {1.0 / 3, 2.0 / 3}},
      {0, {D{true, 1, 1}, D{true, 1, 2}, D{true, 1, 4}}, {4.0 / 7, 2.0 / 7, 1.0 / 7}},
      {0,
       {D{true, 12000, 20}, D{true, 24000, 20}, D{true, 36000, 20}, D{true, 48000, 20}},
       {0.1, 0.2, 0.3, 0.4}},
      {0, {D{true, 0, 5}, D{true, 100, 5}}, {0.0, 1.0}},
      {0, {D{true, 300, 3}, D{true, 200, 2}}, {0.5, 0.5}},
      {0, {D{true, 1000, 2}, D{true, 1000, 3}, D{true, 1000, 6}}, {0.5, 1.0 / 3, 1.0 / 6}},
      {5, {D{true, 400, 9}, D{true, 400, 7}}, {1.0 / 3, 2.0 / 3}},
      {0, {D{true, 7, 7}, D{}}, {1.0, 0.0}},
      {0, {D{true, 100, 1}, D{true, 900, 1}}, {0.1, 0.9}},
      {19, {D{true, 1000, 20}, D{true, 3000, 20}}, {0.25, 0.75}},
      {0, {D{true, 2000, 4}, D{true, 1000, 1}, D{true, 3000, 6}}, {0.25, 0.5, 0.25}},
      {0,
       {D{true, 10, 3}, D{true, 10, 3}, D{true, 10, 3}, D{true, 10, 3}, D{true, 10, 3}},
       {0.2, 0.2, 0.2, 0.2, 0.2}},
      {0, {D{true, 100, 100}, D{true, 100, 1}}, {1.0 / 101, 100.0 / 101}},
  };
}

// Argmax of rate / average over users with a positive rate; lowest index on ties.
inline std::optional<std::size_t> pf_argmax(const std::vector<double>& rates, const std::vector<double>& avg) {
  std::vector<double> metric(rates.size(), -1.0);
  for (std::size_t u = 0; u < rates.size(); ++u)
    if (rates[u] > 0) metric[u] = rates[u] / avg[u];
  double best = -1.0;
  for (double m : metric)
    if (m > best) best = m;
  if (best < 0) return std::nullopt;
  for (std::size_t u = 0; u < metric.size(); ++u)
    if (metric[u] == best) return u;
  return std::nullopt;
}

}  // namespace oracle
