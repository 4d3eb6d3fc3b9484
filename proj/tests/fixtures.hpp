#pragma once

// Synthetic panels shared by the unit and acceptance tests.

#include <cstdio>
#include <string>

#include "cascdc/netbuild.hpp"
#include "cascdc/rng.hpp"

namespace fixture {

/// Valid ISO dates, 28 per month, in increasing order.
inline std::string day(int d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", 2000 + d / 336, 1 + d / 28 % 12, 1 + d % 28);
  return buf;
}

/// n days of i.i.d. N(0, sd^2) returns for N assets.
inline cascdc::ReturnPanel noise_panel(int N, int n, std::uint64_t seed, double sd = 0.02) {
  cascdc::ReturnPanel p;
  cascdc::Engine g(seed);
  p.returns.resize(n, N);
  for (int t = 0; t < n; ++t) {
    p.dates.push_back(day(t));
    for (int i = 0; i < N; ++i) p.returns(t, i) = sd * cascdc::standard_normal(g);
  }
  for (int i = 0; i < N; ++i) p.assets.push_back("A" + std::to_string(i));
  return p;
}

/// Asset 0 is an exact copy of asset 1; the rest is independent noise.
inline cascdc::ReturnPanel duplicate_panel(int N, int n, std::uint64_t seed) {
  cascdc::ReturnPanel p = noise_panel(N, n, seed);
  p.returns.col(0) = p.returns.col(1);
  return p;
}

/// Two assets alternating +1% / -1% out of phase.
inline cascdc::ReturnPanel alternating_panel(int n) {
  cascdc::ReturnPanel p;
  p.assets = {"A", "B"};
  p.returns.resize(n, 2);
  for (int t = 0; t < n; ++t) {
    p.dates.push_back(day(t));
    p.returns(t, 0) = t % 2 == 0 ? 0.01 : -0.01;
    p.returns(t, 1) = -p.returns(t, 0);
  }
  return p;
}

}  // namespace fixture
