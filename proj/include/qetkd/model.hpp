// Copyright 2026 The qetkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qetkd/linalg.hpp"

namespace qetkd {

/// A Hamiltonian as a list of Pauli terms on `n_sites` qubits.
struct HamiltonianSpec {
  int n_sites = 0;
  std::vector<PauliTerm> terms;
  std::string name;

  Operator assemble() const { return qetkd::assemble(terms, n_sites); }
};

/// One party's share of the Hamiltonian plus the constant that zeroes its
/// ground-state expectation.
struct Part {
  std::string label;
  int site = 0;  // the party's own qubit
  std::vector<PauliTerm> terms;
  double shift = 0.0;

  Operator shifted_operator(int n_sites) const {
    return qetkd::assemble(terms, n_sites).shifted(shift);
  }
};

struct Partition {
  std::vector<Part> parts;

  const Part& at(std::string_view label) const {
    auto it = std::find_if(parts.begin(), parts.end(),
                           [&](const Part& p) { return p.label == label; });
    if (it == parts.end()) throw InvalidArgument("no part labelled '" + std::string(label) + "'");
    return *it;
  }
  bool contains(std::string_view label) const {
    return std::any_of(parts.begin(), parts.end(),
                       [&](const Part& p) { return p.label == label; });
  }
  double total_shift() const {
    double s = 0.0;
    for (const auto& p : parts) s += p.shift;
    return s;
  }
};

/// Hamiltonian, its partition, and which parts are the sender and receivers.
struct PartitionedModel {
  HamiltonianSpec spec;
  Partition partition;
  std::string sender = "alice";
  std::vector<std::string> receivers;

  const Part& sender_part() const { return partition.at(sender); }
  const Part& receiver_part(std::size_t i = 0) const { return partition.at(receivers.at(i)); }
};

namespace detail {

inline PauliTerm term(double c, std::initializer_list<PauliFactor> f) { return {c, f}; }

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be a positive constant");
  }
}

inline void require_non_negative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be non-negative");
  }
}

/// Sets every part's shift to -<g|H_part|g>.
inline void zero_ground_expectations(const HamiltonianSpec& spec, Partition& partition) {
  const auto ground = lowest_eigenpair(spec.assemble());
  for (auto& p : partition.parts) {
    p.shift = -expectation(ground.state, qetkd::assemble(p.terms, spec.n_sites));
  }
}

}  // namespace detail

/// H = 2k X0X1 + h (Z0 + Z1).
inline HamiltonianSpec two_site(double k, double h) {
  detail::require_positive(k, "k");
  detail::require_positive(h, "h");
  using detail::term;
  return {2,
          {term(2 * k, {{0, Axis::X}, {1, Axis::X}}), term(h, {{0, Axis::Z}}),
           term(h, {{1, Axis::Z}})},
          "two-site"};
}

/// H_A = h Z0 and H_B = 2k X0X1 + h Z1, with the closed-form shifts C1 and C1 + C2.
inline Partition two_site_partition_standard(double k, double h) {
  detail::require_positive(k, "k");
  detail::require_positive(h, "h");
  using detail::term;
  const double r = std::sqrt(h * h + k * k);
  const double c1 = h * h / r;
  const double c2 = 2 * k * k / r;
  return {{{"alice", 0, {term(h, {{0, Axis::Z}})}, c1},
           {"bob", 1, {term(2 * k, {{0, Axis::X}, {1, Axis::X}}), term(h, {{1, Axis::Z}})},
            c1 + c2}}};
}

/// H_A = 2k X0X1 + h Z0 and H_B = h Z1; shifts found numerically.
inline Partition two_site_partition_alternative(double k, double h) {
  const auto spec = two_site(k, h);
  using detail::term;
  Partition p{{{"alice", 0, {term(2 * k, {{0, Axis::X}, {1, Axis::X}}), term(h, {{0, Axis::Z}})},
                0.0},
               {"bob", 1, {term(h, {{1, Axis::Z}})}, 0.0}}};
  detail::zero_ground_expectations(spec, p);
  return p;
}

enum class TwoSitePartition { standard, alternative };

inline PartitionedModel two_site_model(double k, double h,
                                       TwoSitePartition kind = TwoSitePartition::standard) {
  auto spec = two_site(k, h);
  auto part = kind == TwoSitePartition::standard ? two_site_partition_standard(k, h)
                                                 : two_site_partition_alternative(k, h);
  return {std::move(spec), std::move(part), "alice", {"bob"}};
}

/// H = J sum_k X0Xk + sum_k Zk with Alice at site 0 and parties 1..N.
/// Party k owns {J X0Xk, Zk}.
inline PartitionedModel star(int n_parties, double coupling) {
  if (n_parties < 1 || n_parties > kMaxSites - 1) {
    throw InvalidArgument("star needs 1 <= N <= " + std::to_string(kMaxSites - 1));
  }
  detail::require_non_negative(coupling, "J");
  using detail::term;
  PartitionedModel m;
  m.spec.n_sites = n_parties + 1;
  m.spec.name = "star";
  m.partition.parts.push_back({"alice", 0, {term(1.0, {{0, Axis::Z}})}, 0.0});
  m.spec.terms.push_back(term(1.0, {{0, Axis::Z}}));
  for (int k = 1; k <= n_parties; ++k) {
    PauliTerm xx = term(coupling, {{0, Axis::X}, {k, Axis::X}});
    PauliTerm z = term(1.0, {{k, Axis::Z}});
    m.spec.terms.push_back(xx);
    m.spec.terms.push_back(z);
    const std::string label = "party" + std::to_string(k);
    m.partition.parts.push_back({label, k, {xx, z}, 0.0});
    m.receivers.push_back(label);
  }
  detail::zero_ground_expectations(m.spec, m.partition);
  return m;
}

/// H = J (X0X1 + X1X2) + Z0 + Z1 + Z2; Alice at 0, Bob at 2, site 1 is a buffer.
inline PartitionedModel chain3(double coupling) {
  detail::require_non_negative(coupling, "J");
  using detail::term;
  const PauliTerm x01 = term(coupling, {{0, Axis::X}, {1, Axis::X}});
  const PauliTerm x12 = term(coupling, {{1, Axis::X}, {2, Axis::X}});
  const PauliTerm z0 = term(1.0, {{0, Axis::Z}});
  const PauliTerm z1 = term(1.0, {{1, Axis::Z}});
  const PauliTerm z2 = term(1.0, {{2, Axis::Z}});
  PartitionedModel m;
  m.spec = {3, {x01, x12, z0, z1, z2}, "chain3"};
  m.partition.parts = {{"alice", 0, {z0}, 0.0}, {"buffer", 1, {x01, z1}, 0.0},
                       {"bob", 2, {x12, z2}, 0.0}};
  m.receivers = {"bob"};
  detail::zero_ground_expectations(m.spec, m.partition);
  return m;
}

/// E_1 - E_0; zero when the ground level is degenerate.
inline double energy_gap(const HamiltonianSpec& spec) {
  const auto es = eigendecompose(spec.assemble());
  if (es.values.size() < 2) return 0.0;
  const double gap = es.values(1) - es.values(0);
  return gap < Tolerances::degeneracy ? 0.0 : gap;
}

/// Multiset equality between the union of part terms and the full term list.
inline bool partition_is_complete(const HamiltonianSpec& spec, const Partition& partition) {
  std::vector<PauliTerm> pool = spec.terms;
  for (const auto& part : partition.parts) {
    for (const auto& t : part.terms) {
      auto it = std::find(pool.begin(), pool.end(), t);
      if (it == pool.end()) return false;
      pool.erase(it);
    }
  }
  return pool.empty();
}

// Term-list text format: one term per line, `coeff site:axis [site:axis ...]`.
// Lines starting with '#' are comments; `# n_sites=<n>` and `# name=<s>` are read back.

inline std::string to_term_list(const HamiltonianSpec& spec) {
  std::string out = fmt::format("# name={}\n# n_sites={}\n", spec.name, spec.n_sites);
  for (const auto& t : spec.terms) {
    out += fmt::format("{}", t.coefficient);
    for (const auto& f : t.factors) out += fmt::format(" {}:{}", f.site, axis_char(f.axis));
    out += '\n';
  }
  return out;
}

inline HamiltonianSpec parse_term_list(std::string_view text) {
  HamiltonianSpec spec;
  int max_site = -1;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# n_sites=", 0) == 0) spec.n_sites = std::stoi(line.substr(10));
      if (line.rfind("# name=", 0) == 0) spec.name = line.substr(7);
      continue;
    }
    std::istringstream ls(line);
    PauliTerm t;
    if (!(ls >> t.coefficient)) {
      throw InvalidArgument("term list line " + std::to_string(line_no) + ": bad coefficient");
    }
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon + 2 != tok.size()) {
        throw InvalidArgument("term list line " + std::to_string(line_no) + ": bad factor '" +
                              tok + "'");
      }
      const int site = std::stoi(tok.substr(0, colon));
      t.factors.push_back({site, axis_from_char(tok[colon + 1])});
      max_site = std::max(max_site, site);
    }
    spec.terms.push_back(std::move(t));
  }
  if (spec.n_sites == 0) spec.n_sites = max_site + 1;
  detail::check_sites(spec.n_sites);
  for (const auto& t : spec.terms) validate_term(t, spec.n_sites);
  return spec;
}

}  // namespace qetkd
