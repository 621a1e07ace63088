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

#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "qetkd/errors.hpp"
#include "qetkd/parallel.hpp"

#ifndef QETKD_VERSION
#define QETKD_VERSION "0.0.0"
#endif

namespace qetkd {

inline std::string format_g12(double v) { return fmt::format("{:.12g}", v); }

/// Provenance block written as `# key=value` comment lines at the top of every CSV.
struct RunManifest {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::uint64_t seed = 0;
  std::string version = QETKD_VERSION;
  std::vector<std::string> outputs;

  std::string render() const {
    std::string s;
    s += fmt::format("# tool=qetkd {}\n", version);
    s += fmt::format("# subcommand={}\n", subcommand);
    s += fmt::format("# seed={}\n", seed);
    for (const auto& [k, v] : parameters) s += fmt::format("# {}={}\n", k, v);
    for (const auto& o : outputs) s += fmt::format("# output={}\n", o);
    return s;
  }
};

struct CsvDocument {
  std::map<std::string, std::string> manifest;  // later keys win on repeats
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Manifest, header and rows of a CSV emitted by write_csv. Row widths are checked.
inline CsvDocument parse_csv(std::string_view text) {
  CsvDocument doc;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = line.size() > 2 ? line.substr(2) : std::string();
      const auto eq = body.find('=');
      if (eq != std::string::npos) doc.manifest[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    auto cells = detail::split(line, ',');
    if (doc.header.empty()) {
      doc.header = std::move(cells);
    } else {
      if (cells.size() != doc.header.size()) throw InvalidArgument("CSV row width mismatch: " + line);
      doc.rows.push_back(std::move(cells));
    }
  }
  return doc;
}

inline std::string write_csv(const RunManifest& manifest, const std::vector<std::string>& header,
                             const std::vector<std::vector<std::string>>& rows) {
  std::string s = manifest.render();
  const auto join = [&s](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  join(header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw InvalidArgument("CSV row width mismatch");
    join(r);
  }
  return s;
}

inline double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument(fmt::format("{}: cannot parse '{}' as a number", what, s));
  }
  return v;
}

/// `start:stop:count`, inclusive, count >= 1.
inline std::vector<double> parse_sweep(std::string_view spec) {
  const auto parts = detail::split(spec, ':');
  if (parts.size() != 3) throw InvalidArgument("sweep must be start:stop:count");
  const double a = parse_double(parts[0], "sweep start");
  const double b = parse_double(parts[1], "sweep stop");
  int count = 0;
  const auto [ptr, ec] = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), count);
  if (ec != std::errc() || ptr != parts[2].data() + parts[2].size() || count < 1) {
    throw InvalidArgument("sweep count must be a positive integer");
  }
  return linspace(a, b, count);
}

}  // namespace qetkd
