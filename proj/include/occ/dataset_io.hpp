// Copyright 2026 the occ-learn authors
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

#include "occ/core.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace occ {

/// Text dataset format: a header line `# occ-learn v1 dim=<D> n=<N>`, then
/// one point per line as comma-separated decimals at full round-trip
/// precision.
inline void write_dataset(std::ostream& os, const Matrix& m) {
  os << "# occ-learn v1 dim=" << m.cols() << " n=" << m.rows() << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), m(i, j));
      if (ec != std::errc{}) throw std::runtime_error("write_dataset: formatting failed");
      if (j) os.put(',');
      os.write(buf, end - buf);
    }
    os.put('\n');
  }
  if (!os) throw std::runtime_error("write_dataset: stream write failed");
}

inline Matrix read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_dataset: missing header");
  std::size_t dim = 0, n = 0;
  if (std::sscanf(line.c_str(), "# occ-learn v1 dim=%zu n=%zu", &dim, &n) != 2)
    throw std::runtime_error("read_dataset: bad header: " + line);
  if (dim == 0) throw std::runtime_error("read_dataset: dim must be >= 1");

  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line))
      throw std::runtime_error("read_dataset: truncated at row " + std::to_string(i));
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t j = 0; j < dim; ++j) {
      if (j) {
        if (p >= end || *p != ',')
          throw std::runtime_error("read_dataset: expected ',' at row " + std::to_string(i));
        ++p;
      }
      double v = 0.0;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{})
        throw std::runtime_error("read_dataset: bad number at row " + std::to_string(i));
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      p = next;
    }
    if (p != end)
      throw std::runtime_error("read_dataset: trailing characters at row " + std::to_string(i));
  }
  return m;
}

inline void write_dataset_file(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_dataset(os, m);
}

inline Matrix read_dataset_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_dataset(is);
}

}  // namespace occ
