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

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

namespace occ {

/// Dense data matrix, one point per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::RowVectorXd;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using RowMap = Eigen::Map<Eigen::RowVectorXd>;

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);
inline constexpr std::int64_t kUnassigned = -1;

// The two kernels below are the only places inner-product arithmetic happens.
// Every distance, norm and projection in the library goes through them, so a
// value computed during a distributed run is bit-identical to the same value
// computed during a serial replay. Keep them out of line: if the compiler
// re-specialized them per call site the guarantee would silently break.

[[gnu::noinline]] inline double dot(const double* a, const double* b, std::size_t d) {
  return ConstRowMap(a, static_cast<Eigen::Index>(d))
      .dot(ConstRowMap(b, static_cast<Eigen::Index>(d)));
}

inline double squared_norm(const double* a, std::size_t d) { return dot(a, a, d); }

struct Nearest {
  std::size_t index = npos;
  double sq_dist = std::numeric_limits<double>::infinity();
};

/// Growable set of points (cluster centers, features) with cached squared
/// norms. Rows keep their insertion order; algorithms rely on that order to
/// identify centers by index.
class PointBuffer {
 public:
  PointBuffer() = default;
  explicit PointBuffer(std::size_t dim) : dim_(dim) {}

  std::size_t size() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return rows_ == 0; }

  const double* row(std::size_t i) const { return data_.data() + i * dim_; }
  double* mutable_row(std::size_t i) { return data_.data() + i * dim_; }
  ConstRowMap row_map(std::size_t i) const {
    return ConstRowMap(row(i), static_cast<Eigen::Index>(dim_));
  }
  double norm2(std::size_t i) const { return norms2_[i]; }

  void reserve(std::size_t n) {
    data_.reserve(n * dim_);
    norms2_.reserve(n);
  }

  void append(const double* p) {
    data_.insert(data_.end(), p, p + dim_);
    norms2_.push_back(squared_norm(row(rows_), dim_));
    ++rows_;
  }
  void append(const Vec& v) {
    if (static_cast<std::size_t>(v.size()) != dim_)
      throw std::invalid_argument("PointBuffer::append: dimension mismatch");
    append(v.data());
  }

  /// Overwrite row i in place and refresh its cached norm.
  void assign_row(std::size_t i, const double* p) {
    std::memcpy(mutable_row(i), p, dim_ * sizeof(double));
    norms2_[i] = squared_norm(row(i), dim_);
  }

  void clear() {
    data_.clear();
    norms2_.clear();
    rows_ = 0;
  }

  bool bitwise_equal(const PointBuffer& o) const {
    return dim_ == o.dim_ && rows_ == o.rows_ &&
           (data_.empty() || std::memcmp(data_.data(), o.data_.data(),
                                         data_.size() * sizeof(double)) == 0);
  }

 private:
  std::vector<double> data_;
  std::vector<double> norms2_;
  std::size_t dim_ = 0;
  std::size_t rows_ = 0;
};

/// Nearest row of `set` in Euclidean distance over rows [first, last).
/// Ties resolve to the lowest index. Empty range yields {npos, +inf}.
///
/// Uses the expansion |x-c|^2 = |x|^2 - 2 x.c + |c|^2 with the cached |c|^2,
/// clamped at zero. The caller supplies |x|^2 so repeated queries against a
/// growing set reuse it.
[[gnu::noinline]] inline Nearest nearest_point(const double* x, double x_norm2,
                                               const PointBuffer& set,
                                               std::size_t first, std::size_t last) {
  Nearest best;
  double best_shifted = std::numeric_limits<double>::infinity();
  const std::size_t d = set.dim();
  for (std::size_t k = first; k < last; ++k) {
    const double shifted = set.norm2(k) - 2.0 * dot(x, set.row(k), d);
    if (shifted < best_shifted) {
      best_shifted = shifted;
      best.index = k;
    }
  }
  if (best.index != npos) {
    const double v = x_norm2 + best_shifted;
    best.sq_dist = v > 0.0 ? v : 0.0;
  }
  return best;
}

inline Nearest nearest_point(const double* x, double x_norm2, const PointBuffer& set) {
  return nearest_point(x, x_norm2, set, 0, set.size());
}

}  // namespace occ
