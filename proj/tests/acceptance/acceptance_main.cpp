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

// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; the exit status is the number of failed criteria. Run a single
// criterion with --criterion <1..7>.

#include "occ/datagen.hpp"
#include "occ/experiments.hpp"
#include "occ/verify.hpp"

#include "brute_force.hpp"

#include <chrono>
#include <cstring>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace occ;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string summary;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// --------------------------------------------------------------------------
// 1. Serializability: randomized configurations, exact replay equality.

Outcome criterion_serializability() {
  const auto t0 = Clock::now();
  const int per_algorithm = 200;
  const UniformStream rnd(0xC0FFEE);
  std::size_t failures = 0;
  std::string first_failure;
  int runs = 0;

  const Algorithm algs[] = {Algorithm::dpmeans, Algorithm::ofl, Algorithm::bpmeans};
  for (const Algorithm alg : algs) {
    for (int t = 0; t < per_algorithm; ++t) {
      const std::uint64_t key = static_cast<std::uint64_t>(t) * 3 + static_cast<std::uint64_t>(alg);
      const std::size_t n_max = alg == Algorithm::bpmeans ? 500 : 2000;
      const std::size_t n = 16 + rnd.bits(key, 0) % (n_max - 15);
      const std::size_t dims[] = {1, 2, 16};
      const std::size_t dim = dims[rnd.bits(key, 1) % 3];
      VerifyOptions v;
      v.processors = 1 << (rnd.bits(key, 2) % 4);
      v.block_size = 1 + rnd.bits(key, 3) % 64;
      v.max_iters = 50;
      v.mode = rnd.bits(key, 4) % 2 ? ExecMode::threaded : ExecMode::sequential;
      v.bootstrap = alg != Algorithm::ofl && rnd.bits(key, 5) % 4 == 0;
      const double lambda = alg == Algorithm::bpmeans ? 1.0 + 3.0 * rnd.uniform(key, 6)
                                                      : 0.5 + 2.5 * rnd.uniform(key, 6);
      GenConfig cfg{n, dim, 1.0, 0.5, rnd.bits(key, 7)};
      const Matrix data = alg == Algorithm::bpmeans ? gen_bp_features(cfg).points
                                                    : gen_dp_mixture(cfg).points;
      const VerifyReport rep =
          verify_serializability(alg, data, lambda, rnd.bits(key, 8), v);
      ++runs;
      if (!rep.pass) {
        ++failures;
        if (first_failure.empty()) {
          std::ostringstream os;
          os << to_string(alg) << " n=" << n << " dim=" << dim << " P=" << v.processors
             << " b=" << v.block_size << ": " << rep.detail;
          first_failure = os.str();
        }
      }
    }
  }

  const double elapsed = seconds_since(t0);
  Outcome out;
  out.pass = failures == 0 && elapsed < 300.0;
  std::ostringstream os;
  os << runs << " configurations, " << failures << " mismatches, " << elapsed << "s";
  if (!first_failure.empty()) os << "; first: " << first_failure;
  if (elapsed >= 300.0) os << "; over the 5 min budget";
  out.summary = os.str();
  return out;
}

// --------------------------------------------------------------------------
// 2. Rejection counts bounded by P*b and flat in N (first-iteration grid).

struct GridCheck {
  bool bound_ok = true;
  bool slope_ok = true;
  double worst_ratio = 0.0;  // max over cells of mean rejections / pb
  std::string detail;
};

GridCheck check_rejection_grid(Algorithm alg, DataMode mode, double lambda,
                               std::uint64_t seed, bool with_bound, bool with_slope,
                               double se_allowance) {
  ExperimentGrid grid;
  grid.n_values = default_n_values();
  grid.pb_values = default_pb_values();
  grid.trials = 400;
  grid.algorithm = alg;
  grid.data_mode = mode;
  grid.lambda = lambda;
  const std::vector<RejectionRow> rows = run_rejection_experiment(grid, seed);

  GridCheck check;
  for (const std::size_t pb : grid.pb_values) {
    std::vector<double> xs, means;
    for (const std::size_t n : grid.n_values) {
      std::vector<double> rejected;
      for (const RejectionRow& r : rows)
        if (r.pb == pb && r.n == n) rejected.push_back(static_cast<double>(r.rejected));
      const MeanSe m = mean_se(rejected);
      xs.push_back(static_cast<double>(n));
      means.push_back(m.mean);
      const double bound = static_cast<double>(pb) + se_allowance * m.se;
      check.worst_ratio = std::max(check.worst_ratio, m.mean / static_cast<double>(pb));
      if (with_bound && m.mean > bound) {
        check.bound_ok = false;
        std::ostringstream os;
        os << to_string(alg) << " pb=" << pb << " n=" << n << ": mean rejections " << m.mean
           << " > " << bound;
        check.detail = os.str();
      }
    }
    if (with_slope) {
      const SlopeCi ci = ols_slope_ci95(xs, means);
      if (!ci.contains_zero()) {
        check.slope_ok = false;
        std::ostringstream os;
        os << to_string(alg) << " pb=" << pb << ": slope CI [" << ci.lo << ", " << ci.hi
           << "] excludes 0";
        if (!check.detail.empty()) check.detail += "; ";
        check.detail += os.str();
      }
    }
  }
  return check;
}

Outcome criterion_rejection_bound() {
  const auto t0 = Clock::now();
  Outcome out;
  out.pass = true;
  std::ostringstream os;
  const struct {
    Algorithm alg;
    DataMode mode;
  } setups[] = {{Algorithm::dpmeans, DataMode::mixture},
                {Algorithm::ofl, DataMode::mixture},
                {Algorithm::bpmeans, DataMode::bp}};
  for (const auto& s : setups) {
    const GridCheck c = check_rejection_grid(s.alg, s.mode, 1.0, 0x5EED, true, true, 0.0);
    os << to_string(s.alg) << " worst mean/pb " << c.worst_ratio << "; ";
    if (!c.bound_ok || !c.slope_ok) {
      out.pass = false;
      os << c.detail << "; ";
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 900.0) out.pass = false;
  os << elapsed << "s";
  out.summary = os.str();
  return out;
}

// --------------------------------------------------------------------------
// 3. Master-load bound on separable data: mean validated <= Pb + mean(k) + 3 se.

Outcome criterion_separable_bound() {
  const auto t0 = Clock::now();
  Outcome out;
  out.pass = true;
  std::ostringstream os;
  for (const Algorithm alg : {Algorithm::dpmeans, Algorithm::ofl}) {
    const GridCheck c =
        check_rejection_grid(alg, DataMode::separable, 1.0, 0xD1, true, false, 3.0);
    os << to_string(alg) << " worst (mean rejections)/pb " << c.worst_ratio << "; ";
    if (!c.bound_ok) {
      out.pass = false;
      os << c.detail << "; ";
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 600.0) out.pass = false;
  os << elapsed << "s";
  out.summary = os.str();
  return out;
}

// --------------------------------------------------------------------------
// 4. Objective monotonicity across outer iterations (serial algorithms).

Outcome criterion_monotonicity() {
  const auto t0 = Clock::now();
  const UniformStream rnd(0xAB);
  std::size_t violations = 0;
  int instances = 0;

  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 30 + rnd.bits(t, 0) % 270;
    const std::size_t dim = rnd.bits(t, 1) % 2 ? 2 : 16;
    const double lambda = 0.5 + 2.0 * rnd.uniform(t, 2);
    GenConfig cfg{n, dim, 1.0, 0.5, rnd.bits(t, 3)};
    DpRunSummary sum;
    serial_dpmeans(gen_dp_mixture(cfg).points, lambda, 100, &sum);
    ++instances;
    for (std::size_t k = 1; k < sum.objectives.size(); ++k)
      if (sum.objectives[k] > sum.objectives[k - 1] * (1.0 + 1e-9) + 1e-12) ++violations;
  }
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 20 + rnd.bits(1000 + t, 0) % 130;
    const std::size_t dim = rnd.bits(1000 + t, 1) % 2 ? 4 : 16;
    const double lambda = 0.8 + 1.7 * rnd.uniform(1000 + t, 2);
    GenConfig cfg{n, dim, 1.0, 0.5, rnd.bits(1000 + t, 3)};
    BpRunSummary sum;
    serial_bpmeans(gen_bp_features(cfg).points, lambda, 100, &sum);
    ++instances;
    for (std::size_t k = 1; k < sum.objectives.size(); ++k)
      if (sum.objectives[k] > sum.objectives[k - 1] * (1.0 + 1e-9) + 1e-12) ++violations;
  }

  Outcome out;
  out.pass = violations == 0;
  std::ostringstream os;
  os << instances << " instances, " << violations << " objective increases, "
     << seconds_since(t0) << "s";
  out.summary = os.str();
  return out;
}

// --------------------------------------------------------------------------
// 5. OFL approximation factors against brute force on small instances.

Outcome criterion_ofl_approximation() {
  const auto t0 = Clock::now();
  const UniformStream rnd(0xF1);
  Outcome out;
  out.pass = true;
  double worst_ofl_ratio = 0.0;
  double worst_fl_ratio = 0.0;
  std::ostringstream os;

  // mean OFL objective over random orders vs optimal restricted FL
  for (int inst = 0; inst < 20 && out.pass; ++inst) {
    const std::size_t n = 8 + rnd.bits(inst, 0) % 5;  // 8..12
    GenConfig cfg{n, 2, 1.0, 0.5, rnd.bits(inst, 1)};
    const Matrix data = gen_dp_mixture(cfg).points;
    const double lambda = 1.0;
    const double j_fl = brute_force_fl_objective(data, lambda);

    const int seeds = 250;
    double total = 0.0;
    for (int s = 0; s < seeds; ++s) {
      const UniformStream run(rnd.bits(inst, 100 + static_cast<std::uint64_t>(s)));
      // random order: Fisher-Yates driven by the run stream
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = run.bits(2000 + i, 0) % i;
        std::swap(order[i - 1], order[j]);
      }
      const PointBuffer centers = serial_ofl(data, lambda, run, order);
      total += dp_objective(data, centers, lambda);
    }
    const double mean_j = total / seeds;
    worst_ofl_ratio = std::max(worst_ofl_ratio, mean_j / j_fl);
    if (mean_j > 68.0 * j_fl) {
      out.pass = false;
      os << "instance " << inst << ": mean J_OFL " << mean_j << " > 68 * " << j_fl << "; ";
    }
  }

  // restricted FL optimum vs unrestricted optimum (factor 2)
  for (int inst = 0; inst < 20 && out.pass; ++inst) {
    const std::size_t n = 4 + rnd.bits(500 + inst, 0) % 5;  // 4..8
    GenConfig cfg{n, 1, 1.0, 0.5, rnd.bits(500 + inst, 1)};
    const Matrix data = gen_dp_mixture(cfg).points;
    const double lambda = 1.0;
    const double j_fl = brute_force_fl_objective(data, lambda);
    const double j_star = brute_force_partition_objective(data, lambda);
    worst_fl_ratio = std::max(worst_fl_ratio, j_fl / j_star);
    if (j_fl > 2.0 * j_star * (1.0 + 1e-9)) {
      out.pass = false;
      os << "instance " << inst << ": J_FL " << j_fl << " > 2 * " << j_star << "; ";
    }
  }

  os << "worst mean(J_OFL)/J_FL " << worst_ofl_ratio << " (bound 68), worst J_FL/J* "
     << worst_fl_ratio << " (bound 2), " << seconds_since(t0) << "s";
  out.summary = os.str();
  return out;
}

// --------------------------------------------------------------------------
// 6. Coupled validation acceptance frequency matches min(d*^2, d^2)/d^2.

Outcome criterion_coupling() {
  const auto t0 = Clock::now();
  const struct {
    double d, dstar, lambda;
  } triples[] = {{0.9, 0.3, 1.0}, {0.5, 0.5, 1.0},  {0.8, 0.1, 1.0},  {1.0, 0.7, 1.0},
                 {0.3, 0.2, 1.0}, {0.6, 0.45, 1.0}, {0.95, 0.9, 1.0}, {0.8, 0.2, 2.0},
                 {1.6, 0.4, 2.0}, {1.0, 1.0, 1.0}};
  Outcome out;
  out.pass = true;
  double worst_sigma = 0.0;
  std::ostringstream os;

  int idx = 0;
  for (const auto& tr : triples) {
    const double lam2 = tr.lambda * tr.lambda;
    const double d2 = tr.d * tr.d;
    const double dstar2 = tr.dstar * tr.dstar;
    const UniformStream stream(0x600D + static_cast<std::uint64_t>(idx));
    const int draws = 100000;
    long sent = 0, accepted = 0;
    for (int i = 0; i < draws; ++i) {
      const double u = stream.uniform(static_cast<std::uint64_t>(i), 0);
      if (u < open_probability(d2, lam2)) {
        ++sent;
        if (ofl_accept_given(u, dstar2, d2, lam2, OflDrawMode::coupled)) ++accepted;
      }
    }
    const double target = std::min(dstar2, d2) / d2;
    const double freq = sent > 0 ? static_cast<double>(accepted) / static_cast<double>(sent) : 0.0;
    const double se = std::sqrt(std::max(target * (1.0 - target), 0.0) /
                                static_cast<double>(sent > 0 ? sent : 1));
    const double err = std::abs(freq - target);
    if (se == 0.0) {
      if (err != 0.0) out.pass = false;
    } else {
      worst_sigma = std::max(worst_sigma, err / se);
      if (err > 3.0 * se) {
        out.pass = false;
        os << "triple " << idx << ": freq " << freq << " vs " << target << " (se " << se
           << "); ";
      }
    }
    ++idx;
  }
  os << idx << " triples, worst deviation " << worst_sigma << " se, " << seconds_since(t0)
     << "s";
  out.summary = os.str();
  return out;
}

// --------------------------------------------------------------------------
// 7. Scaling proxy: master load invariant to P, workers see N/P points.

Outcome criterion_scaling_proxy() {
  const auto t0 = Clock::now();
  Outcome out;
  out.pass = true;
  std::ostringstream os;
  const std::vector<int> ps{1, 2, 4, 8};

  const auto check = [&](Algorithm alg, const Matrix& data, double lambda, std::size_t pb,
                         int iters) {
    const std::vector<ScalingRow> rows =
        run_scaling_experiment(alg, data, lambda, ps, pb, iters, 0xCA11);
    std::vector<std::size_t> base;
    for (const int p : ps) {
      std::vector<std::size_t> masters;
      std::vector<std::size_t> per_iter(static_cast<std::size_t>(iters), 0);
      double wall = 0.0;
      int last_iter = 0;
      for (const ScalingRow& r : rows) {
        if (r.p != p) continue;
        masters.push_back(r.master_points);
        per_iter[static_cast<std::size_t>(r.iteration - 1)] += r.worker_points_max;
        if (r.iteration != last_iter) {
          wall += r.wall_ms;
          last_iter = r.iteration;
        }
      }
      if (p == 1) base = masters;
      if (masters != base) {
        out.pass = false;
        os << to_string(alg) << ": master counts differ between p=1 and p=" << p << "; ";
      }
      const std::size_t expect = static_cast<std::size_t>(data.rows()) / static_cast<std::size_t>(p);
      for (const std::size_t got : per_iter)
        if (got != expect) {
          out.pass = false;
          os << to_string(alg) << " p=" << p << ": per-worker points " << got << " != "
             << expect << "; ";
          break;
        }
      os << to_string(alg) << " p=" << p << " wall " << wall << "ms; ";
    }
  };

  {
    GenConfig cfg{4096, 16, 1.0, 0.5, 0xDA7A};
    const Matrix data = gen_dp_mixture(cfg).points;
    check(Algorithm::dpmeans, data, 2.0, 512, 3);
    check(Algorithm::ofl, data, 2.0, 512, 1);
  }
  {
    GenConfig cfg{1024, 16, 1.0, 0.5, 0xDA7B};
    const Matrix data = gen_bp_features(cfg).points;
    check(Algorithm::bpmeans, data, 1.0, 128, 2);
  }

  os << seconds_since(t0) << "s (wall times reported, not asserted)";
  out.summary = os.str();
  return out;
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "serializability suite", criterion_serializability},
    {2, "rejections bounded by Pb and flat in N", criterion_rejection_bound},
    {3, "separable-data master-load bound", criterion_separable_bound},
    {4, "serial objective monotonicity", criterion_monotonicity},
    {5, "OFL approximation factors", criterion_ofl_approximation},
    {6, "coupled validation probability", criterion_coupling},
    {7, "scaling proxy invariants", criterion_scaling_proxy},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
  }

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    const Outcome out = c.run();
    std::cout << (out.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.name
              << " — " << out.summary << std::endl;
    if (!out.pass) ++failures;
  }
  return failures;
}
