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

#include "occ/dataset_io.hpp"
#include "occ/experiments.hpp"
#include "occ/verify.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadArgs = 1;
constexpr int kExitVerifyFailed = 2;

struct VerificationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

occ::Algorithm algorithm_from(const std::string& s) {
  const auto a = occ::parse_algorithm(s);
  if (!a) throw CLI::ValidationError("--algorithm", "expected dpmeans|ofl|bpmeans");
  return *a;
}

occ::DataMode data_mode_from(const std::string& s) {
  const auto m = occ::parse_data_mode(s);
  if (!m) throw CLI::ValidationError("--mode", "expected mixture|separable|bp");
  return *m;
}

void write_trace_csv(const std::string& path, const occ::RunTrace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "iteration,index,epoch,proposed,validation_rank,accepted,assignment_before,"
        "assignment_after\n";
  for (std::size_t it = 0; it < trace.iterations.size(); ++it) {
    for (const occ::PointRecord& r : trace.iterations[it].points) {
      os << (it + 1) << ',' << r.index << ',' << r.epoch << ',' << (r.proposed ? 1 : 0)
         << ',';
      if (r.validation_rank) os << *r.validation_rank;
      os << ',' << (r.accepted ? 1 : 0) << ',' << r.assignment_before << ','
         << r.assignment_after << '\n';
    }
  }
}

void print_epoch_counts(const occ::RunTrace& trace) {
  for (std::size_t it = 0; it < trace.iterations.size(); ++it) {
    const occ::IterationTrace& tr = trace.iterations[it];
    for (std::size_t e = 0; e < tr.epochs.size(); ++e) {
      const occ::EpochStats& st = tr.epochs[e];
      std::cout << "iter " << (it + 1) << " epoch " << (e + 1) << ": proposed "
                << st.proposals_sent << " accepted " << st.accepted << " rejected "
                << st.rejected << "\n";
    }
  }
}

struct RunArgs {
  std::string algorithm;
  std::string dataset;
  double lambda = 1.0;
  int processors = 1;
  std::size_t block_size = 0;
  std::uint64_t seed = 0;
  int iters = 100;
  bool bootstrap = false;
  bool threaded = false;
  bool check_serial = false;
  bool ofl_two_draw = false;
  std::string trace_path;
};

void cmd_run(const RunArgs& a) {
  const occ::Algorithm alg = algorithm_from(a.algorithm);
  const occ::Matrix data = occ::read_dataset_file(a.dataset);
  const occ::ExecMode mode = a.threaded ? occ::ExecMode::threaded : occ::ExecMode::sequential;

  std::cout << "algorithm: " << occ::to_string(alg) << "\n";
  std::cout << "points: " << data.rows() << " dim: " << data.cols() << "\n";
  std::cout << "lambda: " << format_double(a.lambda) << " processors: " << a.processors
            << " block-size: " << (a.block_size ? a.block_size : static_cast<std::size_t>(data.rows()))
            << " seed: " << a.seed << "\n";

  occ::RunTrace trace;
  switch (alg) {
    case occ::Algorithm::dpmeans: {
      occ::ParallelOptions opts;
      opts.processors = a.processors;
      opts.block_size = a.block_size;
      opts.max_iters = a.iters;
      opts.bootstrap = a.bootstrap;
      opts.mode = mode;
      const occ::ParallelDpResult r = occ::parallel_dpmeans(data, a.lambda, opts);
      std::cout << "iterations: " << r.iterations << " converged: "
                << (r.converged ? "yes" : "no") << "\n";
      if (r.bootstrap_points) std::cout << "bootstrap points: " << r.bootstrap_points << "\n";
      std::cout << "centers: " << r.state.centers.size() << "\n";
      std::cout << "objective: "
                << format_double(occ::dp_objective(data, r.state.centers, a.lambda)) << "\n";
      print_epoch_counts(r.trace);
      trace = r.trace;
      break;
    }
    case occ::Algorithm::ofl: {
      occ::OflOptions opts;
      opts.processors = a.processors;
      opts.block_size = a.block_size;
      opts.mode = mode;
      opts.draw_mode = a.ofl_two_draw ? occ::OflDrawMode::two_draw : occ::OflDrawMode::coupled;
      const occ::UniformStream stream(a.seed);
      const occ::ParallelOflResult r = occ::parallel_ofl(data, a.lambda, stream, opts);
      std::cout << "iterations: 1 converged: yes\n";
      std::cout << "centers: " << r.centers.size() << "\n";
      std::cout << "objective: " << format_double(occ::dp_objective(data, r.centers, a.lambda))
                << "\n";
      print_epoch_counts(r.trace);
      trace = r.trace;
      break;
    }
    case occ::Algorithm::bpmeans: {
      occ::ParallelOptions opts;
      opts.processors = a.processors;
      opts.block_size = a.block_size;
      opts.max_iters = a.iters;
      opts.bootstrap = a.bootstrap;
      opts.mode = mode;
      const occ::ParallelBpResult r = occ::parallel_bpmeans(data, a.lambda, opts);
      std::cout << "iterations: " << r.iterations << " converged: "
                << (r.converged ? "yes" : "no") << "\n";
      if (r.bootstrap_points) std::cout << "bootstrap points: " << r.bootstrap_points << "\n";
      std::cout << "features: " << r.model.feature_count() << "\n";
      std::cout << "objective: " << format_double(occ::bp_objective(data, r.model)) << "\n";
      print_epoch_counts(r.trace);
      trace = r.trace;
      break;
    }
  }

  if (!a.trace_path.empty()) write_trace_csv(a.trace_path, trace);

  if (a.check_serial) {
    occ::VerifyOptions vopts;
    vopts.processors = a.processors;
    vopts.block_size = a.block_size;
    vopts.max_iters = a.iters;
    vopts.bootstrap = a.bootstrap;
    vopts.mode = mode;
    const occ::VerifyReport rep =
        occ::verify_serializability(alg, data, a.lambda, a.seed, vopts);
    std::cout << "serializability: " << (rep.pass ? "PASS" : "FAIL") << "\n";
    if (!rep.pass) throw VerificationFailed(rep.detail);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimistic-concurrency-control parallel DP-means, OFL and BP-means"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  std::string gen_mode = "mixture";
  occ::GenConfig gen_cfg;
  std::string gen_output;
  gen->add_option("--mode", gen_mode, "mixture|separable|bp")->capture_default_str();
  gen->add_option("--n", gen_cfg.n_points, "number of points")->required();
  gen->add_option("--dim", gen_cfg.dim)->capture_default_str();
  gen->add_option("--theta", gen_cfg.theta, "stick-breaking concentration")
      ->capture_default_str();
  gen->add_option("--noise-sd", gen_cfg.noise_sd)->capture_default_str();
  gen->add_option("--seed", gen_cfg.seed)->capture_default_str();
  gen->add_option("--output", gen_output, "dataset file path")->required();
  gen->callback([&] {
    const occ::Matrix points = occ::generate_points(data_mode_from(gen_mode), gen_cfg);
    occ::write_dataset_file(gen_output, points);
    std::cout << "wrote " << points.rows() << " points (dim " << points.cols() << ") to "
              << gen_output << "\n";
  });

  // run
  auto* run = app.add_subcommand("run", "Run an algorithm on a dataset");
  RunArgs ra;
  run->add_option("--algorithm", ra.algorithm, "dpmeans|ofl|bpmeans")->required();
  run->add_option("--dataset", ra.dataset)->required();
  run->add_option("--lambda", ra.lambda)->capture_default_str();
  run->add_option("--processors", ra.processors)->capture_default_str();
  run->add_option("--block-size", ra.block_size, "points per worker per epoch (0: all)")
      ->capture_default_str();
  run->add_option("--seed", ra.seed)->capture_default_str();
  run->add_option("--iters", ra.iters)->capture_default_str();
  run->add_flag("--bootstrap", ra.bootstrap, "seed the model with a serial prefix");
  run->add_flag("--threaded", ra.threaded, "run workers on real threads");
  run->add_flag("--check-serial", ra.check_serial,
                "verify serial equivalence after the run");
  run->add_flag("--ofl-two-draw", ra.ofl_two_draw,
                "independent master draw for OFL validation");
  run->add_option("--trace", ra.trace_path, "write the per-point trace CSV here");
  run->callback([&] { cmd_run(ra); });

  // verify
  auto* ver = app.add_subcommand("verify", "Check serial equivalence of a distributed run");
  std::string v_algorithm, v_dataset;
  double v_lambda = 1.0;
  occ::VerifyOptions vopts;
  std::uint64_t v_seed = 0;
  bool v_threaded = false;
  ver->add_option("--algorithm", v_algorithm, "dpmeans|ofl|bpmeans")->required();
  ver->add_option("--dataset", v_dataset)->required();
  ver->add_option("--lambda", v_lambda)->capture_default_str();
  ver->add_option("--processors", vopts.processors)->capture_default_str();
  ver->add_option("--block-size", vopts.block_size)->capture_default_str();
  ver->add_option("--iters", vopts.max_iters)->capture_default_str();
  ver->add_option("--seed", v_seed)->capture_default_str();
  ver->add_flag("--bootstrap", vopts.bootstrap);
  ver->add_flag("--threaded", v_threaded);
  ver->add_flag("--skip-validation", vopts.skip_validation,
                "fault injection: bypass master validation (the check must FAIL)");
  ver->callback([&] {
    vopts.mode = v_threaded ? occ::ExecMode::threaded : occ::ExecMode::sequential;
    const occ::Matrix data = occ::read_dataset_file(v_dataset);
    const occ::VerifyReport rep = occ::verify_serializability(
        algorithm_from(v_algorithm), data, v_lambda, v_seed, vopts);
    std::cout << "serializability: " << (rep.pass ? "PASS" : "FAIL") << "\n";
    if (!rep.pass) {
      std::cout << "first divergence: " << rep.detail << "\n";
      throw VerificationFailed(rep.detail);
    }
  });

  // experiment-rejections
  auto* rej = app.add_subcommand("experiment-rejections",
                                 "First-iteration proposal/rejection counts over a grid");
  occ::ExperimentGrid grid;
  std::string rej_algorithm, rej_mode = "mixture", rej_output;
  std::uint64_t rej_seed = 0;
  rej->add_option("--algorithm", rej_algorithm, "dpmeans|ofl|bpmeans")->required();
  rej->add_option("--data-mode", rej_mode, "mixture|separable|bp")->capture_default_str();
  rej->add_option("--n-values", grid.n_values, "comma-separated; default 256..2560 step 256")
      ->delimiter(',');
  rej->add_option("--pb-values", grid.pb_values, "comma-separated; default 16,32,64,128,256")
      ->delimiter(',');
  rej->add_option("--trials", grid.trials)->capture_default_str();
  rej->add_option("--lambda", grid.lambda)->capture_default_str();
  rej->add_option("--dim", grid.dim)->capture_default_str();
  rej->add_option("--theta", grid.theta)->capture_default_str();
  rej->add_option("--noise-sd", grid.noise_sd)->capture_default_str();
  rej->add_option("--seed", rej_seed)->capture_default_str();
  rej->add_option("--output", rej_output, "CSV path")->required();
  rej->callback([&] {
    grid.algorithm = algorithm_from(rej_algorithm);
    grid.data_mode = data_mode_from(rej_mode);
    if (grid.n_values.empty()) grid.n_values = occ::default_n_values();
    if (grid.pb_values.empty()) grid.pb_values = occ::default_pb_values();
    const std::vector<occ::RejectionRow> rows = occ::run_rejection_experiment(grid, rej_seed);
    std::ofstream os(rej_output);
    if (!os) throw std::runtime_error("cannot open for writing: " + rej_output);
    occ::write_rejection_csv(os, grid.algorithm, rows);
    // Per-cell mean rejections, for a quick look without the CSV.
    for (const std::size_t pb : grid.pb_values) {
      for (const std::size_t n : grid.n_values) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const occ::RejectionRow& r : rows)
          if (r.pb == pb && r.n == n) {
            sum += static_cast<double>(r.rejected);
            ++count;
          }
        std::cout << "pb " << pb << " n " << n << ": mean rejected "
                  << format_double(sum / static_cast<double>(count)) << "\n";
      }
    }
  });

  // experiment-scaling
  auto* sca = app.add_subcommand("experiment-scaling",
                                 "Hold P*b fixed and vary the worker count");
  std::string sca_algorithm, sca_dataset, sca_output;
  double sca_lambda = -1.0;  // default depends on the algorithm
  std::vector<int> sca_p = {1, 2, 4, 8};
  std::size_t sca_pb = 0;
  int sca_iters = 5;
  std::uint64_t sca_seed = 0;
  sca->add_option("--algorithm", sca_algorithm, "dpmeans|ofl|bpmeans")->required();
  sca->add_option("--dataset", sca_dataset)->required();
  sca->add_option("--lambda", sca_lambda, "default 2 (dpmeans/ofl) or 1 (bpmeans)");
  sca->add_option("--p-values", sca_p, "worker counts")->delimiter(',');
  sca->add_option("--pb", sca_pb, "points per epoch, constant across p")->required();
  sca->add_option("--iters", sca_iters)->capture_default_str();
  sca->add_option("--seed", sca_seed)->capture_default_str();
  sca->add_option("--output", sca_output, "CSV path")->required();
  sca->callback([&] {
    const occ::Algorithm alg = algorithm_from(sca_algorithm);
    if (sca_lambda <= 0.0) sca_lambda = alg == occ::Algorithm::bpmeans ? 1.0 : 2.0;
    const occ::Matrix data = occ::read_dataset_file(sca_dataset);
    const std::vector<occ::ScalingRow> rows =
        occ::run_scaling_experiment(alg, data, sca_lambda, sca_p, sca_pb, sca_iters, sca_seed);
    std::ofstream os(sca_output);
    if (!os) throw std::runtime_error("cannot open for writing: " + sca_output);
    occ::write_scaling_csv(os, rows);
    for (const int p : sca_p) {
      double total_ms = 0.0;
      int last_iter = 0;
      for (const occ::ScalingRow& r : rows)
        if (r.p == p && r.iteration != last_iter) {
          total_ms += r.wall_ms;
          last_iter = r.iteration;
        }
      std::cout << "p " << p << ": total wall ms " << format_double(total_ms) << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadArgs;
  } catch (const VerificationFailed&) {
    return kExitVerifyFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  }
  return kExitOk;
}
