#pragma once

// denoise / stereo / selftest commands. Each writes its artifacts into the
// output directory and returns a process exit status.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "image_io.hpp"
#include "liftbreg/bregman.hpp"
#include "liftbreg/dataterms.hpp"
#include "liftbreg/selftest.hpp"
#include "liftbreg/synthetic.hpp"

namespace liftbreg::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kInputError = 2,
  kIoError = 3,
  kNumericError = 4,
  kBregmanAbort = 5,
};

enum class Method { lifted, classical, both };

/// Fully resolved run configuration. Empty optionals take command-specific
/// defaults in resolve().
struct RunConfig {
  std::string command;
  std::string input, left, right;
  std::string out = "out";
  std::optional<int> labels;
  std::optional<std::string> range;
  std::optional<double> lambda;
  std::optional<std::string> tv;
  std::optional<int> steps;
  std::optional<bool> transform;
  double tol = 1e-6;
  int max_iters = 20000;
  int patch_radius = 1;
  double beta = 0.1;
  int samples = 4;
  std::vector<int> profile_rows;
  std::uint32_t seed = 0;  // 0: the generator's default seed
  Method method = Method::lifted;
  bool png = false;
  double integrality_tol = 1e-3;
  bool abort_on_non_integral = false;
  double abort_fraction = 0.5;
  bool wrong_adjoint = false;
  bool quiet = false;

  void resolve() {
    const bool stereo = command == "stereo";
    if (!labels) labels = 5;
    if (!range) range = stereo ? "0:3" : "0:1";
    if (!lambda) lambda = 20.0;
    if (!tv) tv = stereo ? "iso" : "an";
    if (!steps) steps = stereo ? 10 : 5;
    if (!transform) transform = !stereo;
    if (seed == 0) seed = stereo ? 7 : 1;
  }

  std::pair<double, double> range_bounds() const {
    const std::string& r = *range;
    const auto colon = r.find(':');
    if (colon == std::string::npos) throw InputError("range must be given as a:b");
    double a = 0.0, b = 0.0;
    try {
      a = std::stod(r.substr(0, colon));
      b = std::stod(r.substr(colon + 1));
    } catch (const std::exception&) {
      throw InputError("range must be given as a:b");
    }
    if (!(a < b)) throw InputError("range a:b needs a < b");
    return {a, b};
  }

  LabelSet label_set() const {
    if (*labels < 2) throw InputError("need at least two labels");
    const auto [a, b] = range_bounds();
    return LabelSet::uniform(static_cast<std::size_t>(*labels), a, b);
  }

  BregmanConfig bregman() const {
    BregmanConfig c;
    if (*steps < 1) throw InputError("steps must be at least 1");
    c.steps = *steps;
    c.tv = parse_tv(*tv);
    c.transform_subgradients = *transform;
    c.solver.tol = tol;
    c.solver.max_iters = max_iters;
    c.integrality_tol = integrality_tol;
    c.non_integral_policy = abort_on_non_integral ? NonIntegralPolicy::abort
                                                  : NonIntegralPolicy::unlift_and_continue;
    c.abort_fraction = abort_fraction;
    return c;
  }

  StereoConfig stereo() const {
    StereoConfig s;
    s.patch_radius = patch_radius;
    s.beta = beta;
    if (samples < 2) throw InputError("need at least two samples per interval");
    s.samples = static_cast<std::size_t>(samples);
    s.lambda = *lambda;
    return s;
  }

  nlohmann::ordered_json manifest() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    if (command == "selftest") {
      j["seed"] = seed;
      j["wrong_adjoint"] = wrong_adjoint;
      return j;
    }
    const auto [a, b] = range_bounds();
    if (command == "denoise") {
      j["input"] = input.empty() ? "synthetic:two-squares" : input;
    } else {
      j["left"] = left.empty() ? "synthetic:stereo-pair" : left;
      j["right"] = right.empty() ? "synthetic:stereo-pair" : right;
    }
    j["seed"] = seed;
    j["out"] = out;
    j["labels"] = *labels;
    j["range"] = {a, b};
    j["lambda"] = *lambda;
    j["tv"] = *tv;
    j["steps"] = *steps;
    j["transform"] = *transform;
    j["tol"] = tol;
    j["max_iters"] = max_iters;
    const SolverConfig solver;
    j["pdhg_theta"] = solver.theta;
    j["pdhg_check_every"] = solver.check_every;
    j["pdhg_step"] = "auto: tau = sigma = h / (2 sqrt(d))";
    j["warm_start"] = solver.warm_start;
    j["integrality_tol"] = integrality_tol;
    j["non_integral_policy"] = abort_on_non_integral ? "abort" : "unlift_and_continue";
    j["abort_fraction"] = abort_fraction;
    if (command == "denoise") {
      j["method"] = method == Method::lifted ? "lifted" : method == Method::classical ? "classical" : "both";
    } else {
      j["patch_radius"] = patch_radius;
      j["beta"] = beta;
      j["samples"] = samples;
      j["profile_rows"] = profile_rows;
    }
    j["png"] = png;
    return j;
  }
};

namespace detail {

inline std::string indexed(const std::string& dir, const std::string& stem, int k,
                           const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03d", k);
  return (std::filesystem::path(dir) / (stem + buf + ext)).string();
}

inline std::string in_dir(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void prepare_output(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) throw io::IoError("cannot create output directory " + cfg.out + ": " + ec.message());
  std::ofstream m(in_dir(cfg.out, "manifest.json"));
  if (!m) throw io::IoError("cannot write manifest in " + cfg.out);
  m << cfg.manifest().dump(2) << '\n';
}

inline void log_step(const RunConfig& cfg, const char* what, int k, const BregmanStep& st) {
  if (cfg.quiet) return;
  std::printf("%s k=%d energy=%s tv=%s non-integral=%s iters=%d%s\n", what, k,
              io::num(st.energy).c_str(), io::num(st.tv).c_str(),
              io::num(st.non_integral_fraction).c_str(), st.solver_iterations,
              st.converged ? "" : " (not converged)");
}

}  // namespace detail

inline int cmd_denoise(RunConfig cfg) {
  cfg.resolve();
  const LabelSet labels = cfg.label_set();
  const BregmanConfig bcfg = cfg.bregman();
  bcfg.validate();
  Image f = cfg.input.empty() ? synthetic::two_squares(cfg.seed) : io::read_image(cfg.input);
  detail::prepare_output(cfg);
  if (cfg.input.empty()) io::write_pgm8(detail::in_dir(cfg.out, "input.pgm"), f);

  std::optional<BregmanTrace> lifted, classical;
  if (cfg.method != Method::classical) {
    const auto env = build_envelopes(rof_model(f, *cfg.lambda, labels), labels);
    lifted = lifted_bregman(env, labels, f.shape, bcfg, &f);
  }
  if (cfg.method != Method::lifted) classical = classical_bregman_rof(f, *cfg.lambda, bcfg);

  const BregmanTrace& main = lifted ? *lifted : *classical;
  std::vector<std::string> header{"k", "energy", "l2_to_input", "tv", "non_integral_fraction",
                                  "solver_iterations", "converged"};
  if (lifted && classical) header.push_back("max_abs_diff_classical");
  io::CsvWriter csv(detail::in_dir(cfg.out, "metrics.csv"), header);
  for (int k = 1; k <= *cfg.steps; ++k) {
    const BregmanStep& st = main.steps[static_cast<std::size_t>(k - 1)];
    io::write_pgm8(detail::indexed(cfg.out, "u", k, ".pgm"), st.u);
    if (cfg.png) io::write_png8(detail::indexed(cfg.out, "u", k, ".png"), st.u);
    std::vector<double> row{static_cast<double>(k), st.energy, l2_distance(st.u, f), st.tv,
                            st.non_integral_fraction, static_cast<double>(st.solver_iterations),
                            st.converged ? 1.0 : 0.0};
    if (lifted && classical) {
      const auto& cu = classical->steps[static_cast<std::size_t>(k - 1)].u.values;
      double diff = 0.0;
      for (std::size_t x = 0; x < cu.size(); ++x) diff = std::max(diff, std::abs(st.u.values[x] - cu[x]));
      row.push_back(diff);
    }
    csv.row(row);
    detail::log_step(cfg, lifted ? "lifted" : "classical", k, st);
  }
  return kOk;
}

inline int cmd_stereo(RunConfig cfg) {
  cfg.resolve();
  const LabelSet labels = cfg.label_set();
  const BregmanConfig bcfg = cfg.bregman();
  bcfg.validate();
  const StereoConfig scfg = cfg.stereo();
  scfg.validate();
  if (cfg.left.empty() != cfg.right.empty()) throw InputError("give both --left and --right");
  std::optional<ScalarField> truth;
  Image i1, i2;
  if (cfg.left.empty()) {
    auto pair = synthetic::stereo_pair(64, cfg.seed);
    i1 = std::move(pair.left);
    i2 = std::move(pair.right);
    truth = std::move(pair.disparity);
  } else {
    i1 = io::read_image(cfg.left);
    i2 = io::read_image(cfg.right);
  }
  if (!(i1.shape == i2.shape)) throw InputError("stereo images differ in shape");
  for (int r : cfg.profile_rows)
    if (r < 0 || static_cast<std::size_t>(r) >= i1.shape.height)
      throw InputError("profile row " + std::to_string(r) + " outside the image");
  detail::prepare_output(cfg);
  if (truth) {
    io::write_pgm8(detail::in_dir(cfg.out, "left.pgm"), i1);
    io::write_pgm8(detail::in_dir(cfg.out, "right.pgm"), i2);
    io::write_matrix(detail::in_dir(cfg.out, "disparity_truth.txt"), *truth);
  }

  const auto env = build_envelopes(stereo_model(i1, i2, labels, scfg), labels);
  const BregmanTrace trace = lifted_bregman(env, labels, i1.shape, bcfg);

  std::vector<std::string> header{"k", "energy", "tv", "non_integral_fraction",
                                  "solver_iterations", "converged"};
  if (truth) header.push_back("mean_abs_error");
  io::CsvWriter csv(detail::in_dir(cfg.out, "metrics.csv"), header);
  for (int k = 1; k <= *cfg.steps; ++k) {
    const BregmanStep& st = trace.steps[static_cast<std::size_t>(k - 1)];
    io::write_pgm16(detail::indexed(cfg.out, "disparity", k, ".pgm"), st.u, labels.front(),
                    labels.back());
    io::write_matrix(detail::indexed(cfg.out, "disparity", k, ".txt"), st.u);
    std::vector<double> row{static_cast<double>(k), st.energy, st.tv, st.non_integral_fraction,
                            static_cast<double>(st.solver_iterations), st.converged ? 1.0 : 0.0};
    if (truth) {
      double mae = 0.0;
      for (std::size_t x = 0; x < st.u.values.size(); ++x)
        mae += std::abs(st.u.values[x] - truth->values[x]);
      row.push_back(mae / static_cast<double>(st.u.values.size()));
    }
    csv.row(row);
    detail::log_step(cfg, "stereo", k, st);
  }
  for (int r : cfg.profile_rows) {
    std::vector<std::string> ph{"x"};
    for (int k = 1; k <= *cfg.steps; ++k) ph.push_back("u_" + std::to_string(k));
    io::CsvWriter prof(detail::in_dir(cfg.out, "profile_row_" + std::to_string(r) + ".csv"), ph);
    for (std::size_t c = 0; c < i1.shape.width; ++c) {
      std::vector<double> row{static_cast<double>(c)};
      for (const auto& st : trace.steps) row.push_back(st.u(static_cast<std::size_t>(r), c));
      prof.row(row);
    }
  }
  return kOk;
}

inline int cmd_selftest(RunConfig cfg) {
  cfg.resolve();
  checks::SelftestOptions opt;
  opt.seed = cfg.seed;
  opt.wrong_adjoint = cfg.wrong_adjoint;
  const auto results = checks::run_selftest(opt);
  bool ok = true;
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  for (const auto& r : results) {
    std::printf("%-*s  %s  %s\n", static_cast<int>(width), r.name.c_str(), r.passed ? "PASS" : "FAIL",
                r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? kOk : kCheckFailed;
}

/// Runs a command, mapping library exceptions to exit codes.
inline int run(const RunConfig& cfg) {
  try {
    if (cfg.command == "denoise") return cmd_denoise(cfg);
    if (cfg.command == "stereo") return cmd_stereo(cfg);
    if (cfg.command == "selftest") return cmd_selftest(cfg);
    throw InputError("unknown command " + cfg.command);
  } catch (const BregmanAbort& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kBregmanAbort;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumericError;
  } catch (const io::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIoError;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const RangeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const ModelError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  }
}

}  // namespace liftbreg::cli
