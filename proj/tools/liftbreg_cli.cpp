// liftbreg denoise | stereo | selftest

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "commands.hpp"

namespace {

using liftbreg::cli::RunConfig;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// key=value lines become --key=value arguments placed before the command-line
// flags; keys that also appear on the command line are dropped so flags win.
std::vector<std::string> config_args(const std::string& path, const std::vector<std::string>& argv) {
  std::ifstream in(path);
  if (!in) throw liftbreg::io::IoError("cannot open config file " + path);
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw liftbreg::InputError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;
    const bool overridden = std::any_of(argv.begin(), argv.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!overridden) out.push_back(flag + "=" + value);
  }
  return out;
}

void add_common(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--labels", cfg.labels, "number of labels L (default 5)");
  cmd.add_option("--range", cfg.range, "label range a:b (denoise 0:1, stereo 0:3)");
  cmd.add_option("--lambda", cfg.lambda, "data term weight (default 20)");
  cmd.add_option("--tv", cfg.tv, "iso or an (denoise an, stereo iso)")
      ->check(CLI::IsMember({"iso", "an"}));
  cmd.add_option("--steps", cfg.steps, "Bregman steps K (denoise 5, stereo 10)");
  cmd.add_option_function<std::string>(
         "--transform", [&cfg](const std::string& v) { cfg.transform = v == "on"; },
         "transform subgradients: on or off (denoise on, stereo off)")
      ->check(CLI::IsMember({"on", "off"}));
  cmd.add_option("--tol", cfg.tol, "PDHG residual tolerance")->capture_default_str();
  cmd.add_option("--max-iters", cfg.max_iters, "PDHG iteration cap")->capture_default_str();
  cmd.add_option("--integrality-tol", cfg.integrality_tol, "sublabel-integrality tolerance")
      ->capture_default_str();
  cmd.add_flag("--abort-non-integral", cfg.abort_on_non_integral,
               "stop when too many pixels are not sublabel-integral");
  cmd.add_option("--abort-fraction", cfg.abort_fraction, "pixel fraction that triggers the stop")
      ->capture_default_str();
  cmd.add_option("--out", cfg.out, "output directory")->capture_default_str();
  cmd.add_option("--seed", cfg.seed, "seed of the synthetic input (denoise 1, stereo 7)");
  cmd.add_flag("--png", cfg.png, "also write PNG images");
  cmd.add_flag("--quiet", cfg.quiet, "no per-step log");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Lifted Bregman iterations for TV denoising and stereo", "liftbreg"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_file;
  app.add_option("--config", config_file, "key=value file; flags override its values");

  auto* denoise = app.add_subcommand("denoise", "ROF denoising by Bregman iterations");
  add_common(*denoise, cfg);
  denoise->add_option("--input", cfg.input, "PGM or PNG image (default: synthetic two squares)");
  denoise->add_option_function<std::string>(
             "--method",
             [&cfg](const std::string& v) {
               cfg.method = v == "classical" ? liftbreg::cli::Method::classical
                                             : liftbreg::cli::Method::lifted;
             },
             "lifted (default) or classical")
      ->check(CLI::IsMember({"lifted", "classical"}));
  bool compare = false;
  denoise->add_flag("--compare-classical", compare,
                    "run both iterations and report their max abs difference");

  auto* stereo = app.add_subcommand("stereo", "stereo disparity by lifted Bregman iterations");
  add_common(*stereo, cfg);
  stereo->add_option("--left", cfg.left, "I1, PGM or PNG (default: synthetic pair)");
  stereo->add_option("--right", cfg.right, "I2, PGM or PNG");
  stereo->add_option("--patch-radius", cfg.patch_radius, "matching window radius")
      ->capture_default_str();
  stereo->add_option("--beta", cfg.beta, "truncation threshold")->capture_default_str();
  stereo->add_option("--samples", cfg.samples, "cost samples per label interval")
      ->capture_default_str();
  stereo->add_option("--profile-row", cfg.profile_rows, "row exported as a profile (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  auto* selftest = app.add_subcommand("selftest", "oracle-backed invariant checks");
  selftest->add_option("--seed", cfg.seed, "seed of the random checks (default 1)");
  selftest->add_flag("--wrong-adjoint", cfg.wrong_adjoint,
                     "test hook: replace the divergence by a wrong adjoint");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // a first pass only to find the config file
    CLI::App pre;
    pre.allow_extras();
    pre.set_help_flag();
    pre.add_option("--config", config_file);
    pre.parse(argc, argv);
    if (!config_file.empty()) {
      const auto cmd = std::find_if(args.begin(), args.end(), [](const std::string& a) {
        return a == "denoise" || a == "stereo" || a == "selftest";
      });
      if (cmd != args.end()) {
        auto extra = config_args(config_file, args);
        args.insert(cmd + 1, extra.begin(), extra.end());
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : liftbreg::cli::kInputError;
  } catch (const liftbreg::io::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return liftbreg::cli::kIoError;
  } catch (const liftbreg::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return liftbreg::cli::kInputError;
  }
  if (compare) cfg.method = liftbreg::cli::Method::both;
  cfg.command = app.get_subcommands().front()->get_name();
  return liftbreg::cli::run(cfg);
}
