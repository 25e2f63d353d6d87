// ness: sample steady states, verify limit theorems, evaluate large-deviation functionals.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ness/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Steady-state sampler and limit-theorem verifier for the boundary-driven harmonic chain"};
  app.require_subcommand(1);

  std::string config_path;
  ness::RunOptions opt;
  std::optional<std::uint64_t> seed;
  std::string out_dir = opt.out_dir.string();
  app.add_option("-c,--config", config_path, "JSON config file (defaults apply to missing keys)");
  app.add_option("-o,--out", out_dir, "output directory")->capture_default_str();
  app.add_option("-s,--seed", seed, "override the config seed");
  app.add_option("-w,--workers", opt.workers, "worker threads; outputs do not depend on it")
      ->capture_default_str()
      ->check(CLI::Range(1u, 1024u));
  app.add_flag("-v,--verbose", opt.verbosity, "print verdicts to stderr (repeat for more)");

  auto* sample = app.add_subcommand("sample", "draw one steady-state profile and configuration");

  std::string kind;
  auto* verify = app.add_subcommand("verify", "run a verification experiment");
  verify->add_option("kind", kind, "lln | clt | bridge | le-scaling | concentration")
      ->required()
      ->check(CLI::IsMember({"lln", "clt", "bridge", "le-scaling", "concentration"}));

  std::string task;
  auto* ldp = app.add_subcommand("ldp", "evaluate a large-deviation functional");
  ldp->add_option("task", task, "free-energy | rate | path-rate | annealed | profile-rate")
      ->required()
      ->check(CLI::IsMember({"free-energy", "rate", "path-rate", "annealed", "profile-rate"}));

  for (auto* sub : {sample, verify, ldp}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ness::kExitConfigError;
  }
  opt.out_dir = out_dir;

  return ness::run_guarded(
      [&] {
        ness::AppConfig cfg = config_path.empty() ? ness::AppConfig{} : ness::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (sample->parsed()) return ness::cmd_sample(cfg, opt);
        if (verify->parsed()) return ness::cmd_verify(kind, cfg, opt);
        return ness::cmd_ldp(task, cfg, opt);
      },
      std::cerr);
}
