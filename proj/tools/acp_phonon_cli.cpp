#include "acp_phonon/commands.hpp"
#include "acp_phonon/threads.hpp"
#include "acp_phonon/types.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace acp_phonon;
  CLI::App app{"Phonon spectra of model Kohn-Sham systems by frozen phonon, DFPT and ACP"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string out_dir;
  std::uint64_t seed = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Run configuration file")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides [output] directory)");
    sub->add_option("--seed", seed, "Random seed (overrides [numerics] seed)");
    sub->add_flag("-v,--verbose", opts.verbose, "Print solver progress to stderr");
  };

  CLI::App* gs = app.add_subcommand("ground-state", "Self-consistent ground state");
  common(gs);
  CLI::App* ph = app.add_subcommand("phonon", "Dynamical matrix, frequencies and DOS");
  common(ph);
  std::string method;
  ph->add_option("--method", method, "fd, dfpt or acp (default: [phonon] methods)")
      ->check(CLI::IsMember({"fd", "dfpt", "acp"}));
  CLI::App* bench = app.add_subcommand("benchmark", "Wall time scaling over system sizes");
  common(bench);
  bench->add_option("--sizes", opts.sizes, "Atom counts, comma separated")->delimiter(',');
  bench->add_option("--methods", opts.methods, "Methods, comma separated")
      ->delimiter(',')
      ->check(CLI::IsMember({"fd", "dfpt", "acp"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    configure_threads();
  } catch (const InvalidArgument& e) {
    std::cerr << e.what() << "\n";
    return exit_config;
  }
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (app.get_subcommand("ground-state")->count("--seed") ||
      app.get_subcommand("phonon")->count("--seed") ||
      app.get_subcommand("benchmark")->count("--seed"))
    opts.seed = seed;
  if (!method.empty()) opts.method = method;

  if (*gs) return cmd_ground_state(opts, std::cerr);
  if (*ph) return cmd_phonon(opts, std::cerr);
  return cmd_benchmark(opts, std::cerr);
}
