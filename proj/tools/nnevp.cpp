// nnevp command line front end.

#include <CLI11.hpp>

#include "nnevp/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Neural-network elasto-viscoplastic constitutive modelling"};
  app.require_subcommand(1);
  nnevp::CommandLine cl;
  std::string out;
  std::uint64_t seed = 0;

  for (const char* name : {"generate", "train", "extrapolate", "discover-hp"}) {
    const char* help = std::string(name) == "generate"      ? "write synthetic reference curves and a dataset manifest"
                       : std::string(name) == "train"       ? "fit the networks to a dataset"
                       : std::string(name) == "extrapolate" ? "predict past the training strain with frozen parameters"
                                                            : "tabulate the learned grain-size dependence";
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", cl.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "random seed (overrides seed)");
    sub->callback([&cl, sub, name, &out, &seed] {
      cl.command = name;
      if (sub->count("--out")) cl.out = out;
      if (sub->count("--seed")) cl.seed = seed;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nnevp::kExitConfig;
  }
  return nnevp::run_command(cl);
}
