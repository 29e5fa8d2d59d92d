// Batch front end: generate, train, evaluate, sweep, validate.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "scsampler/error.hpp"
#include "scsampler/experiment.hpp"
#include "scsampler/kernels.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::size_t> stride;
  std::optional<std::size_t> workers;
  std::optional<std::string> output;
  std::optional<std::string> isa;
};

scsampler::ExperimentConfig load(const std::string& path, const Overrides& o) {
  auto cfg = scsampler::load_experiment_config(path);
  if (o.seed) cfg.eval_seed = *o.seed;
  if (o.k) cfg.k = *o.k;
  if (o.stride) cfg.stride = *o.stride;
  if (o.workers) cfg.workers = *o.workers;
  if (o.output) cfg.output_dir = *o.output;
  cfg.check();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Salient clip sampling for budget-aware video classification"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;
  std::string target;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "Experiment configuration (JSON)")->required();
    cmd->add_option("--seed", o.seed, "Override the evaluation seed");
    cmd->add_option("--K", o.k, "Override K, clips per video");
    cmd->add_option("--N", o.stride, "Override N, sampler stride");
    cmd->add_option("--workers", o.workers, "Evaluation / generation threads");
    cmd->add_option("--output", o.output, "Override the output directory");
    cmd->add_option("--isa", o.isa, "Kernel variant: scalar or avx2");
  };

  auto* gen = app.add_subcommand("generate", "Write the synthetic benchmark");
  auto* train = app.add_subcommand("train", "Train classifier, sampler or joint AV sampler");
  train->add_option("target", target, "classifier | sampler | joint")->required();
  auto* eval = app.add_subcommand("evaluate", "Evaluate every configured strategy");
  auto* sw = app.add_subcommand("sweep", "Sweep K, N, alpha or K_prime");
  auto* val = app.add_subcommand("validate", "Check dataset invariants");
  for (auto* cmd : {gen, train, eval, sw, val}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (o.isa) {
      const auto isa = scsampler::kernels::parse_isa(*o.isa);
      if (!isa) throw scsampler::ConfigError("--isa: expected scalar or avx2");
      scsampler::kernels::set_active_isa(*isa);
    }
    const auto cfg = load(config_path, o);
    if (gen->parsed()) {
      scsampler::cmd_generate(cfg, std::cout);
    } else if (train->parsed()) {
      scsampler::cmd_train(cfg, scsampler::parse_train_target(target), std::cout);
    } else if (eval->parsed()) {
      scsampler::cmd_evaluate(cfg, std::cout);
    } else if (sw->parsed()) {
      scsampler::cmd_sweep(cfg, std::cout);
    } else if (val->parsed()) {
      if (scsampler::cmd_validate(cfg, std::cout) > 0) return 2;
    }
    return 0;
  } catch (const scsampler::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const scsampler::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  }
}
