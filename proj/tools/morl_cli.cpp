#include <iostream>

#include "CLI11.hpp"
#include "morl/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace morl::cli;
  CLI::App app{"Preference-conditioned multi-objective locomotion policies on a planar force-compliant body"};
  app.require_subcommand(1);

  TrainArgs train;
  std::string run_dir, out_root, resume;
  auto* t = app.add_subcommand("train", "train a policy");
  t->add_option("--config", train.config, "flat JSON config file")->required();
  t->add_option("--mode", train.mode, "morl | sorl | baseline");
  t->add_option("--seed", train.seed, "master seed");
  t->add_option("--epochs", train.epochs, "total epochs");
  t->add_option("--envs", train.envs, "parallel environments");
  t->add_option("--run-dir", run_dir, "write into this directory instead of a timestamped one");
  t->add_option("--out", out_root, "output root (default $MORL_OUTPUT_ROOT or ./runs)");
  t->add_option("--resume", resume, "continue from a checkpoint");
  t->add_option("--log-every", train.log_every, "progress line interval in epochs");

  EvalArgs ev;
  std::string ckpt, baseline, out_dir;
  auto* e = app.add_subcommand("eval", "run an evaluation experiment");
  e->add_option("--ckpt", ckpt, "checkpoint")->required();
  e->add_option("--exp", ev.experiment, "pareto | angular | switch | perturb")->required();
  e->add_option("--force", ev.force, "force level / impulse magnitude (N)");
  e->add_option("--torque", ev.torque, "torque level (N*m)");
  e->add_option("--wc", ev.wc, "single tracking weight for perturb");
  e->add_option("--trials", ev.trials, "trial count for switch / perturb");
  e->add_option("--baseline-ckpt", baseline, "baseline policy included in perturb");
  e->add_option("--setting", ev.setting, "pareto: opposite | orthogonal");
  e->add_option("--channel", ev.channel, "switch: linear | angular");
  e->add_option("--out", out_dir, "output directory (default <run>/eval)");
  e->add_flag("--trajectory", ev.trajectory, "also write a per-step trajectory CSV");

  std::string inspect_path;
  auto* i = app.add_subcommand("inspect", "print a checkpoint manifest");
  i->add_option("--ckpt", inspect_path, "checkpoint")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (t->parsed()) {
      if (!run_dir.empty()) train.run_dir = run_dir;
      if (!out_root.empty()) train.output_root = out_root;
      if (!resume.empty()) train.resume = resume;
      return cmd_train(train);
    }
    if (e->parsed()) {
      ev.checkpoint = ckpt;
      if (!baseline.empty()) ev.baseline_checkpoint = baseline;
      if (!out_dir.empty()) ev.out_dir = out_dir;
      return cmd_eval(ev);
    }
    return cmd_inspect(inspect_path);
  } catch (const morl::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
