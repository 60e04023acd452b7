// Command line front end: train, eval, render, replay, plot.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "graphsparse/harness.hpp"
#include "graphsparse/plot.hpp"

using namespace graphsparse;
using nlohmann::json;

namespace {

struct ConfigFlags {
  std::string path;
  std::string profile;
  std::int64_t seed = -1;
  std::vector<std::string> sets;

  void attach(CLI::App* app, const char* seed_help) {
    app->add_option("--config", path, "JSON config file; keys as in docs/config.md")->check(CLI::ExistingFile);
    app->add_option("--profile,--scale", profile, "Profile: paper, desk or tiny (overrides the file's \"profile\")");
    app->add_option("--seed", seed, seed_help)->check(CLI::NonNegativeNumber);
    app->add_option("--set", sets, "Override one config key, KEY=VALUE (VALUE parsed as JSON, else string); repeatable");
  }

  json overrides() const {
    json o = json::object();
    if (!profile.empty()) o["profile"] = profile;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError(kv, "--set expects KEY=VALUE");
      const std::string value = kv.substr(eq + 1);
      json v = json::parse(value, nullptr, false);
      o[kv.substr(0, eq)] = v.is_discarded() ? json(value) : v;
    }
    return o;
  }
};

void write_json_file(const std::string& path, const json& j) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << '\n';
}

void print_summary(const EvalReport& report) {
  std::cout << "step budget " << report.step_budget << ", n = " << report.spec.n_simulations << ", eval seed "
            << report.spec.seed << "\n";
  for (const auto& s : report.strategies) {
    std::cout << "  " << strategy_name(s.strategy) << ": coverage " << 100.0 * s.coverage.mean << " +- "
              << 100.0 * s.coverage.std << " %, final tree " << s.tree_size.mean << " +- " << s.tree_size.std
              << ", reward/step " << s.reward_mean.mean;
    if (s.has_reduction) std::cout << ", tree reduction vs none " << 100.0 * s.tree_reduction << " %";
    std::cout << "\n";
    if (!s.coverage.warning.empty()) std::cerr << "warning: " << s.coverage.warning << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned sparsification of RRT exploration graphs: training, evaluation and diagnostics"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train the pruning policy with PPO");
  ConfigFlags train_cfg;
  train_cfg.attach(train, "Run seed (config key 'seed')");
  std::string resume, train_log = "runs/train.jsonl", ckpt_dir;
  long until = -1;
  int ckpt_every = -1;
  train->add_option("--resume", resume, "Continue from this checkpoint")->check(CLI::ExistingFile);
  train->add_option("--log", train_log, "JSONL training log")->capture_default_str();
  train->add_option("--until", until, "Stop at this global step (default: total_timesteps)");
  train->add_option("--checkpoint-dir", ckpt_dir, "Checkpoint directory (default: config, else runs/checkpoints)");
  train->add_option("--checkpoint-every", ckpt_every, "Checkpoint every N updates (0: only at the end)")
      ->check(CLI::NonNegativeNumber);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate pruning strategies on paired episode seeds");
  ConfigFlags eval_cfg;
  eval_cfg.attach(eval, "Evaluation seed base (config key 'eval_seed')");
  std::vector<std::string> strategies{"none"};
  int n_sims = 0, budget = -1;
  std::string checkpoint, report_path, eval_log, plot_dir;
  bool untrained = false, noise_ratios = false;
  eval->add_option("--strategy", strategies, "none, random, learned, learned-noisy or all; repeatable")
      ->capture_default_str();
  eval->add_option("--n", n_sims, "Episodes per strategy (default: n_simulations)")->check(CLI::PositiveNumber);
  eval->add_option("--budget", budget, "Pruning rounds per episode (default: eval_step_budget, 0 = max_robot_moves)")
      ->check(CLI::NonNegativeNumber);
  eval->add_option("--checkpoint", checkpoint, "Policy checkpoint for the learned strategies");
  eval->add_flag("--untrained", untrained, "Use freshly initialised policy weights instead of a checkpoint");
  eval->add_option("--report", report_path, "Write the JSON report here");
  eval->add_option("--log", eval_log, "Write per-step JSONL records here (replayable)");
  eval->add_option("--plot-dir", plot_dir, "Write the coverage bar chart here");
  eval->add_flag("--noise-ratios", noise_ratios,
                 "Also report untrained noisy/base ratios of per-step reward and coverage");

  // render
  auto* render_cmd = app.add_subcommand("render", "Render the map, tree and observation planes of one episode step");
  ConfigFlags render_cfg;
  render_cfg.attach(render_cmd, "Evaluation seed base (config key 'eval_seed')");
  std::string render_strategy = "none", render_ckpt, render_out = "renders";
  long render_episode = 0;
  int render_step = 0;
  bool render_untrained = false;
  render_cmd->add_option("--strategy", render_strategy, "Pruning strategy driving the episode")->capture_default_str();
  render_cmd->add_option("--checkpoint", render_ckpt, "Policy checkpoint for the learned strategies");
  render_cmd->add_flag("--untrained", render_untrained, "Use freshly initialised policy weights");
  render_cmd->add_option("--episode", render_episode, "Evaluation episode index")->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--step", render_step, "Render after this many pruning rounds")
      ->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--out", render_out, "Output directory")->capture_default_str();

  // replay
  auto* replay = app.add_subcommand("replay", "Re-execute a train or eval log and compare every record");
  std::string replay_path;
  replay->add_option("log", replay_path, "JSONL log to check")->required()->check(CLI::ExistingFile);

  // plot
  auto* plot = app.add_subcommand("plot", "Plot a training log or an evaluation report");
  std::string plot_input, plot_out = "plots";
  bool plot_ema = false;
  int ema_window = 10;
  plot->add_option("input", plot_input, "Training JSONL log or eval JSON report")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "Output directory")->capture_default_str();
  plot->add_flag("--ema", plot_ema, "Overlay an exponential moving average");
  plot->add_option("--ema-window", ema_window, "EMA window in updates (alpha = 2/(window+1))")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      json o = train_cfg.overrides();
      if (train_cfg.seed >= 0) o["seed"] = train_cfg.seed;
      if (!ckpt_dir.empty()) o["checkpoint_dir"] = ckpt_dir;
      if (ckpt_every >= 0) o["checkpoint_every"] = ckpt_every;
      RunConfig rc = load_config(train_cfg.path, o);
      if (rc.train.checkpoint_dir.empty()) rc.train.checkpoint_dir = "runs/checkpoints";
      JsonlWriter log(train_log);
      TrainRun run;
      run.resume_from = resume;
      run.until = until;
      const long step = run_training(rc, run, log.sink());
      std::cout << "trained to global step " << step << "; log " << train_log << ", checkpoints in "
                << rc.train.checkpoint_dir << "\n";
      return 0;
    }
    if (*eval) {
      json o = eval_cfg.overrides();
      if (eval_cfg.seed >= 0) o["eval_seed"] = eval_cfg.seed;
      const RunConfig rc = load_config(eval_cfg.path, o);
      EvalSpec spec;
      spec.strategies.clear();
      for (const auto& s : strategies) {
        if (s == "all") {
          for (auto e : {EvalStrategy::kNone, EvalStrategy::kRandom, EvalStrategy::kLearned,
                         EvalStrategy::kLearnedNoisy})
            spec.strategies.push_back(e);
        } else {
          spec.strategies.push_back(parse_strategy(s));
        }
      }
      spec.n_simulations = n_sims > 0 ? n_sims : rc.eval.n_simulations;
      spec.step_budget = budget >= 0 ? budget : rc.eval.step_budget;
      spec.seed = rc.eval.seed;
      spec.checkpoint = checkpoint;
      spec.untrained = untrained;
      std::unique_ptr<JsonlWriter> log;
      if (!eval_log.empty()) log = std::make_unique<JsonlWriter>(eval_log);
      const EvalReport report =
          log ? run_logged_eval(rc, spec, log->sink()) : run_eval(rc, spec);
      json rj = report_to_json(report);
      if (noise_ratios) {
        const NoiseRatios nr = noise_variant_ratios(rc, spec.n_simulations, spec.seed);
        rj["noise_variant"] = {{"reward_ratio", nr.reward_ratio},
                               {"coverage_ratio", nr.coverage_ratio},
                               {"base_reward_mean", nr.base.strategies[0].reward_mean.mean},
                               {"noisy_reward_mean", nr.noisy.strategies[0].reward_mean.mean},
                               {"base_coverage_mean", nr.base.strategies[0].coverage.mean},
                               {"noisy_coverage_mean", nr.noisy.strategies[0].coverage.mean}};
        std::cout << "untrained noisy/base: reward ratio " << nr.reward_ratio << ", coverage ratio "
                  << nr.coverage_ratio << "\n";
      }
      print_summary(report);
      if (!report_path.empty()) write_json_file(report_path, rj);
      if (!plot_dir.empty()) emit_eval_plots(rj, plot_dir);
      return 0;
    }
    if (*render_cmd) {
      json o = render_cfg.overrides();
      if (render_cfg.seed >= 0) o["eval_seed"] = render_cfg.seed;
      const RunConfig rc = load_config(render_cfg.path, o);
      const EvalStrategy strategy = parse_strategy(render_strategy);
      const bool learned = strategy == EvalStrategy::kLearned || strategy == EvalStrategy::kLearnedNoisy;
      SimConfig sim = rc.train.sim;
      if (strategy == EvalStrategy::kLearnedNoisy) sim.pruner.noise_enabled = true;
      PolicyConfig pc = rc.train.policy;
      if (strategy == EvalStrategy::kLearnedNoisy && render_untrained) pc.component_gates = true;
      std::unique_ptr<Policy> policy;
      ParameterSet params;
      if (learned) {
        policy = std::make_unique<Policy>(pc);
        if (render_untrained)
          params = policy->init_params(derive_seed(rc.train.seed, {0x696e6974ULL}));
        else if (render_ckpt.empty())
          throw std::invalid_argument("render: learned strategies need --checkpoint or --untrained");
        else
          params = load_policy_params(render_ckpt, *policy);
      }
      Simulator env(sim, eval_episode_seed(rc.eval.seed, render_episode));
      EpisodicMemory memory;
      const PruneStrategy prune = strategy == EvalStrategy::kNone     ? PruneStrategy::kNone
                                  : strategy == EvalStrategy::kRandom ? PruneStrategy::kRandom
                                                                      : PruneStrategy::kMixture;
      while (env.steps() < render_step && !env.done()) {
        GmmAction action;
        if (learned) {
          PolicyOutput out = policy->forward(params, env.observation(), memory);
          action = to_gmm(out.action_mean, pc);
          memory = std::move(out.new_memory);
        }
        env.step(prune, learned ? &action : nullptr);
      }
      std::filesystem::create_directories(render_out);
      const std::string stem = (std::filesystem::path(render_out) /
                                ("episode" + std::to_string(render_episode) + "_step" + std::to_string(env.steps())))
                                   .string();
      write_ppm(stem + ".ppm", env.map().width(), env.map().height(), composite(env.map(), env.tree(), env.robot()));
      write_channels_pgm(stem + "_channels.pgm", env.image());
      std::cout << "step " << env.steps() << (env.done() ? " (episode finished)" : "") << ", coverage "
                << coverage(env.map()) << ", tree " << env.tree().size() << "\nwrote " << stem << ".ppm and "
                << stem << "_channels.pgm\n";
      return 0;
    }
    if (*replay) {
      const ReplayResult r = replay_log(replay_path);
      if (!r.ok) {
        std::cerr << "replay diverged (" << r.kind << " log, " << r.compared << " records compared): " << r.divergence
                  << "\n";
        return 1;
      }
      std::cout << "replay ok: " << r.kind << " log, " << r.compared << " records identical\n";
      return 0;
    }
    if (*plot) {
      std::vector<std::string> files;
      std::ifstream probe(plot_input);
      json first = json::parse(probe, nullptr, false);
      if (!first.is_discarded() && first.is_object() && first.contains("strategies") && !first.contains("record"))
        files = emit_eval_plots(first, plot_out);
      else
        files = emit_training_plots(read_jsonl(plot_input), plot_out, plot_ema, ema_window);
      for (const auto& f : files) std::cout << "wrote " << f << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
