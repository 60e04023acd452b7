#include "graphsparse/harness.hpp"

#include <filesystem>
#include <stdexcept>

namespace graphsparse {

using nlohmann::json;

namespace {

json reward_json(const RewardBreakdown& r) {
  return json{{"mean_frontier", r.mean_frontier}, {"mean_structure", r.mean_structure}, {"penalty", r.penalty},
              {"bonus", r.bonus},                 {"timestep", r.timestep},             {"total", r.total}};
}

json result_fields(const StepResult& r) {
  return json{{"prune_target", r.prune_target}, {"pruned", r.pruned},       {"attempts", r.attempts},
              {"moved", r.moved},               {"revealed", r.revealed},   {"reward", reward_json(r.reward)},
              {"coverage", r.coverage},         {"tree_size", r.tree_size}, {"done", r.done},
              {"termination", termination_name(r.cause)}};
}

}  // namespace

json step_record(const StepLog& s) {
  json j{{"record", "step"},        {"global_step", s.global_step},   {"env", s.env},
         {"episode", s.episode},    {"episode_step", s.episode_step}, {"value", s.value},
         {"log_prob", s.log_prob}};
  j.update(result_fields(s.result));
  return j;
}

json episode_record(const EpisodeLog& e) {
  return json{{"record", "episode"},      {"env", e.env},
              {"episode", e.episode},     {"seed", e.seed},
              {"steps", e.steps},         {"reward_sum", e.reward_sum},
              {"reward_mean", e.reward_mean}, {"coverage", e.coverage},
              {"tree_size", e.tree_size}, {"pruned_total", e.pruned_total},
              {"termination", termination_name(e.cause)}};
}

json update_record(const UpdateLog& u) {
  const UpdateStats& s = u.stats;
  return json{{"record", "update"},
              {"global_step", u.global_step},
              {"update_idx", u.update_idx},
              {"policy_loss", s.policy_loss},
              {"value_loss", s.value_loss},
              {"entropy", s.entropy},
              {"approx_kl", s.approx_kl},
              {"clip_fraction", s.clip_fraction},
              {"first_approx_kl", s.first_approx_kl},
              {"first_max_ratio_error", s.first_max_ratio_error},
              {"minibatches", s.minibatches},
              {"steps_applied", s.steps_applied},
              {"early_stopped", s.early_stopped},
              {"episodes", u.episodes},
              {"mean_episode_reward", u.mean_episode_reward},  // NaN serializes as null
              {"mean_coverage", u.mean_coverage},
              {"tree_size_mean", u.tree_size_mean},
              {"prune_count_mean", u.prune_count_mean}};
}

json eval_step_record(EvalStrategy strategy, long episode, int step, const StepResult& r) {
  json j{{"record", "step"}, {"strategy", strategy_name(strategy)}, {"episode", episode}, {"episode_step", step}};
  j.update(result_fields(r));
  return j;
}

json eval_episode_record(EvalStrategy strategy, const EpisodeRecord& e) {
  return json{{"record", "episode"},      {"strategy", strategy_name(strategy)},
              {"episode", e.episode},     {"seed", e.seed},
              {"steps", e.steps},         {"coverage", e.coverage},
              {"tree_size", e.tree_size}, {"pruned_total", e.pruned_total},
              {"reward_sum", e.reward_sum}, {"reward_mean", e.reward_mean},
              {"termination", termination_name(e.cause)}};
}

void TrainRecorder::on_checkpoint(const std::string& path, long global_step) {
  sink_(json{{"record", "checkpoint"}, {"path", path}, {"global_step", global_step}});
}

JsonlWriter::JsonlWriter(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  out_.open(path, std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open log file " + path);
}

void JsonlWriter::write(const json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("log write failed");
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open log " + path);
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(n) + ": malformed record: " + e.what());
    }
  }
  return out;
}

long run_training(const RunConfig& config, const TrainRun& run, const RecordSink& sink) {
  TrainConfig tc = config.train;
  if (!run.write_checkpoints) {
    tc.checkpoint_every = 0;
    tc.checkpoint_dir.clear();
  }
  Trainer trainer(tc);
  if (!run.resume_from.empty()) trainer.load_checkpoint(run.resume_from);
  const long until = run.until < 0 ? config.train.ppo.total_timesteps : run.until;
  sink(json{{"record", "header"},
            {"kind", "train"},
            {"version", kLogVersion},
            {"config", config_to_json(config)},
            {"resume_from", run.resume_from},
            {"start_step", trainer.global_step()},
            {"until", until}});
  TrainRecorder recorder(sink);
  trainer.train(&recorder, until);
  const std::string& dir = tc.checkpoint_dir;
  if (run.final_checkpoint && !dir.empty()) {
    const auto path = std::filesystem::path(dir) / ("step_" + std::to_string(trainer.global_step()) + ".ckpt");
    if (!std::filesystem::exists(path)) {
      std::filesystem::create_directories(dir);
      trainer.save_checkpoint(path.string());
      recorder.on_checkpoint(path.string(), trainer.global_step());
    }
  }
  return trainer.global_step();
}

json eval_spec_json(const EvalSpec& spec) {
  json names = json::array();
  for (auto s : spec.strategies) names.push_back(strategy_name(s));
  return json{{"strategies", names},
              {"n_simulations", spec.n_simulations},
              {"step_budget", spec.step_budget},
              {"seed", spec.seed},
              {"checkpoint", spec.checkpoint},
              {"untrained", spec.untrained}};
}

EvalSpec eval_spec_from_json(const json& j) {
  EvalSpec spec;
  spec.strategies.clear();
  for (const auto& s : j.at("strategies")) spec.strategies.push_back(parse_strategy(s.get<std::string>()));
  spec.n_simulations = j.at("n_simulations").get<int>();
  spec.step_budget = j.at("step_budget").get<int>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.checkpoint = j.at("checkpoint").get<std::string>();
  spec.untrained = j.at("untrained").get<bool>();
  return spec;
}

EvalReport run_logged_eval(const RunConfig& config, const EvalSpec& spec, const RecordSink& sink) {
  sink(json{{"record", "header"},
            {"kind", "eval"},
            {"version", kLogVersion},
            {"config", config_to_json(config)},
            {"spec", eval_spec_json(spec)}});
  EvalRecorder recorder(sink);
  EvalReport report = run_eval(config, spec, &recorder);
  json summary = report_to_json(report);
  for (auto& s : summary["strategies"]) s.erase("episodes");
  summary["record"] = "summary";
  sink(summary);
  return report;
}

namespace {

bool skipped(const json& r) { return r.value("record", "") == "checkpoint"; }

}  // namespace

ReplayResult replay_records(const std::vector<json>& records) {
  ReplayResult res;
  if (records.empty() || records[0].value("record", "") != "header")
    throw std::runtime_error("replay: log does not start with a header record");
  const json& header = records[0];
  if (header.value("version", 0) != kLogVersion)
    throw std::runtime_error("replay: unsupported log version " + (header.contains("version") ? header.at("version").dump() : "(missing)"));
  res.kind = header.value("kind", "");
  const RunConfig config = config_from_json(header.at("config"));

  std::vector<json> fresh;
  RecordSink collect = [&fresh](const json& r) {
    if (!skipped(r)) fresh.push_back(r);
  };
  if (res.kind == "train") {
    TrainRun run;
    run.write_checkpoints = false;  // never touch the original run's checkpoints
    run.resume_from = header.at("resume_from").get<std::string>();
    run.until = header.at("until").get<long>();
    run_training(config, run, collect);
  } else if (res.kind == "eval") {
    run_logged_eval(config, eval_spec_from_json(header.at("spec")), collect);
  } else {
    throw std::runtime_error("replay: unknown log kind '" + res.kind + "'");
  }

  std::vector<const json*> logged;
  for (const auto& r : records)
    if (!skipped(r)) logged.push_back(&r);
  const std::size_t n = std::min(logged.size(), fresh.size());
  for (std::size_t i = 0; i < n; ++i) {
    ++res.compared;
    // Compare serialized text: NaN metrics are written as null.
    const std::string a = logged[i]->dump(), b = fresh[i].dump();
    if (a != b) {
      res.divergence = "record " + std::to_string(i) + " differs:\n  logged:   " + a + "\n  replayed: " + b;
      return res;
    }
  }
  if (logged.size() != fresh.size()) {
    res.divergence = "record count differs: logged " + std::to_string(logged.size()) + ", replayed " +
                     std::to_string(fresh.size());
    return res;
  }
  res.ok = true;
  return res;
}

ReplayResult compare_continuation(const std::vector<json>& full, const std::vector<json>& resumed) {
  ReplayResult res;
  res.kind = "train";
  if (resumed.empty() || resumed[0].value("record", "") != "header")
    throw std::runtime_error("resumed log does not start with a header record");
  const long start = resumed[0].at("start_step").get<long>();
  std::size_t i = 0;
  if (start > 0) {
    while (i < full.size() && !(full[i].value("record", "") == "update" && full[i].at("global_step") == start)) ++i;
    if (i == full.size()) {
      res.divergence = "full log has no update ending at step " + std::to_string(start);
      return res;
    }
  }
  ++i;  // past that update (or the header)
  for (std::size_t k = 1; k < resumed.size(); ++k) {
    if (skipped(resumed[k])) continue;
    while (i < full.size() && skipped(full[i])) ++i;
    if (i == full.size()) {
      res.divergence = "full log ends before the resumed one";
      return res;
    }
    ++res.compared;
    const std::string a = full[i].dump(), b = resumed[k].dump();
    if (a != b) {
      res.divergence = "resumed record " + std::to_string(k) + " differs:\n  full:    " + a + "\n  resumed: " + b;
      return res;
    }
    ++i;
  }
  res.ok = true;
  return res;
}

ReplayResult replay_log(const std::string& path) { return replay_records(read_jsonl(path)); }

}  // namespace graphsparse
