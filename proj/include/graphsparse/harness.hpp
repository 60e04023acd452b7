#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "graphsparse/evaluation.hpp"

namespace graphsparse {

/// Receives one log record at a time (one JSON object per line on disk).
using RecordSink = std::function<void(const nlohmann::json&)>;

constexpr int kLogVersion = 1;

nlohmann::json step_record(const StepLog& s);
nlohmann::json episode_record(const EpisodeLog& e);
nlohmann::json update_record(const UpdateLog& u);
nlohmann::json eval_step_record(EvalStrategy strategy, long episode, int step, const StepResult& r);
nlohmann::json eval_episode_record(EvalStrategy strategy, const EpisodeRecord& e);

class TrainRecorder : public TrainObserver {
 public:
  explicit TrainRecorder(RecordSink sink) : sink_(std::move(sink)) {}
  void on_step(const StepLog& s) override { sink_(step_record(s)); }
  void on_episode(const EpisodeLog& e) override { sink_(episode_record(e)); }
  void on_update(const UpdateLog& u) override { sink_(update_record(u)); }
  void on_checkpoint(const std::string& path, long global_step) override;

 private:
  RecordSink sink_;
};

class EvalRecorder : public EvalObserver {
 public:
  explicit EvalRecorder(RecordSink sink) : sink_(std::move(sink)) {}
  void on_step(EvalStrategy s, long episode, int step, const StepResult& r) override {
    sink_(eval_step_record(s, episode, step, r));
  }
  void on_episode(EvalStrategy s, const EpisodeRecord& e) override { sink_(eval_episode_record(s, e)); }

 private:
  RecordSink sink_;
};

/// Appends records to a file, one compact JSON object per line, flushed per record.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  void write(const nlohmann::json& record);
  RecordSink sink() {
    return [this](const nlohmann::json& r) { write(r); };
  }

 private:
  std::ofstream out_;
};

/// Throws std::runtime_error naming the line on malformed input.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

struct TrainRun {
  std::string resume_from;  // checkpoint to continue from
  long until = -1;          // global step; negative means total_timesteps
  bool final_checkpoint = true;
  bool write_checkpoints = true;  // false: no checkpoint files at all (replay)
};

/// Writes a header record, then trains. Returns the trainer's final global step.
long run_training(const RunConfig& config, const TrainRun& run, const RecordSink& sink);

/// Writes a header record, per-step and per-episode records, and a summary.
EvalReport run_logged_eval(const RunConfig& config, const EvalSpec& spec, const RecordSink& sink);

nlohmann::json eval_spec_json(const EvalSpec& spec);
EvalSpec eval_spec_from_json(const nlohmann::json& j);

struct ReplayResult {
  bool ok = false;
  std::string kind;
  std::size_t compared = 0;  // records compared
  std::string divergence;    // first mismatch, empty when ok
};

/// Re-executes a train or eval log from its header and compares every record
/// (checkpoint records excepted) field for field.
ReplayResult replay_log(const std::string& path);
ReplayResult replay_records(const std::vector<nlohmann::json>& records);

/// Checks that a resumed training log equals the matching stretch of an
/// uninterrupted one: every record of `resumed` must equal the records of
/// `full` that follow the update ending at the resumed run's start step.
ReplayResult compare_continuation(const std::vector<nlohmann::json>& full,
                                  const std::vector<nlohmann::json>& resumed);

}  // namespace graphsparse
