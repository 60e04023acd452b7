#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace graphsparse {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

/// Exponential moving average seeded with the first sample:
/// s_0 = y_0, s_t = alpha y_t + (1 - alpha) s_{t-1}.
std::vector<double> ema(const std::vector<double>& y, double alpha);

/// alpha = 2 / (window + 1).
inline double ema_alpha(int window) { return 2.0 / (window + 1.0); }

std::string line_plot_svg(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                          const std::string& ylabel);

struct Bar {
  std::string label;
  double mean = 0.0;
  double std = 0.0;
};

/// Bars with +-std whiskers.
std::string bar_chart_svg(const std::vector<Bar>& bars, const std::string& title, const std::string& ylabel);

/// value_loss, mean_episode_reward and mean_coverage against global_step, read
/// from update records. Updates with no finished episode contribute no point
/// to the reward and coverage series.
std::vector<Series> training_series(const std::vector<nlohmann::json>& records);

/// Writes one SVG per series plus plot_data.jsonl ({"plot", "x", "y"} per
/// point) into `dir`. With `smooth`, an EMA copy of each series is drawn
/// next to it and stored as "<name>_ema". Returns the files written.
std::vector<std::string> emit_training_plots(const std::vector<nlohmann::json>& records, const std::string& dir,
                                             bool smooth = false, int ema_window = 10);

/// Coverage bar chart from an evaluation report (see report_to_json).
std::vector<std::string> emit_eval_plots(const nlohmann::json& report, const std::string& dir);

/// Reads plot_data.jsonl back into series, in file order.
std::vector<Series> read_plot_data(const std::string& path);

}  // namespace graphsparse
