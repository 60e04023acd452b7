#include "graphsparse/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace graphsparse {

using nlohmann::json;

namespace {

constexpr int kWidth = 640, kHeight = 400;
constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

struct Range {
  double lo = 0.0, hi = 1.0;
};

Range padded(double lo, double hi) {
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void frame(std::ostringstream& os, const std::string& title, const std::string& xlabel, const std::string& ylabel,
           Range xr, Range yr, bool x_ticks) {
  const int pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double y = kTop + ph - ph * i / 4.0;
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << y << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
    if (x_ticks) {
      const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
      const double x = kLeft + pw * i / 4.0;
      os << "<text x=\"" << x << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">" << num(xv)
         << "</text>\n";
    }
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">" << escape(xlabel)
     << "</text>\n";
  os << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(ylabel) << "</text>\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

}  // namespace

std::vector<double> ema(const std::vector<double>& y, double alpha) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = i == 0 ? y[0] : alpha * y[i] + (1.0 - alpha) * out[i - 1];
  return out;
}

std::string line_plot_svg(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                          const std::string& ylabel) {
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  if (xlo > xhi) xlo = 0, xhi = 1, ylo = 0, yhi = 1;  // nothing to draw
  const Range xr = padded(xlo, xhi), yr = padded(ylo, yhi);
  const int pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  std::ostringstream os;
  frame(os, title, xlabel, ylabel, xr, yr, true);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double px = kLeft + pw * (s.x[i] - xr.lo) / (xr.hi - xr.lo);
      const double py = kTop + ph - ph * (s.y[i] - yr.lo) / (yr.hi - yr.lo);
      os << num(px) << "," << num(py) << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << kLeft + 8 << "\" y=\"" << kTop + 16 + 14 * k << "\" fill=\"" << color << "\">"
       << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bar_chart_svg(const std::vector<Bar>& bars, const std::string& title, const std::string& ylabel) {
  double hi = 0.0, lo = 0.0;
  for (const auto& b : bars) {
    hi = std::max(hi, b.mean + b.std);
    lo = std::min(lo, b.mean - b.std);
  }
  const Range yr{lo, hi > lo ? hi * 1.1 : lo + 1.0};
  const int pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  std::ostringstream os;
  frame(os, title, "", ylabel, {0, 1}, yr, false);
  const double slot = bars.empty() ? pw : static_cast<double>(pw) / bars.size();
  auto py = [&](double v) { return kTop + ph - ph * (v - yr.lo) / (yr.hi - yr.lo); };
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const auto& b = bars[k];
    const double cx = kLeft + slot * (k + 0.5);
    const double w = slot * 0.5;
    const double top = py(std::max(b.mean, 0.0)), base = py(std::min(b.mean, 0.0));
    os << "<rect x=\"" << num(cx - w / 2) << "\" y=\"" << num(top) << "\" width=\"" << num(w) << "\" height=\""
       << num(base - top) << "\" fill=\"" << kPalette[k % std::size(kPalette)] << "\"/>\n";
    os << "<line x1=\"" << num(cx) << "\" x2=\"" << num(cx) << "\" y1=\"" << num(py(b.mean - b.std)) << "\" y2=\""
       << num(py(b.mean + b.std)) << "\" stroke=\"black\"/>\n";
    for (double v : {b.mean - b.std, b.mean + b.std})
      os << "<line x1=\"" << num(cx - w / 6) << "\" x2=\"" << num(cx + w / 6) << "\" y1=\"" << num(py(v))
         << "\" y2=\"" << num(py(v)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(cx) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">" << escape(b.label)
       << "</text>\n";
    os << "<text x=\"" << num(cx) << "\" y=\"" << num(top - 4) << "\" text-anchor=\"middle\">" << num(b.mean)
       << " &#177; " << num(b.std) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<Series> training_series(const std::vector<json>& records) {
  Series loss{"value_loss", {}, {}}, reward{"mean_episode_reward", {}, {}}, cov{"mean_coverage", {}, {}};
  for (const auto& r : records) {
    if (r.value("record", "") != "update") continue;
    const double x = r.at("global_step").get<double>();
    auto add = [&](Series& s, const char* key) {
      const json& v = r.at(key);
      if (v.is_number()) {
        s.x.push_back(x);
        s.y.push_back(v.get<double>());
      }
    };
    add(loss, "value_loss");
    add(reward, "mean_episode_reward");
    add(cov, "mean_coverage");
  }
  return {loss, reward, cov};
}

std::vector<std::string> emit_training_plots(const std::vector<json>& records, const std::string& dir, bool smooth,
                                             int ema_window) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  const auto data_path = std::filesystem::path(dir) / "plot_data.jsonl";
  std::ofstream data(data_path);
  if (!data) throw std::runtime_error("cannot write " + data_path.string());
  for (const Series& s : training_series(records)) {
    std::vector<Series> drawn{s};
    if (smooth) drawn.push_back({s.name + "_ema", s.x, ema(s.y, ema_alpha(ema_window))});
    for (const Series& d : drawn)
      for (std::size_t i = 0; i < d.x.size(); ++i) data << json{{"plot", d.name}, {"x", d.x[i]}, {"y", d.y[i]}}.dump() << '\n';
    const auto path = std::filesystem::path(dir) / (s.name + ".svg");
    write_text(path, line_plot_svg(drawn, s.name, "global step", s.name));
    files.push_back(path.string());
  }
  files.push_back(data_path.string());
  return files;
}

std::vector<std::string> emit_eval_plots(const json& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Bar> bars;
  for (const auto& s : report.at("strategies"))
    bars.push_back({s.at("strategy").get<std::string>(), 100.0 * s.at("coverage").at("mean").get<double>(),
                    100.0 * s.at("coverage").at("std").get<double>()});
  const auto path = std::filesystem::path(dir) / "eval_coverage.svg";
  write_text(path, bar_chart_svg(bars, "Final explored area", "coverage (%)"));
  const auto data_path = std::filesystem::path(dir) / "eval_plot_data.jsonl";
  std::ofstream data(data_path);
  for (const auto& b : bars) data << json{{"plot", "eval_coverage"}, {"label", b.label}, {"mean", b.mean}, {"std", b.std}}.dump() << '\n';
  return {path.string(), data_path.string()};
}

std::vector<Series> read_plot_data(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<Series> out;
  std::map<std::string, std::size_t> index;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json r = json::parse(line);
    const std::string name = r.at("plot").get<std::string>();
    auto it = index.find(name);
    if (it == index.end()) {
      it = index.emplace(name, out.size()).first;
      out.push_back({name, {}, {}});
    }
    out[it->second].x.push_back(r.at("x").get<double>());
    out[it->second].y.push_back(r.at("y").get<double>());
  }
  return out;
}

}  // namespace graphsparse
