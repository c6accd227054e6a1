#include "bpre/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bpre/errors.hpp"

namespace bpre {

namespace {

int find_point(const ReplicateSeries& s, int idx) {
  const auto it = std::lower_bound(s.index.begin(), s.index.end(), idx);
  if (it == s.index.end() || *it != idx) return -1;
  return static_cast<int>(it - s.index.begin());
}

// Per-replicate contribution over its own window [tau1, tau2].
struct ReplicateStats {
  double ratio_mean = 0;
  double ratio_sq_mean = 0;
  double window_sum = 0;  // sum of counts over the window
  int steps = 0;
  int tau1 = 0, tau2 = 0;
};

ReplicateStats replicate_stats(const ReplicateSeries& s,
                               const ReplicateWindow& w, double c) {
  const int a = find_point(s, w.tau1);
  const int b = find_point(s, w.tau2);
  if (a < 0 || b < 0 || b <= a) {
    throw estimation_error("window [" + std::to_string(w.tau1) + "," +
                           std::to_string(w.tau2) + "] not in series " + s.id);
  }
  ReplicateStats st;
  st.tau1 = w.tau1;
  st.tau2 = w.tau2;
  st.steps = b - a;
  for (int i = a + 1; i <= b; ++i) {
    const double ratio = s.value[i] / s.value[i - 1];
    st.ratio_mean += ratio;
    st.ratio_sq_mean += ratio * ratio;
  }
  st.ratio_mean /= st.steps;
  st.ratio_sq_mean /= st.steps;
  for (int i = a; i <= b; ++i) st.window_sum += s.value[i] / c;
  return st;
}

GroupEstimate estimate_group(const SeriesTable& table,
                             const std::vector<ReplicateWindow>& windows,
                             const std::vector<std::string>& excluded,
                             double c) {
  const std::size_t J = windows.size();
  if (J < 2) {
    std::string msg = "fewer than 2 usable replicates";
    if (!excluded.empty()) {
      msg += " (excluded:";
      for (const auto& id : excluded) msg += ' ' + id;
      msg += ')';
    }
    throw estimation_error(msg);
  }

  std::vector<ReplicateStats> stats;
  stats.reserve(J);
  for (const auto& w : windows) {
    const auto it =
        std::find_if(table.series.begin(), table.series.end(),
                     [&](const ReplicateSeries& s) { return s.id == w.replicate; });
    stats.push_back(replicate_stats(*it, w, c));
  }

  GroupEstimate out;
  out.windows = windows;
  out.excluded = excluded;
  double m = 0, m2 = 0, len = 0;
  for (const auto& st : stats) {
    m += st.ratio_mean;
    m2 += st.ratio_sq_mean;
    len += st.steps;
  }
  m /= static_cast<double>(J);
  m2 /= static_cast<double>(J);
  out.mean_window_len = len / static_cast<double>(J);

  out.est.m_hat = m;
  out.est.m2_hat = m2;
  out.est.r_hat = std::sqrt(m2) / m;
  out.est.sigma2_star_hat = m2 - m * m;
  out.est.jensen_violation = out.est.sigma2_star_hat < 0.0;
  if (!(m > 1.0)) {
    throw estimation_error("subcritical sample mean m_hat = " +
                           std::to_string(m) + " <= 1");
  }

  // Scaled sums over each replicate's own window; equal replicate weights.
  double mA = 0;
  std::vector<double> scaled(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double N_hat = scaling_factor(m, stats[j].tau1, stats[j].tau2);
    scaled[j] = stats[j].window_sum / N_hat;
    mA += scaled[j];
  }
  mA /= static_cast<double>(J);
  out.est.mA_hat = mA;
  out.est.scaling_N_hat =
      scaling_factor(m, stats.front().tau1, stats.front().tau2);

  double ss = 0;
  for (double x : scaled) ss += (x - mA) * (x - mA);
  out.per_replicate_var = ss / static_cast<double>(J - 1);
  out.lambda_hat = out.per_replicate_var / static_cast<double>(J);
  out.m_se = std::sqrt(std::max(0.0, out.est.sigma2_star_hat) /
                       (static_cast<double>(J) * out.mean_window_len));
  return out;
}

}  // namespace

SeriesTable load_series_csv(const std::string& path, SeriesKind kind) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("replicate,index,value", 0) != 0) {
    throw parse_error(path + ": expected header 'replicate,index,value'");
  }
  SeriesTable table;
  table.kind = kind;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string rep, idx_s, val_s;
    if (!std::getline(ss, rep, ',') || !std::getline(ss, idx_s, ',') ||
        !std::getline(ss, val_s)) {
      throw parse_error(path + ":" + std::to_string(line_no) + ": bad row");
    }
    int idx;
    double val;
    try {
      idx = std::stoi(idx_s);
      val = std::stod(val_s);
    } catch (const std::exception&) {
      throw parse_error(path + ":" + std::to_string(line_no) +
                        ": non-numeric index or value");
    }
    if (val < 0.0) {
      throw parse_error(path + ":" + std::to_string(line_no) +
                        ": negative value");
    }
    auto it = std::find_if(table.series.begin(), table.series.end(),
                           [&](const ReplicateSeries& s) { return s.id == rep; });
    if (it == table.series.end()) {
      table.series.push_back(ReplicateSeries{rep, {}, {}});
      it = table.series.end() - 1;
    }
    if (!it->index.empty() && idx <= it->index.back()) {
      throw parse_error(path + ":" + std::to_string(line_no) +
                        ": indices must be strictly increasing in replicate " +
                        rep);
    }
    if (kind == SeriesKind::covid_cumulative && !it->value.empty() &&
        val < it->value.back()) {
      throw parse_error(path + ":" + std::to_string(line_no) +
                        ": cumulative cases decrease in replicate " + rep +
                        " at week " + std::to_string(idx));
    }
    it->index.push_back(idx);
    it->value.push_back(val);
  }
  if (table.series.empty()) throw parse_error(path + ": no rows");
  std::size_t len = table.series.front().index.size();
  for (const auto& s : table.series) {
    if (s.index.size() != len) {
      throw parse_error(path + ": ragged replicates (" + s.id + " has " +
                        std::to_string(s.index.size()) + " rows, expected " +
                        std::to_string(len) + ")");
    }
  }
  return table;
}

ReplicateWindow detect_window_pcr(const ReplicateSeries& series, double f_star,
                                  double m_c) {
  if (!(f_star > 0.0)) throw parameter_error("F* must be positive");
  if (!(m_c > 1.0)) throw parameter_error("m_c must exceed 1");
  const std::size_t len = series.value.size();
  std::size_t start = len;
  for (std::size_t i = 0; i < len; ++i) {
    if (series.value[i] >= f_star) {
      start = i;
      break;
    }
  }
  if (start == len) {
    throw estimation_error("replicate " + series.id +
                           ": no exponential phase (never reaches F*)");
  }
  std::size_t end = start;
  while (end + 1 < len && series.value[end] > 0.0 &&
         series.value[end + 1] / series.value[end] >= m_c) {
    ++end;
  }
  if (end == start) {
    throw estimation_error("replicate " + series.id +
                           ": no exponential phase (no growth step >= m_c)");
  }
  return ReplicateWindow{series.id, series.index[start], series.index[end]};
}

ReplicateWindow detect_window_covid(const ReplicateSeries& series, double t1,
                                    double r1, double r2) {
  if (!(t1 > 0.0)) throw parameter_error("T1 must be positive");
  if (!(r1 > r2 && r2 > 1.0)) throw parameter_error("need r1 > r2 > 1");
  const std::size_t len = series.value.size();
  std::size_t start = len;
  for (std::size_t i = 0; i + 1 < len; ++i) {
    if (series.value[i] >= t1 && series.value[i] > 0.0 &&
        series.value[i + 1] / series.value[i] <= r1) {
      start = i;
      break;
    }
  }
  if (start == len) {
    throw estimation_error("replicate " + series.id +
                           ": no stable growth window (threshold or growth "
                           "settling never reached)");
  }
  std::size_t end = start;
  while (end + 1 < len && series.value[end + 1] / series.value[end] >= r2) {
    ++end;
  }
  if (end == start) {
    throw estimation_error("replicate " + series.id +
                           ": no stable growth window (growth below r2 "
                           "immediately)");
  }
  return ReplicateWindow{series.id, series.index[start], series.index[end]};
}

GroupEstimate estimate_group_pcr(const SeriesTable& table, const PcrParams& p) {
  std::vector<ReplicateWindow> windows;
  std::vector<std::string> excluded;
  for (const auto& s : table.series) {
    try {
      windows.push_back(detect_window_pcr(s, p.f_star, p.m_c));
    } catch (const estimation_error&) {
      excluded.push_back(s.id);
    }
  }
  return estimate_group(table, windows, excluded, p.c);
}

GroupEstimate estimate_group_covid(const SeriesTable& table,
                                   const CovidParams& p) {
  std::vector<ReplicateWindow> windows;
  std::vector<std::string> excluded;
  for (const auto& s : table.series) {
    try {
      windows.push_back(detect_window_covid(s, p.t1, p.r1, p.r2));
    } catch (const estimation_error&) {
      excluded.push_back(s.id);
    }
  }
  if (p.common_tau && !windows.empty()) {
    int tau = windows.front().tau1;
    for (const auto& w : windows) tau = std::max(tau, w.tau1);
    for (auto& w : windows) {
      if (w.tau2 <= tau) {
        excluded.push_back(w.replicate);
        w.replicate.clear();
      } else {
        w.tau1 = tau;
      }
    }
    windows.erase(std::remove_if(windows.begin(), windows.end(),
                                 [](const ReplicateWindow& w) {
                                   return w.replicate.empty();
                                 }),
                  windows.end());
  }
  return estimate_group(table, windows, excluded, 1.0);
}

namespace {

QuantReport quantify(const GroupEstimate& target, const GroupEstimate& calib,
                     double level) {
  QuantReport report;
  report.target = target;
  report.calibrator = calib;
  report.R_hat = estimate_ratio(target.est, calib.est);
  // Per-group 1/J applied through lambda_hat; groups may differ in size.
  report.lambda_R =
      report.R_hat * report.R_hat *
      (target.lambda_hat / (target.est.mA_hat * target.est.mA_hat) +
       calib.lambda_hat / (calib.est.mA_hat * calib.est.mA_hat));
  const std::int64_t J = static_cast<std::int64_t>(
      std::min(target.windows.size(), calib.windows.size()));
  report.ci =
      build_ci(report.R_hat, report.lambda_R, J, CIMethod::gaussian, level);
  return report;
}

}  // namespace

QuantReport relative_quantify_pcr(const SeriesTable& target,
                                  const SeriesTable& calibrator,
                                  const PcrParams& p, double level) {
  return quantify(estimate_group_pcr(target, p), estimate_group_pcr(calibrator, p),
                  level);
}

QuantReport relative_quantify_covid(const SeriesTable& group1,
                                    const SeriesTable& group2,
                                    const CovidParams& p, double level) {
  return quantify(estimate_group_covid(group1, p),
                  estimate_group_covid(group2, p), level);
}

namespace {

nlohmann::json group_to_json(const GroupEstimate& g) {
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& w : g.windows) {
    windows.push_back({{"replicate", w.replicate},
                       {"tau1", w.tau1},
                       {"tau2", w.tau2}});
  }
  return {{"m_hat", g.est.m_hat},
          {"m_se", g.m_se},
          {"m2_hat", g.est.m2_hat},
          {"r_hat", g.est.r_hat},
          {"mA_hat", g.est.mA_hat},
          {"sigma2_star_hat", g.est.sigma2_star_hat},
          {"lambda_hat", g.lambda_hat},
          {"replicates", g.windows.size()},
          {"mean_window_length", g.mean_window_len},
          {"windows", windows},
          {"excluded", g.excluded}};
}

}  // namespace

nlohmann::json quant_report_to_json(const QuantReport& report) {
  return {{"schema_version", 1},
          {"R_hat", report.R_hat},
          {"lambda_R", report.lambda_R},
          {"ci", {{"lower", report.ci.lower},
                  {"upper", report.ci.upper},
                  {"level", report.ci.level},
                  {"method", "gaussian"}}},
          {"target", group_to_json(report.target)},
          {"calibrator", group_to_json(report.calibrator)}};
}

std::string quant_report_to_text(const QuantReport& report) {
  std::ostringstream out;
  out << "relative quantitation\n";
  out << "  R_hat    = " << report.R_hat << "\n";
  out << "  var(R)   = " << report.lambda_R << "\n";
  out << "  " << static_cast<int>(report.ci.level * 100) << "% CI  = ("
      << report.ci.lower << ", " << report.ci.upper << ")\n";
  const auto group = [&](const char* name, const GroupEstimate& g) {
    out << name << ": m_hat = " << g.est.m_hat << " (SE " << g.m_se
        << "), mA_hat = " << g.est.mA_hat << ", J = " << g.windows.size()
        << "\n  windows:";
    for (const auto& w : g.windows) {
      out << ' ' << w.replicate << "=[" << w.tau1 << ',' << w.tau2 << ']';
    }
    out << '\n';
    if (!g.excluded.empty()) {
      out << "  excluded:";
      for (const auto& id : g.excluded) out << ' ' << id;
      out << '\n';
    }
  };
  group("target", report.target);
  group("calibrator", report.calibrator);
  return out.str();
}

}  // namespace bpre
