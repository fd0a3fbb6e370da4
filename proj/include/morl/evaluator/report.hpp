#ifndef MORL_EVALUATOR_REPORT_HPP_
#define MORL_EVALUATOR_REPORT_HPP_

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "morl/evaluator/experiments.hpp"

namespace morl::evaluator {

namespace detail {
inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}
inline nlohmann::json num_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }
}  // namespace detail

inline void write_sweep_csv(std::ostream& out, const std::vector<ParetoRecord>& records, SweepSetting setting) {
  out << "w_c,tracking_mse,compliance_mse,non_dominated,force_level,setting,failed,mean_vx,mean_vy,mean_omega\n";
  for (const auto& r : records) {
    out << detail::num(r.w_c) << ',' << detail::num(r.tracking_mse) << ',' << detail::num(r.compliance_mse) << ','
        << (r.non_dominated ? 1 : 0) << ',' << detail::num(r.level) << ',' << to_string(setting) << ','
        << (r.failed ? 1 : 0) << ',' << detail::num(r.mean_velocity[0]) << ',' << detail::num(r.mean_velocity[1])
        << ',' << detail::num(r.mean_velocity[2]) << '\n';
  }
}

inline void write_switch_csv(std::ostream& out, const std::vector<SwitchTrace>& traces) {
  out << "trial,t,w_c,v,target\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& tr = traces[i];
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      out << i << ',' << detail::num(tr.t[k]) << ',' << detail::num(tr.w_c[k]) << ',' << detail::num(tr.velocity[k])
          << ',' << detail::num(tr.target[k]) << '\n';
    }
  }
}

inline void write_perturbation_csv(std::ostream& out, const std::vector<PerturbationReport>& reports) {
  out << "policy,magnitude,trial,success,peak_effort\n";
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < r.success.size(); ++k) {
      out << r.label << ',' << detail::num(r.magnitude) << ',' << k << ',' << (r.success[k] ? 1 : 0) << ','
          << detail::num(r.peak_effort[k]) << '\n';
    }
  }
}

// Summaries grouped by level.
inline nlohmann::json sweep_summary_json(const std::vector<ParetoRecord>& records) {
  nlohmann::json levels = nlohmann::json::array();
  std::vector<double> seen;
  for (const auto& r : records) {
    if (std::find(seen.begin(), seen.end(), r.level) != seen.end()) continue;
    seen.push_back(r.level);
    std::vector<ParetoRecord> part;
    for (const auto& q : records) {
      if (q.level == r.level) part.push_back(q);
    }
    const auto s = summarize_sweep(part);
    levels.push_back({{"level", r.level},
                      {"records", part.size()},
                      {"failed", s.failed},
                      {"spearman_wc_tracking", detail::num_or_null(s.spearman_tracking)},
                      {"spearman_wc_compliance", detail::num_or_null(s.spearman_compliance)},
                      {"non_dominated_fraction", s.non_dominated_fraction}});
  }
  return {{"levels", levels}};
}

struct SwitchSummary {
  std::size_t trials = 0;
  std::size_t failed = 0;
  double worst_responsiveness = 0.0;  // inf when some segment never responds
  double worst_convergence = 0.0;
  bool all_responsive = false;
};

inline SwitchSummary summarize_switch(const std::vector<SwitchTrace>& traces, const EvalSettings& es) {
  SwitchSummary s;
  s.trials = traces.size();
  s.all_responsive = true;
  for (const auto& tr : traces) {
    if (tr.failed) {
      ++s.failed;
      s.all_responsive = false;
      continue;
    }
    for (double r : tr.responsiveness_times) {
      const double v = std::isnan(r) ? INFINITY : r;
      s.worst_responsiveness = std::max(s.worst_responsiveness, v);
      if (!(v <= es.responsiveness_seconds)) s.all_responsive = false;
    }
    for (double c : tr.convergence_times) s.worst_convergence = std::max(s.worst_convergence, std::isnan(c) ? INFINITY : c);
  }
  return s;
}

inline nlohmann::json switch_summary_json(const std::vector<SwitchTrace>& traces, const EvalSettings& es) {
  const auto s = summarize_switch(traces, es);
  nlohmann::json per = nlohmann::json::array();
  for (const auto& tr : traces) {
    nlohmann::json conv = nlohmann::json::array();
    nlohmann::json resp = nlohmann::json::array();
    for (double c : tr.convergence_times) conv.push_back(detail::num_or_null(c));
    for (double r : tr.responsiveness_times) resp.push_back(detail::num_or_null(r));
    per.push_back({{"failed", tr.failed}, {"convergence_s", conv}, {"responsiveness_s", resp}});
  }
  return {{"trials", s.trials},
          {"failed", s.failed},
          {"schedule", es.switch_schedule},
          {"all_responsive_within_s", es.responsiveness_seconds},
          {"all_responsive", s.all_responsive},
          {"worst_responsiveness_s", detail::num_or_null(s.worst_responsiveness)},
          {"worst_convergence_s", detail::num_or_null(s.worst_convergence)},
          {"per_trial", per}};
}

inline nlohmann::json perturbation_summary_json(const std::vector<PerturbationReport>& reports) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& r : reports) {
    cells.push_back({{"policy", r.label},
                     {"magnitude", r.magnitude},
                     {"trials", r.trials},
                     {"success_rate", r.success_rate},
                     {"peak_effort_mean", r.peak_effort_mean ? nlohmann::json(*r.peak_effort_mean) : nlohmann::json()},
                     {"peak_effort_std", r.peak_effort_std ? nlohmann::json(*r.peak_effort_std) : nlohmann::json()}});
  }
  return {{"cells", cells}};
}

}  // namespace morl::evaluator

#endif  // MORL_EVALUATOR_REPORT_HPP_
