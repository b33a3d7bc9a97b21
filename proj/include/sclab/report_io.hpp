#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sclab/identities.hpp"
#include "sclab/mdp_io.hpp"
#include "sclab/proxy.hpp"
#include "sclab/sampling.hpp"
#include "sclab/trust_region.hpp"

namespace sclab {

/// Metadata block embedded in every output artifact.
inline nlohmann::json make_meta(const std::string& command, const nlohmann::json& config,
                                const std::string& input_digest) {
  return {{"tool", "sclab"},
          {"version", kVersion},
          {"command", command},
          {"config", config},
          {"input_digest", input_digest}};
}

/// Full table set of the exact analysis: values, occupancies, the
/// conditioned policy and its success rate, and the influence profile.
inline nlohmann::json analyze_report(const Mdp& mdp, const Policy& behavior) {
  const ValueBundle values = value_bundle(mdp, behavior);
  const OccupancyPair occ = occupancy_pair(mdp, behavior, values);
  const InfluenceProfile influence = action_influence(mdp, behavior, values);
  const Policy conditioned = success_conditioned_policy(mdp, behavior, values);
  const ValueBundle improved = value_bundle(mdp, conditioned);

  nlohmann::json out;
  out["rho"] = values.rho;
  out["rho_plus"] = improved.rho;
  out["V"] = values.v;
  nlohmann::json q = nlohmann::json::array(), a = nlohmann::json::array(),
                 pi = nlohmann::json::array();
  for (std::int32_t s : mdp.non_terminal_states()) {
    q.push_back(values.q[static_cast<std::size_t>(s)]);
    a.push_back(values.a[static_cast<std::size_t>(s)]);
    pi.push_back(conditioned.row(s));
  }
  out["Q"] = std::move(q);
  out["A"] = std::move(a);
  out["pi_plus"] = std::move(pi);
  out["d"] = occ.d;
  out["d_plus"] = occ.d_plus;
  out["influence"] = influence.influence;
  return out;
}

inline nlohmann::json identity_report_json(const IdentityReport& r) {
  return {{"check", r.check},
          {"pass", r.pass},
          {"max_residual", r.max_residual},
          {"tolerance", r.tolerance},
          {"aggregate_residual", r.aggregate_residual},
          {"aggregate_tolerance", r.aggregate_tolerance}};
}

/// Runs the four identity suites; all = conjunction of the pass flags. The
/// tolerance override rescales the residual gates (the one-sided 1e-12
/// aggregate slack is fixed by contract).
inline nlohmann::json identities_report(const Mdp& mdp, const Policy& behavior,
                                        const Policy* conditioned_override = nullptr,
                                        double tol = kIdentityTol) {
  nlohmann::json out;
  bool all = true;
  for (IdentityReport r : {triple_identity(mdp, behavior, conditioned_override),
                           weighted_identity(mdp, behavior, conditioned_override),
                           improvement_check(mdp, behavior, conditioned_override),
                           exact_improvement(mdp, behavior, conditioned_override)}) {
    if (tol != kIdentityTol) {
      r.tolerance = tol;
      r.finish();
    }
    all = all && r.pass;
    out["checks"].push_back(identity_report_json(r));
  }
  out["all_pass"] = all;
  return out;
}

/// Optimality verdict plus the constraint values of the KL geometries under
/// the same behavior occupancy, for side-by-side comparison.
inline nlohmann::json trust_region_report(const Mdp& mdp, const Policy& behavior,
                                          std::int32_t n_samples, std::uint64_t seed, double tol) {
  const OptimalityReport report = verify_optimality(mdp, behavior, n_samples, seed, tol);
  const ValueBundle values = value_bundle(mdp, behavior);
  const OccupancyPair occ = occupancy_pair(mdp, behavior, values);
  const Policy conditioned = success_conditioned_policy(mdp, behavior, values);
  double reverse = 0.0, forward = 0.0;
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    reverse += occ.d[idx] * reverse_kl(conditioned.row(s), behavior.row(s));
    forward += occ.d[idx] * forward_kl(conditioned.row(s), behavior.row(s));
  }
  return {{"radius", report.radius},
          {"objective_pi_plus", report.objective_pi_plus},
          {"constraint_pi_plus", report.constraint_pi_plus},
          {"oracle_best", report.oracle_best},
          {"gap", report.gap},
          {"binding", report.binding},
          {"n_samples", report.n_samples},
          {"seed", report.seed},
          {"tol", report.tol},
          {"comparison",
           {{"chi2_weighted_d_plus", report.constraint_pi_plus},
            {"reverse_kl_weighted_d", reverse},
            {"forward_kl_weighted_d", forward}}}};
}

inline nlohmann::json loss_report_json(const LossReport& r) {
  const auto finite_or_string = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return "inf";
  };
  return {{"loss_candidate", finite_or_string(r.loss_candidate)},
          {"loss_conditioned", r.loss_conditioned},
          {"excess", finite_or_string(r.excess)},
          {"shift_ratio", r.shift_ratio},
          {"shift_ratio_transposed", r.shift_ratio_transposed},
          {"bound", finite_or_string(r.bound)},
          {"deployment_gap", r.deployment_gap},
          {"bound_holds", r.bound_holds}};
}

// --- CSV ---------------------------------------------------------------

/// Comment-prefixed metadata, a header row, then fmt17 cells; LF endings.
inline std::string csv_table(const nlohmann::json& meta, const std::vector<std::string>& columns,
                             const std::vector<std::vector<double>>& rows) {
  std::string out;
  out += "# tool=sclab version=" + std::string(kVersion) + "\n";
  out += "# command=" + meta.at("command").get<std::string>() + "\n";
  out += "# config=" + meta.at("config").dump() + "\n";
  out += "# input_digest=" + meta.at("input_digest").get<std::string>() + "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out += columns[c];
    out += (c + 1 < columns.size()) ? "," : "\n";
  }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += fmt17(row[c]);
      out += (c + 1 < row.size()) ? "," : "\n";
    }
  }
  return out;
}

inline std::string tolerance_sweep_csv(const nlohmann::json& meta,
                                       const std::vector<double>& deltas, double epsilon,
                                       std::int32_t k) {
  std::vector<std::vector<double>> rows;
  for (double delta : deltas) {
    const double p_chi2 = rare_action_tolerance(delta, k, epsilon, Divergence::Chi2);
    const double p_kl = rare_action_tolerance(delta, k, epsilon, Divergence::ForwardKl);
    rows.push_back({delta, p_chi2, p_kl, p_chi2 / std::sqrt(delta),
                    p_kl * std::log(1.0 / delta)});
  }
  return csv_table(meta,
                   {"delta", "p_chi2", "p_kl", "p_chi2_over_sqrt_delta",
                    "p_kl_times_log_inv_delta"},
                   rows);
}

inline std::string threshold_sweep_csv(const nlohmann::json& meta,
                                       const std::vector<SweepRow>& rows) {
  std::vector<std::vector<double>> cells;
  for (const auto& r : rows)
    cells.push_back(
        {r.theta, r.alignment, r.influence_ratio, r.proxy_improvement, r.faithful_improvement});
  return csv_table(
      meta, {"theta", "alignment", "influence_ratio", "proxy_improvement", "faithful_improvement"},
      cells);
}

/// Wraps a payload with its metadata and serializes with a trailing newline.
inline std::string json_document(const nlohmann::json& meta, const std::string& key,
                                 const nlohmann::json& payload) {
  nlohmann::json doc;
  doc["meta"] = meta;
  doc[key] = payload;
  return doc.dump(2) + "\n";
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidParameter("cannot open " + path + " for writing");
  os << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidParameter("cannot open " + path);
  std::stringstream buffer;
  buffer << is.rdbuf();
  return buffer.str();
}

inline std::string file_digest(const std::string& path) {
  const std::string text = read_text_file(path);
  return hex64(fnv1a64(text.data(), text.size()));
}

}  // namespace sclab
