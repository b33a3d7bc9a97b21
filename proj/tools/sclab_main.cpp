// Command-line front end: loads MDP documents, runs the exact analyses and
// experiments, and writes JSON/CSV artifacts. Exit codes: 0 success, 1 a
// verification suite failed, 2 bad input.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sclab/identities.hpp"
#include "sclab/mdp_io.hpp"
#include "sclab/proxy.hpp"
#include "sclab/random_mdp.hpp"
#include "sclab/report_io.hpp"
#include "sclab/sampling.hpp"
#include "sclab/trust_region.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailed = 1;
constexpr int kExitInputError = 2;

void emit(const std::string& output, const std::string& content) {
  if (output.empty() || output == "-")
    std::cout << content;
  else
    sclab::write_text_file(output, content);
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const std::string tok = text.substr(pos, next - pos);
    if (!tok.empty()) {
      try {
        grid.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw sclab::InvalidParameter("cannot parse grid entry '" + tok + "'");
      }
    }
    pos = next + 1;
  }
  return grid;
}

struct LoadedSpec {
  sclab::Mdp mdp;
  sclab::Policy behavior;
  std::string digest;
};

LoadedSpec load_spec(const std::string& input) {
  if (input.empty()) throw sclab::InvalidParameter("--input is required");
  sclab::MdpSpec spec = sclab::load_mdp(input);
  sclab::Policy behavior =
      spec.behavior ? *spec.behavior : sclab::uniform_policy(spec.mdp);
  sclab::require_valid(spec.mdp, behavior);
  return LoadedSpec{std::move(spec.mdp), std::move(behavior), sclab::file_digest(input)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sclab: exact success-conditioning analyses on tabular episodic MDPs"};
  app.require_subcommand(1);

  std::string input, output = "-";
  std::uint64_t seed = 1;
  std::int64_t n = 10000;
  double tol = 1e-9;
  double epsilon = 0.1;
  std::int32_t k_common = 10;
  double smoothing = 1e-3;
  int max_steps = -1;
  bool inject_fault = false;
  std::string deltas_text, thetas_text;

  auto* analyze = app.add_subcommand("analyze", "exact value/occupancy/policy tables");
  analyze->add_option("--input", input)->required();
  analyze->add_option("--output", output);

  auto* identities = app.add_subcommand("identities", "run the four identity suites");
  identities->add_option("--input", input)->required();
  identities->add_option("--output", output);
  identities->add_option("--tol", tol, "identity tolerance")->default_val(sclab::kIdentityTol);
  identities->add_flag("--inject-fault", inject_fault,
                       "corrupt the conditioned policy first (self-test of the failure path)");

  auto* trust = app.add_subcommand("trust-region", "optimality verdict and constraint geometry");
  trust->add_option("--input", input)->required();
  trust->add_option("--output", output);
  trust->add_option("--n", n, "oracle sample count");
  trust->add_option("--seed", seed);
  trust->add_option("--tol", tol);

  auto* tolerance = app.add_subcommand("tolerance-sweep", "rare-action tolerance vs delta");
  tolerance->add_option("--output", output);
  tolerance->add_option("--deltas", deltas_text, "comma list, default 1e-2..1e-8");
  tolerance->add_option("--epsilon", epsilon);
  tolerance->add_option("--k", k_common, "number of common actions");

  auto* sample = app.add_subcommand("sample", "Monte Carlo episodes to a trajectory file");
  sample->add_option("--input", input)->required();
  sample->add_option("--output", output);
  sample->add_option("--n", n)->default_val(1000);
  sample->add_option("--seed", seed);
  sample->add_option("--max-steps", max_steps);

  auto* bound = app.add_subcommand("bound-check", "offline loss bound on a fitted policy");
  bound->add_option("--input", input)->required();
  bound->add_option("--output", output);
  bound->add_option("--n", n);
  bound->add_option("--seed", seed);
  bound->add_option("--smoothing", smoothing);

  auto* threshold = app.add_subcommand("threshold-sweep", "Beta-bandit proxy threshold sweep");
  threshold->add_option("--output", output);
  threshold->add_option("--thetas", thetas_text, "comma list, default 0..0.999");
  threshold->add_option("--seed", seed)->default_val(20240101);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }

  try {
    if (analyze->parsed()) {
      LoadedSpec spec = load_spec(input);
      const auto meta =
          sclab::make_meta("analyze", {{"input", input}}, spec.digest);
      emit(output, sclab::json_document(meta, "analysis",
                                        sclab::analyze_report(spec.mdp, spec.behavior)));
      return kExitOk;
    }

    if (identities->parsed()) {
      LoadedSpec spec = load_spec(input);
      sclab::Policy corrupted;
      const sclab::Policy* override_ptr = nullptr;
      if (inject_fault) {
        const auto values = sclab::value_bundle(spec.mdp, spec.behavior);
        corrupted = sclab::success_conditioned_policy(spec.mdp, spec.behavior, values);
        for (std::int32_t s : spec.mdp.non_terminal_states()) {
          auto& row = corrupted.rows[static_cast<std::size_t>(s)];
          if (row.size() >= 2) {
            const double shift = 1e-3;
            row[0] += shift;
            row[1] -= shift;
            break;
          }
        }
        override_ptr = &corrupted;
      }
      auto payload = sclab::identities_report(spec.mdp, spec.behavior, override_ptr, tol);
      const auto meta = sclab::make_meta(
          "identities", {{"input", input}, {"tol", tol}, {"inject_fault", inject_fault}},
          spec.digest);
      emit(output, sclab::json_document(meta, "identities", payload));
      return payload["all_pass"].get<bool>() ? kExitOk : kExitVerificationFailed;
    }

    if (trust->parsed()) {
      LoadedSpec spec = load_spec(input);
      auto payload = sclab::trust_region_report(spec.mdp, spec.behavior,
                                                static_cast<std::int32_t>(n), seed, tol);
      const auto meta = sclab::make_meta(
          "trust-region", {{"input", input}, {"n", n}, {"seed", seed}, {"tol", tol}},
          spec.digest);
      emit(output, sclab::json_document(meta, "trust_region", payload));
      const bool ok =
          payload["gap"].get<double>() <= tol && payload["binding"].get<bool>();
      return ok ? kExitOk : kExitVerificationFailed;
    }

    if (tolerance->parsed()) {
      std::vector<double> deltas = parse_grid(deltas_text);
      if (deltas.empty())
        for (int e = 2; e <= 8; ++e) deltas.push_back(std::pow(10.0, -e));
      const auto meta = sclab::make_meta(
          "tolerance-sweep",
          {{"deltas", deltas}, {"epsilon", epsilon}, {"k", k_common}}, "-");
      emit(output, sclab::tolerance_sweep_csv(meta, deltas, epsilon, k_common));
      return kExitOk;
    }

    if (sample->parsed()) {
      LoadedSpec spec = load_spec(input);
      const auto trajs =
          sclab::sample_trajectories(spec.mdp, spec.behavior, n, seed, max_steps);
      std::ostringstream os;
      sclab::save_trajectories(os, trajs);
      emit(output, os.str());
      return kExitOk;
    }

    if (bound->parsed()) {
      LoadedSpec spec = load_spec(input);
      const auto trajs = sclab::sample_trajectories(spec.mdp, spec.behavior, n, seed);
      const auto successes = sclab::filter_successes(trajs);
      if (successes.episodes.empty())
        throw sclab::EmptyInput("no successful episodes sampled; raise --n");
      const auto fitted =
          sclab::empirical_policy(spec.mdp, spec.behavior, successes, smoothing);
      const auto report = sclab::offline_bound_check(spec.mdp, spec.behavior, fitted.policy);
      auto payload = sclab::loss_report_json(report);
      payload["n_sampled"] = trajs.episodes.size();
      payload["n_successes"] = successes.episodes.size();
      payload["fallback_states"] = fitted.fallback_states;
      const auto meta = sclab::make_meta(
          "bound-check",
          {{"input", input}, {"n", n}, {"seed", seed}, {"smoothing", smoothing}}, spec.digest);
      emit(output, sclab::json_document(meta, "bound_check", payload));
      return report.bound_holds ? kExitOk : kExitVerificationFailed;
    }

    if (threshold->parsed()) {
      std::vector<double> thetas = parse_grid(thetas_text);
      if (thetas.empty()) thetas = sclab::default_theta_grid();
      sclab::BetaBanditConfig config;
      config.seed = seed;
      const auto rows = sclab::threshold_sweep(config, thetas);
      const auto meta = sclab::make_meta(
          "threshold-sweep",
          {{"seed", seed}, {"n_arms", config.n_moderate + 1}, {"thetas", thetas}}, "-");
      emit(output, sclab::threshold_sweep_csv(meta, rows));
      return kExitOk;
    }
  } catch (const sclab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
