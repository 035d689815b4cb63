#include "admm_dkf/errors.hpp"
#include "admm_dkf/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iomanip>
#include <iostream>

namespace {

using namespace admm_dkf;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config_path;
  std::string config_flag;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  bool quiet = false;
};

ScenarioConfig load(const Options& o) {
  const std::string& path = o.config_flag.empty() ? o.config_path : o.config_flag;
  ScenarioConfig c = path.empty() ? ScenarioConfig{} : load_config(path);
  if (o.seed) c.master_seed = *o.seed;
  if (o.runs) c.n_mc_runs = *o.runs;
  if (!o.output.empty()) c.output_dir = o.output;
  c.validate();
  return c;
}

void print_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  const Eigen::IOFormat fmt(12, 0, ", ", "\n", "  [", "]");
  out << m.format(fmt) << '\n';
}

int cmd_run(const Options& o) {
  const ScenarioConfig c = load(o);
  const auto start = std::chrono::steady_clock::now();
  const RunMetrics m = run_scenario(c);
  export_csv(m, c.output_dir);
  if (!o.quiet) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto& last = m.rmse_pos.back();
    double mean = 0.0, lo = last.front(), hi = last.front();
    for (double v : last) {
      mean += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    mean /= static_cast<double>(last.size());
    std::cout << std::setprecision(6) << "nodes " << m.n_nodes << ", steps " << m.horizon << ", runs "
              << m.n_runs << ", L " << m.L << " (" << secs << " s)\n"
              << "final position RMSE: mean " << mean << ", min " << lo << ", max " << hi << '\n'
              << "final consensus error: " << m.consensus_error.back().back() << '\n'
              << "max conservation residual: " << m.max_conservation_residual << '\n'
              << "posterior projections: " << m.projections << '\n'
              << "communication (run 0): " << m.comm.total().messages << " messages, "
              << m.comm.total().scalars << " scalars\n"
              << "wrote " << c.output_dir.string() << '\n';
  }
  return kExitOk;
}

int cmd_validate(const Options& o) {
  const ValidationReport r = validate_params(load(o));
  if (!o.quiet) print_validation(std::cout, r);
  return r.passed() ? kExitOk : kExitConfig;
}

int cmd_spectrum(const Options& o) {
  const ScenarioConfig c = load(o);
  const SensorGraph g = build_scenario_graph(c);
  const SpectralSummary s = spectral_summary(g);
  std::cout << std::setprecision(10) << "nodes: " << g.size() << '\n'
            << "edges: " << g.edges().size() << '\n'
            << "max degree: " << g.max_degree() << '\n'
            << "connected: " << (is_connected(g) ? "yes" : "no") << '\n'
            << "lambda_2: " << s.lambda_2 << '\n'
            << "lambda_max: " << s.lambda_max << '\n';
  if (!o.quiet) {
    std::cout << "eigenvalues:\n";
    for (double v : s.eigenvalues) std::cout << "  " << v << '\n';
  }
  return kExitOk;
}

int cmd_dare(const Options& o) {
  const StateSpaceModel model = build_model(load(o));
  const SymMatrix P = dare_solve(model.F, model.stacked_H(), model.Q, model.stacked_R());
  std::cout << "P* =\n";
  print_matrix(std::cout, P.matrix());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADMM distributed Kalman filter simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("CONFIG", o.config_path, "scenario config file");
    sub->add_option("--config", o.config_flag, "scenario config file");
    sub->add_option("--output", o.output, "output directory (overrides run.output_dir)");
    sub->add_option("--seed", o.seed, "master seed (overrides run.master_seed)");
    sub->add_option("--runs", o.runs, "Monte-Carlo runs (overrides run.n_mc_runs)");
    sub->add_flag("--quiet", o.quiet, "suppress the summary");
  };

  auto* run = app.add_subcommand("run", "run the Monte-Carlo experiment and write CSVs");
  auto* validate = app.add_subcommand("validate", "check step sizes against the stability bounds");
  auto* spectrum = app.add_subcommand("spectrum", "print Laplacian diagnostics of the graph");
  auto* dare = app.add_subcommand("dare", "print the centralized steady-state prior covariance");
  for (auto* sub : {run, validate, spectrum, dare}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(o);
    if (validate->parsed()) return cmd_validate(o);
    if (spectrum->parsed()) return cmd_spectrum(o);
    if (dare->parsed()) return cmd_dare(o);
  } catch (const ConfigRejected& e) {
    std::cerr << "config rejected: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GraphNotConnected& e) {
    std::cerr << "config rejected: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GraphGenerationFailed& e) {
    std::cerr << "config rejected: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}
