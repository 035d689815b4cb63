#include "admm_dkf/errors.hpp"
#include "admm_dkf/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace admm_dkf {

namespace pt = boost::property_tree;

void ScenarioConfig::validate() const {
  auto reject = [](const std::string& what) { throw ConfigRejected(what); };
  if (!(dt > 0.0)) reject("model.dt must be positive");
  if (!(q_intensity > 0.0)) reject("model.q_intensity must be positive");
  if (!(r_var > 0.0)) reject("model.r_var must be positive");
  if (!(init_spread >= 0.0)) reject("model.init_spread must be non-negative");
  if (n_nodes < 2) reject("graph.n_nodes must be at least 2");
  if (alpha_lambda && !(*alpha_lambda > 0.0)) reject("dkf.alpha_lambda must be positive");
  if (mu && !(*mu > 0.0)) reject("dkf.mu must be positive");
  if (alpha_nu && !(*alpha_nu > 0.0)) reject("dkf.alpha_nu must be positive");
  if (L < 1) reject("dkf.L must be at least 1");
  if (horizon_steps < 1) reject("run.horizon_steps must be at least 1");
  if (n_mc_runs < 1) reject("run.n_mc_runs must be at least 1");
  if (threads < 1) reject("run.threads must be at least 1");
}

namespace {

std::string strip_comment(const std::string& line) {
  const auto cut = line.find_first_of("#;");
  return cut == std::string::npos ? line : line.substr(0, cut);
}

bool parse_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigRejected(key + ": expected a boolean, got '" + v + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream ss(v);
  T out{};
  std::string rest;
  if (!(ss >> out) || (ss >> rest)) throw ConfigRejected(key + ": cannot parse '" + v + "'");
  return out;
}

std::optional<double> parse_auto(const std::string& key, const std::string& v) {
  if (v == "auto") return std::nullopt;
  return parse_number<double>(key, v);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model", {"dt", "q_intensity", "r_var", "sensor_assignment", "assignment_seed", "init_spread"}},
      {"graph", {"topology", "n_nodes", "radius", "degree", "seed", "max_attempts", "edge_file"}},
      {"dkf", {"alpha_lambda", "mu", "alpha_nu", "L"}},
      {"run", {"horizon_steps", "n_mc_runs", "master_seed", "output_dir", "threads"}},
      {"flags", {"noise_free", "exact_consensus_init", "sub_iterated_covariance", "override_stability_guard"}},
  };
  return keys;
}

}  // namespace

ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  std::stringstream cleaned;
  std::string line;
  while (std::getline(in, line)) cleaned << strip_comment(line) << '\n';

  pt::ptree tree;
  try {
    pt::read_ini(cleaned, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigRejected(std::string("malformed config: ") + e.message());
  }

  for (const auto& [section, body] : tree) {
    auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigRejected("unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigRejected("unknown key " + section + "." + key);
  }

  ScenarioConfig c;
  auto get = [&](const std::string& path) { return tree.get_optional<std::string>(path); };

  if (auto v = get("model.dt")) c.dt = parse_number<double>("model.dt", *v);
  if (auto v = get("model.q_intensity")) c.q_intensity = parse_number<double>("model.q_intensity", *v);
  if (auto v = get("model.r_var")) c.r_var = parse_number<double>("model.r_var", *v);
  if (auto v = get("model.init_spread")) c.init_spread = parse_number<double>("model.init_spread", *v);
  if (auto v = get("model.assignment_seed"))
    c.assignment_seed = parse_number<std::uint64_t>("model.assignment_seed", *v);
  if (auto v = get("model.sensor_assignment")) {
    if (*v == "static_split") c.sensor_assignment = SensorAssignment::static_split;
    else if (*v == "per_step_random") c.sensor_assignment = SensorAssignment::per_step_random;
    else throw ConfigRejected("model.sensor_assignment: unknown value '" + *v + "'");
  }

  if (auto v = get("graph.n_nodes")) c.n_nodes = parse_number<int>("graph.n_nodes", *v);
  const std::string topo = get("graph.topology").value_or("random_regular");
  const auto seed = get("graph.seed");
  const auto attempts = get("graph.max_attempts");
  if (topo == "ring") {
    c.topology = topology::Ring{};
  } else if (topo == "complete") {
    c.topology = topology::Complete{};
  } else if (topo == "path") {
    c.topology = topology::Path{};
  } else if (topo == "random_geometric") {
    topology::RandomGeometric s;
    if (auto v = get("graph.radius")) s.radius = parse_number<double>("graph.radius", *v);
    if (seed) s.seed = parse_number<std::uint64_t>("graph.seed", *seed);
    if (attempts) s.max_attempts = parse_number<int>("graph.max_attempts", *attempts);
    c.topology = s;
  } else if (topo == "random_regular") {
    topology::RandomRegular s;
    if (auto v = get("graph.degree")) s.degree = parse_number<int>("graph.degree", *v);
    if (seed) s.seed = parse_number<std::uint64_t>("graph.seed", *seed);
    if (attempts) s.max_attempts = parse_number<int>("graph.max_attempts", *attempts);
    c.topology = s;
  } else if (topo == "explicit") {
    auto file = get("graph.edge_file");
    if (!file || file->empty()) throw ConfigRejected("graph.topology = explicit needs graph.edge_file");
    std::filesystem::path p(*file);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    try {
      c.topology = topology::Explicit{read_edge_list(p)};
    } catch (const IoError& e) {
      throw ConfigRejected(e.what());
    }
  } else {
    throw ConfigRejected("graph.topology: unknown value '" + topo + "'");
  }

  if (auto v = get("dkf.alpha_lambda")) c.alpha_lambda = parse_auto("dkf.alpha_lambda", *v);
  if (auto v = get("dkf.mu")) c.mu = parse_auto("dkf.mu", *v);
  if (auto v = get("dkf.alpha_nu")) c.alpha_nu = parse_auto("dkf.alpha_nu", *v);
  if (auto v = get("dkf.L")) c.L = parse_number<int>("dkf.L", *v);

  if (auto v = get("run.horizon_steps")) c.horizon_steps = parse_number<int>("run.horizon_steps", *v);
  if (auto v = get("run.n_mc_runs")) c.n_mc_runs = parse_number<int>("run.n_mc_runs", *v);
  if (auto v = get("run.master_seed")) c.master_seed = parse_number<std::uint64_t>("run.master_seed", *v);
  if (auto v = get("run.output_dir")) c.output_dir = *v;
  if (auto v = get("run.threads")) c.threads = parse_number<int>("run.threads", *v);

  if (auto v = get("flags.noise_free")) c.noise_free = parse_bool("flags.noise_free", *v);
  if (auto v = get("flags.exact_consensus_init"))
    c.exact_consensus_init = parse_bool("flags.exact_consensus_init", *v);
  if (auto v = get("flags.sub_iterated_covariance"))
    c.sub_iterated_covariance = parse_bool("flags.sub_iterated_covariance", *v);
  if (auto v = get("flags.override_stability_guard"))
    c.override_stability_guard = parse_bool("flags.override_stability_guard", *v);

  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigRejected("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

namespace {

std::string fmt_auto(const std::optional<double>& v) {
  if (!v) return "auto";
  std::ostringstream ss;
  ss.precision(17);
  ss << *v;
  return ss.str();
}

}  // namespace

void write_config(std::ostream& out, const ScenarioConfig& c) {
  out.precision(17);
  out << "[model]\n"
      << "dt = " << c.dt << '\n'
      << "q_intensity = " << c.q_intensity << '\n'
      << "r_var = " << c.r_var << '\n'
      << "sensor_assignment = "
      << (c.sensor_assignment == SensorAssignment::static_split ? "static_split" : "per_step_random") << '\n'
      << "assignment_seed = " << c.assignment_seed << '\n'
      << "init_spread = " << c.init_spread << "\n\n";

  out << "[graph]\n"
      << "n_nodes = " << c.n_nodes << '\n';
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, topology::Ring>) out << "topology = ring\n";
        else if constexpr (std::is_same_v<T, topology::Complete>) out << "topology = complete\n";
        else if constexpr (std::is_same_v<T, topology::Path>) out << "topology = path\n";
        else if constexpr (std::is_same_v<T, topology::RandomGeometric>)
          out << "topology = random_geometric\nradius = " << s.radius << "\nseed = " << s.seed
              << "\nmax_attempts = " << s.max_attempts << '\n';
        else if constexpr (std::is_same_v<T, topology::RandomRegular>)
          out << "topology = random_regular\ndegree = " << s.degree << "\nseed = " << s.seed
              << "\nmax_attempts = " << s.max_attempts << '\n';
        else
          out << "# explicit edge lists are not embedded; write them with write_edge_list\n"
                 "topology = explicit\n";
      },
      c.topology);

  out << "\n[dkf]\n"
      << "alpha_lambda = " << fmt_auto(c.alpha_lambda) << '\n'
      << "mu = " << fmt_auto(c.mu) << '\n'
      << "alpha_nu = " << fmt_auto(c.alpha_nu) << '\n'
      << "L = " << c.L << "\n\n";

  out << "[run]\n"
      << "horizon_steps = " << c.horizon_steps << '\n'
      << "n_mc_runs = " << c.n_mc_runs << '\n'
      << "master_seed = " << c.master_seed << '\n'
      << "output_dir = " << c.output_dir.string() << '\n'
      << "threads = " << c.threads << "\n\n";

  out << std::boolalpha << "[flags]\n"
      << "noise_free = " << c.noise_free << '\n'
      << "exact_consensus_init = " << c.exact_consensus_init << '\n'
      << "sub_iterated_covariance = " << c.sub_iterated_covariance << '\n'
      << "override_stability_guard = " << c.override_stability_guard << '\n';
}

}  // namespace admm_dkf
