#include "admm_dkf/graph.hpp"

#include "admm_dkf/errors.hpp"
#include "admm_dkf/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <string>

namespace admm_dkf {

SensorGraph SensorGraph::from_edges(int n_nodes, std::span<const Edge> edges) {
  if (n_nodes < 1) throw DimensionError("graph needs at least one node");
  SensorGraph g;
  g.adjacency_ = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n_nodes || j >= n_nodes)
      throw DimensionError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") out of range for " + std::to_string(n_nodes) + " nodes");
    if (i == j) throw DimensionError("self loop on node " + std::to_string(i));
    g.adjacency_(i, j) = 1.0;
    g.adjacency_(j, i) = 1.0;
  }
  g.degree_ = g.adjacency_.rowwise().sum();
  g.laplacian_ = -g.adjacency_;
  g.laplacian_.diagonal() += g.degree_;
  g.neighbors_.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i)
    for (int j = 0; j < n_nodes; ++j)
      if (g.adjacency_(i, j) != 0.0) g.neighbors_[i].push_back(j);
  return g;
}

int SensorGraph::max_degree() const {
  int best = 0;
  for (const auto& nb : neighbors_) best = std::max(best, static_cast<int>(nb.size()));
  return best;
}

std::vector<Edge> SensorGraph::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < size(); ++i)
    for (int j : neighbors_[i])
      if (i < j) out.emplace_back(i, j);
  return out;
}

bool is_connected(const SensorGraph& g) {
  const int n = g.size();
  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j : g.neighbors(i)) {
      if (!seen[j]) {
        seen[j] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == n;
}

namespace {

std::vector<Edge> ring_edges(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  if (n > 2) e.emplace_back(n - 1, 0);
  return e;
}

std::vector<Edge> path_edges(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return e;
}

std::vector<Edge> complete_edges(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return e;
}

SensorGraph random_geometric(const topology::RandomGeometric& spec, int n) {
  if (!(spec.radius > 0.0)) throw DimensionError("random_geometric radius must be positive");
  Rng rng(spec.seed);
  const double r2 = spec.radius * spec.radius;
  std::vector<double> xs(n), ys(n);
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    for (int i = 0; i < n; ++i) {
      xs[i] = uniform01(rng);
      ys[i] = uniform01(rng);
    }
    std::vector<Edge> e;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double dx = xs[i] - xs[j], dy = ys[i] - ys[j];
        if (dx * dx + dy * dy < r2) e.emplace_back(i, j);
      }
    auto g = SensorGraph::from_edges(n, e);
    if (is_connected(g)) return g;
  }
  throw GraphGenerationFailed("random_geometric: no connected placement within " +
                              std::to_string(spec.max_attempts) + " attempts (radius " +
                              std::to_string(spec.radius) + ")");
}

// Pairing model with rejection of self loops and multi-edges.
SensorGraph random_regular(const topology::RandomRegular& spec, int n) {
  const int d = spec.degree;
  if (d < 1 || d >= n || (static_cast<long>(d) * n) % 2 != 0)
    throw GraphGenerationFailed("random_regular: no simple " + std::to_string(d) +
                                "-regular graph on " + std::to_string(n) + " nodes");
  Rng rng(spec.seed);
  auto draw = [&](std::size_t k) {
    return std::min(k - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k)));
  };
  // Stubs are paired one random pair at a time, re-drawing pairs that would
  // create a loop or a multi-edge; a dead end restarts the attempt.
  std::vector<int> stubs;
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    stubs.clear();
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) stubs.push_back(i);
    std::set<Edge> edges;
    auto suitable = [&](int a, int b) { return a != b && !edges.count({std::min(a, b), std::max(a, b)}); };
    bool stuck = false;
    while (!stubs.empty() && !stuck) {
      int rejects = 0;
      for (;;) {
        const std::size_t p = draw(stubs.size());
        std::size_t q = draw(stubs.size() - 1);
        if (q >= p) ++q;
        const int a = stubs[p], b = stubs[q];
        if (suitable(a, b)) {
          edges.emplace(std::min(a, b), std::max(a, b));
          for (std::size_t idx : {std::max(p, q), std::min(p, q)}) {
            stubs[idx] = stubs.back();
            stubs.pop_back();
          }
          break;
        }
        if (++rejects > 64) {
          bool any = false;
          for (std::size_t u = 0; u < stubs.size() && !any; ++u)
            for (std::size_t v = u + 1; v < stubs.size() && !any; ++v) any = suitable(stubs[u], stubs[v]);
          if (!any) {
            stuck = true;
            break;
          }
          rejects = 0;
        }
      }
    }
    if (stuck) continue;
    std::vector<Edge> e(edges.begin(), edges.end());
    auto g = SensorGraph::from_edges(n, e);
    if (is_connected(g)) return g;
  }
  throw GraphGenerationFailed("random_regular: no connected simple draw within " +
                              std::to_string(spec.max_attempts) + " attempts");
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

SensorGraph build_graph(const TopologySpec& spec, int n_nodes) {
  if (n_nodes < 2) throw DimensionError("a sensor network needs at least 2 nodes");
  return std::visit(
      Overloaded{
          [&](const topology::Ring&) { return SensorGraph::from_edges(n_nodes, ring_edges(n_nodes)); },
          [&](const topology::Complete&) {
            return SensorGraph::from_edges(n_nodes, complete_edges(n_nodes));
          },
          [&](const topology::Path&) { return SensorGraph::from_edges(n_nodes, path_edges(n_nodes)); },
          [&](const topology::RandomGeometric& s) { return random_geometric(s, n_nodes); },
          [&](const topology::RandomRegular& s) { return random_regular(s, n_nodes); },
          [&](const topology::Explicit& s) {
            auto g = SensorGraph::from_edges(n_nodes, s.edges);
            if (!is_connected(g)) throw GraphNotConnected("explicit edge list is not connected");
            return g;
          },
      },
      spec);
}

SpectralSummary spectral_summary(const SensorGraph& g, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g.laplacian());
  if (solver.info() != Eigen::Success) throw SpectralFailure("Laplacian eigensolver did not converge");

  SpectralSummary s;
  const auto& ev = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  for (auto& v : s.eigenvalues)
    if (std::abs(v) < tol) v = 0.0;

  const Eigen::MatrixXd residual =
      g.laplacian() * s.eigenvectors - s.eigenvectors * ev.asDiagonal();
  if (residual.cwiseAbs().maxCoeff() > std::max(tol, 1e-12 * (1.0 + ev.cwiseAbs().maxCoeff())))
    throw SpectralFailure("Laplacian eigenpairs fail the residual check");

  s.lambda_max = s.eigenvalues.back();
  s.lambda_2 = s.eigenvalues.size() > 1 ? s.eigenvalues[1] : 0.0;
  return s;
}

Eigen::VectorXd neighbor_disagreement(std::span<const Eigen::VectorXd> values,
                                      const SensorGraph& g, int i) {
  if (static_cast<int>(values.size()) != g.size())
    throw DimensionError("expected one vector per node");
  const auto& own = values[i];
  Eigen::VectorXd d = Eigen::VectorXd::Zero(own.size());
  for (int j : g.neighbors(i)) {
    if (values[j].size() != own.size())
      throw DimensionError("node " + std::to_string(j) + " vector has dimension " +
                           std::to_string(values[j].size()) + ", expected " +
                           std::to_string(own.size()));
    d += own - values[j];
  }
  return d;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list " + path.string());
  std::vector<Edge> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    if ((ss >> std::ws).eof()) continue;  // blank or comment-only
    int i, j;
    std::string rest;
    if (!(ss >> i) || !(ss >> j) || (ss >> rest))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected \"i j\"");
    edges.emplace_back(i, j);
  }
  return edges;
}

void write_edge_list(const std::filesystem::path& path, std::span<const Edge> edges) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list " + path.string());
  for (auto [i, j] : edges) out << i << ' ' << j << '\n';
}

}  // namespace admm_dkf
