#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace admm_dkf {

using Edge = std::pair<int, int>;

namespace topology {
struct Ring {};
struct Complete {};
struct Path {};
/// Nodes placed uniformly on the unit square, linked when closer than `radius`.
/// Placement is re-drawn until the graph is connected.
struct RandomGeometric {
  double radius = 0.3;
  std::uint64_t seed = 7;
  int max_attempts = 1000;
};
/// Random `degree`-regular simple graph built by incremental stub pairing that
/// re-draws pairs forming loops or repeated edges; re-drawn until connected.
struct RandomRegular {
  int degree = 8;
  std::uint64_t seed = 3;
  int max_attempts = 1000;
};
struct Explicit {
  std::vector<Edge> edges;
};
}  // namespace topology

using TopologySpec = std::variant<topology::Ring, topology::Complete, topology::Path,
                                  topology::RandomGeometric, topology::RandomRegular,
                                  topology::Explicit>;

/// Static undirected sensor network with 0/1 edge weights.
///
/// The Laplacian is kept dense (it is the reference for every stacked-form
/// check); neighbour exchanges go through the sorted adjacency lists.
class SensorGraph {
 public:
  /// Builds from an edge list. Self loops are rejected, duplicate edges are merged.
  /// Does not require connectivity.
  static SensorGraph from_edges(int n_nodes, std::span<const Edge> edges);

  int size() const { return static_cast<int>(neighbors_.size()); }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }
  const Eigen::VectorXd& degree() const { return degree_; }
  int degree(int i) const { return static_cast<int>(neighbors_.at(i).size()); }
  int max_degree() const;
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(i); }
  std::vector<Edge> edges() const;

 private:
  SensorGraph() = default;

  Eigen::MatrixXd adjacency_;
  Eigen::MatrixXd laplacian_;
  Eigen::VectorXd degree_;
  std::vector<std::vector<int>> neighbors_;
};

struct SpectralSummary {
  std::vector<double> eigenvalues;  // ascending
  double lambda_2 = 0.0;
  double lambda_max = 0.0;
  /// Laplacian eigenvectors as columns, same order as `eigenvalues`.
  Eigen::MatrixXd eigenvectors;
};

/// Throws GraphNotConnected for a disconnected explicit graph and
/// GraphGenerationFailed when a random generator runs out of attempts.
SensorGraph build_graph(const TopologySpec& spec, int n_nodes);

/// Breadth-first reachability from node 0.
bool is_connected(const SensorGraph& g);

/// Full symmetric eigendecomposition of the Laplacian. Eigenvalues with
/// magnitude below `tol` are reported as exactly zero.
SpectralSummary spectral_summary(const SensorGraph& g, double tol = 1e-10);

/// sum_{j in N_i} (values[i] - values[j]).
Eigen::VectorXd neighbor_disagreement(std::span<const Eigen::VectorXd> values,
                                      const SensorGraph& g, int i);

/// Plain-text edge list: one "i j" pair per line, 0-indexed, '#' starts a comment.
std::vector<Edge> read_edge_list(const std::filesystem::path& path);
void write_edge_list(const std::filesystem::path& path, std::span<const Edge> edges);

}  // namespace admm_dkf
