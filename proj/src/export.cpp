#include "admm_dkf/errors.hpp"
#include "admm_dkf/harness.hpp"

#include <cstdio>
#include <fstream>
#include <string>

namespace admm_dkf {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_node_table(const std::filesystem::path& path, const std::vector<std::vector<double>>& table,
                      int n_nodes) {
  auto out = open_csv(path);
  out << 't';
  for (int i = 0; i < n_nodes; ++i) out << ",node_" << i;
  out << '\n';
  for (std::size_t t = 0; t < table.size(); ++t) {
    out << t + 1;
    for (double v : table[t]) out << ',' << num(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void export_csv(const RunMetrics& m, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string());

  write_node_table(dir / "rmse_position.csv", m.rmse_pos, m.n_nodes);
  write_node_table(dir / "rmse_velocity.csv", m.rmse_vel, m.n_nodes);
  write_node_table(dir / "covariance_error.csv", m.cov_error, m.n_nodes);

  {
    auto out = open_csv(dir / "consensus_error.csv");
    out << "t,l,error\n";
    for (std::size_t t = 0; t < m.consensus_error.size(); ++t)
      for (std::size_t l = 0; l < m.consensus_error[t].size(); ++l)
        out << t + 1 << ',' << l << ',' << num(m.consensus_error[t][l]) << '\n';
    if (!out) throw IoError("write failed for consensus_error.csv");
  }
  {
    auto out = open_csv(dir / "communication.csv");
    out << "t,node,messages,scalars,phase\n";
    for (const auto& [key, counts] : m.comm.entries()) {
      const auto& [t, node, phase] = key;
      out << t << ',' << node << ',' << counts.messages << ',' << counts.scalars << ','
          << (phase == Phase::state ? "state" : "covariance") << '\n';
    }
    if (!out) throw IoError("write failed for communication.csv");
  }
}

}  // namespace admm_dkf
