#pragma once

#include <stdexcept>
#include <string>

namespace admm_dkf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class GraphNotConnected : public Error {
 public:
  using Error::Error;
};

class GraphGenerationFailed : public Error {
 public:
  using Error::Error;
};

class SpectralFailure : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class RiccatiDivergence : public Error {
 public:
  using Error::Error;
};

class ObservabilityError : public Error {
 public:
  using Error::Error;
};

/// Raised when a dual variable is handed to the simulated wire.
class WireSchemaViolation : public Error {
 public:
  using Error::Error;
};

class ConfigRejected : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A numerical error raised while updating a specific node.
class NodeFailure : public Error {
 public:
  NodeFailure(int node, const std::string& what) : Error(what), node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

/// A fatal numerical failure inside a Monte-Carlo run, tagged with where it happened.
class NumericalFailure : public Error {
 public:
  NumericalFailure(int run, int step, int node, const std::string& what)
      : Error("run " + std::to_string(run) + ", t=" + std::to_string(step) +
              ", node " + std::to_string(node) + ": " + what),
        run_(run),
        step_(step),
        node_(node) {}

  int run() const { return run_; }
  int step() const { return step_; }
  int node() const { return node_; }

 private:
  int run_;
  int step_;
  int node_;
};

}  // namespace admm_dkf
