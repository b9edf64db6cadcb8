#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fitnet {

struct StepInfo {
  int iterations = 0;          // linear solves spent on the step
  int electric_iterations = 0; // iteration after which the electrical block met the tolerance
  double residual = 0.0;       // final scaled residual
};

/// Time history of nodal potentials, temperature rises and Joule powers,
/// indexed by canonical grid node. Entry k of `steps` describes the step that
/// produced time point k+1.
struct TransientTrace {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> phi;
  std::vector<Eigen::VectorXd> T;
  std::vector<Eigen::VectorXd> q_el;
  std::vector<StepInfo> steps;

  std::size_t size() const noexcept { return times.size(); }
};

struct Probe {
  std::string name;
  std::size_t node;
};

/// One row per node per time point: t,node_id,phi,T,q_el. T is written as an
/// absolute temperature (rise + T0).
void write_trace_csv(std::ostream& out, const TransientTrace& trace, double T0);

/// Compact variant: t,phi:<probe>,T:<probe>,... for the given probes.
void write_probe_csv(std::ostream& out, const TransientTrace& trace,
                     const std::vector<Probe>& probes, double T0);

/// max_k ||a_k - b_k||_2 / max_k ||ref_k||_2 with `reference` as ref.
double relative_error_norm(const std::vector<Eigen::VectorXd>& reference,
                           const std::vector<Eigen::VectorXd>& other);

}  // namespace fitnet
