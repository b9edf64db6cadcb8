#include "fitnet/trace.hpp"

#include <algorithm>
#include <limits>
#include <cstdio>
#include <ostream>

#include "fitnet/error.hpp"

namespace fitnet {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

}  // namespace

void write_trace_csv(std::ostream& out, const TransientTrace& trace, double T0) {
  out << "t,node_id,phi,T,q_el\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto& phi = trace.phi[k];
    const auto& T = trace.T[k];
    const auto& q = trace.q_el[k];
    const std::string t = num(trace.times[k]);
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
      out << t << ',' << i << ',' << num(phi[i]) << ',' << num(T[i] + T0) << ',' << num(q[i])
          << '\n';
    }
  }
}

void write_probe_csv(std::ostream& out, const TransientTrace& trace,
                     const std::vector<Probe>& probes, double T0) {
  out << 't';
  for (const auto& p : probes) out << ",phi:" << p.name << ",T:" << p.name;
  out << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << num(trace.times[k]);
    for (const auto& p : probes) {
      const auto i = static_cast<Eigen::Index>(p.node);
      out << ',' << num(trace.phi[k][i]) << ',' << num(trace.T[k][i] + T0);
    }
    out << '\n';
  }
}

double relative_error_norm(const std::vector<Eigen::VectorXd>& reference,
                           const std::vector<Eigen::VectorXd>& other) {
  if (reference.size() != other.size()) {
    throw Error(ErrorCode::shape_error, "traces have different numbers of time points");
  }
  double num_max = 0.0;
  double den_max = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    if (reference[k].size() != other[k].size()) {
      throw Error(ErrorCode::shape_error, "trace vectors have different sizes");
    }
    num_max = std::max(num_max, (other[k] - reference[k]).norm());
    den_max = std::max(den_max, reference[k].norm());
  }
  if (den_max == 0.0) return num_max == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num_max / den_max;
}

}  // namespace fitnet
