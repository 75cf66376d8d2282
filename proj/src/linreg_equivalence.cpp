#include "vep/linreg_equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "vep/random.hpp"
#include "vep/site_calculus.hpp"

namespace vep {

void LinRegCase::validate() const {
  if (!(v_cav > 0.0) || !std::isfinite(v_cav)) throw std::invalid_argument("v_cav must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
}

Gaussian1D vb_route(const LinRegCase& c) {
  c.validate();
  const double denom = 1.0 + c.v_cav * c.phi * c.phi * c.beta;
  return Gaussian1D::belief((c.m_cav + c.v_cav * c.phi * c.t * c.beta) / denom, c.v_cav / denom);
}

Gaussian1D ep_route(const LinRegCase& c) {
  c.validate();
  // d/dm and d/dv of log N(t | m φ, 1/β + v φ²)
  const double s = 1.0 / c.beta + c.v_cav * c.phi * c.phi;
  const double r = c.t - c.m_cav * c.phi;
  const double d_m = r * c.phi / s;
  const double d_v = 0.5 * c.phi * c.phi * (r * r / (s * s) - 1.0 / s);
  const auto out = moment_match_from_logZ(Gaussian1D::belief(c.m_cav, c.v_cav), d_m, d_v);
  if (!out) throw std::runtime_error("ep_route: moment matching gave a non-positive variance");
  return *out;
}

EquivalenceReport compare_routes(const LinRegCase* cases, std::size_t n) {
  if (n == 0) throw std::invalid_argument("equivalence needs at least one case");
  EquivalenceReport rep;
  rep.n_cases = n;
  for (std::size_t i = 0; i < n; ++i) {
    const Gaussian1D a = vb_route(cases[i]);
    const Gaussian1D b = ep_route(cases[i]);
    rep.max_delta_mean = std::max(rep.max_delta_mean, std::abs(a.mean - b.mean));
    rep.max_delta_var = std::max(rep.max_delta_var, std::abs(a.variance - b.variance));
  }
  rep.pass = rep.max_delta_mean < kEquivalenceTolerance && rep.max_delta_var < kEquivalenceTolerance;
  return rep;
}

EquivalenceReport equivalence_report(std::size_t n_cases, std::uint64_t seed) {
  if (n_cases == 0) throw std::invalid_argument("equivalence needs at least one case");
  Rng rng(seed);
  std::vector<LinRegCase> cases(n_cases);
  for (auto& c : cases) {
    c.m_cav = rng.uniform(-3.0, 3.0);
    c.v_cav = rng.uniform(0.1, 5.0);
    c.phi = rng.uniform(-2.0, 2.0);
    c.t = rng.uniform(-3.0, 3.0);
    c.beta = rng.uniform(0.1, 10.0);
  }
  return compare_routes(cases.data(), cases.size());
}

}  // namespace vep
