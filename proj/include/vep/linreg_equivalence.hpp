#pragma once

#include <cstddef>
#include <cstdint>

#include "vep/gaussian_core.hpp"

namespace vep {

/// One Bayesian linear-regression observation t ~ N(w φ, 1/β) against a
/// Gaussian cavity N(w | m_cav, v_cav).
struct LinRegCase {
  double m_cav = 0.0;
  double v_cav = 1.0;
  double phi = 0.0;
  double t = 0.0;
  double beta = 1.0;

  /// Throws std::invalid_argument unless v_cav > 0 and beta > 0.
  void validate() const;
};

/// Closed-form posterior from completing the square in w.
Gaussian1D vb_route(const LinRegCase& c);

/// Posterior by moment matching from the gradients of
/// log Z = log N(t | m_cav φ, 1/β + v_cav φ²).
Gaussian1D ep_route(const LinRegCase& c);

struct EquivalenceReport {
  std::size_t n_cases = 0;
  double max_delta_mean = 0.0;
  double max_delta_var = 0.0;
  bool pass = false;  ///< both deltas below kEquivalenceTolerance
};

inline constexpr double kEquivalenceTolerance = 1e-10;

/// Compares both routes on n seeded random well-conditioned cases.
EquivalenceReport equivalence_report(std::size_t n_cases, std::uint64_t seed);

/// The same comparison on caller-supplied cases.
EquivalenceReport compare_routes(const LinRegCase* cases, std::size_t n);

}  // namespace vep
