#pragma once

#include <cstdint>
#include <vector>

#include "rep/tensor.hpp"

namespace rep {

struct CompletionConfig {
  int rank = 3;
  double lambda = 1e-3;   // ridge weight on all three factors
  int max_iters = 500;
  double rel_tol = 1e-6;  // relative objective-change stopping threshold
  std::uint64_t seed = 0; // factor initialization stream
};

struct CompletionResult {
  CpModel model;
  Tensor3 completed;                   // observed entries copied, rest reconstructed
  std::vector<double> objective_trace; // regularized masked objective, one entry
                                       // for the init plus one per outer iteration
  bool converged = false;
  int iterations = 0;
};

/// Regularized nonnegative low-rank completion:
///   minimize  sum_observed (x - g)^2 + lambda (|A|_F^2 + |B|_F^2 + |C|_F^2)
///   over nonnegative factors, g = reconstruct(A, B, C).
///
/// Block-coordinate scheme: fill the unobserved positions from the current
/// model to get a dense surrogate, then refit each factor row by ridge NLS
/// against the matching unfolding. Every subproblem is solved exactly, so
/// the objective trace is non-increasing. Deterministic given (x, cfg).
///
/// Throws UnidentifiableError when a patient/gene/time slab has no observed
/// entries, and DimensionError when the rank exceeds what the unfoldings
/// can support.
CompletionResult complete_tensor(const MaskedTensor& x, const CompletionConfig& cfg);

/// Observed positions copied from x, unobserved ones from reconstruct(model).
Tensor3 impute(const MaskedTensor& x, const CpModel& model);

}  // namespace rep
