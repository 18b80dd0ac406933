#pragma once

#include "rep/tensor.hpp"

namespace rep {

/// Nonnegative least squares:  argmin_{a >= 0} ||y - M a||^2 + ridge ||a||^2.
///
/// Lawson-Hanson active-set iteration with the ridge folded in by augmenting
/// the design with sqrt(ridge)*I; ties in the entering-coordinate pivot break
/// toward the smallest index. Terminates at a KKT point: gradient components
/// are zero on the support and nonnegative off it.
///
/// Throws DimensionError on an empty system and NumericError on non-finite
/// input or negative ridge.
Vector nls_solve(const Matrix& m, const Vector& y, double ridge);

/// Same problem expressed through the normal equations,
///   gram = M^T M + ridge I,   c = M^T y.
/// This is the hot path used by the tensor-completion factor updates, where
/// one gram matrix is shared by every row of a factor. `grad_tol` is the
/// absolute dual-feasibility tolerance.
Vector nls_solve_gram(const Matrix& gram, const Vector& c, double grad_tol);

}  // namespace rep
