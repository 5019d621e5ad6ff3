#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nelcorr {

struct TridiagonalEigenpairs {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // unit Euclidean norm
};

// Lowest `count` eigenpairs of the symmetric tridiagonal matrix with the given
// diagonal and off-diagonal (off.size() == diag.size() - 1).
// Eigenvalues by Sturm-sequence bisection, eigenvectors by inverse iteration
// with Gram-Schmidt inside clusters of close eigenvalues.
// Throws ParameterError for count > size, NumericError when inverse iteration
// does not reach its residual target within the iteration cap.
TridiagonalEigenpairs lowest_eigenpairs(std::span<const double> diag, std::span<const double> off,
                                        std::size_t count);

// Number of eigenvalues strictly below lambda.
std::size_t sturm_count(std::span<const double> diag, std::span<const double> off, double lambda);

}  // namespace nelcorr
