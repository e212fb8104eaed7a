#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedsac/matrix.hpp"

namespace fedsac {

// One client's representative feature subspace: k orthonormal directions
// in the d-dimensional feature space, stored as the columns of basis.
struct Subspace {
  std::size_t ambient_dim = 0;
  std::size_t k = 0;
  Matrix basis;  // ambient_dim x k, column-orthonormal
};

struct SvdResult {
  Matrix u;                            // m x r, column-orthonormal
  std::vector<double> singular_values; // length r, non-negative, descending
  Matrix v;                            // d x r, column-orthonormal
};

// Thin SVD of an m x d matrix, r = min(m, d). One-sided Jacobi; accurate
// enough for the small dense matrices this project works on.
SvdResult thin_svd(const Matrix& x);

// Top-k right-singular directions of x, sign-fixed so each column's
// largest-magnitude entry is non-negative (ties broken by lowest index).
Subspace representative_subspace(const Matrix& x, std::size_t k);

// Principal angles between two k-dimensional subspaces of the same
// ambient space, ascending in [0, pi/2].
std::vector<double> principal_angles(const Subspace& a, const Subspace& b);

// Cosine of the angle between two non-zero vectors, clamped to [-1, 1].
double cosine(std::span<const double> a, std::span<const double> b);

// Euclidean projection onto the probability simplex {w >= 0, sum w = 1},
// by sort-and-threshold. Exact minimizer of ||w - c||^2.
std::vector<double> project_simplex(std::span<const double> c);

}  // namespace fedsac
