#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cob/barlow.hpp"
#include "cob/matrix.hpp"

namespace cob {

/// Eigenvalue spectrum of column-centered data plus cumulative-energy curve.
struct PcaReport {
  std::vector<double> eigenvalues;        // descending, >= -1e-9
  std::vector<double> cumulative_energy;  // nondecreasing, ends at 1 (unless degenerate)
  std::vector<std::pair<int, double>> k_table;
  int feature_dim = 0;
  bool degenerate = false;  // all-constant input: single zero spectrum
};

/// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations, iterated
/// until the off-diagonal Frobenius norm falls below rel_tol times the matrix
/// norm. Returned in descending order.
std::vector<double> symmetric_eigenvalues(Matrix a, double rel_tol = 1e-10);

/// Center columns, eigendecompose the covariance (or the Gram matrix when
/// n < d, which shares its nonzero spectrum), and tabulate the cumulative
/// energy of the top-k components for each requested k.
PcaReport pca_energy(const Matrix& embeddings, const std::vector<int>& ks);

/// Mean absolute off-diagonal entry of a square matrix.
double redundancy_score(const Matrix& c);

/// CSV matrix format: header "rows,cols", then rows of comma-separated
/// 17-significant-digit decimals.
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(const std::string& path);

/// Binary P5 PGM heatmap with the linear map [-1,1] -> [0,255] (values
/// clamped). Diagonal prominence of a correlation matrix is visible at a
/// glance.
void write_heatmap_pgm(const std::string& path, const Matrix& m);

void write_pca_report_csv(const std::string& path, const PcaReport& report);

}  // namespace cob
