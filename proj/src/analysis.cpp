#include "cob/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cob/error.hpp"

namespace cob {
namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (long i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
  return std::sqrt(s);
}

Matrix centered(const Matrix& x) {
  Matrix out = x;
  for (int c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (int r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= x.rows();
    for (int r = 0; r < x.rows(); ++r) out(r, c) -= mean;
  }
  return out;
}

void append_g17(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

std::vector<double> symmetric_eigenvalues(Matrix a, double rel_tol) {
  if (a.rows() != a.cols()) {
    throw ShapeError("symmetric_eigenvalues: matrix is " + a.shape_str() + ", not square");
  }
  const int n = a.rows();
  const double scale = std::max(frobenius_norm(a), 1e-300);

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= rel_tol * scale) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  if (off_diagonal_norm(a) > rel_tol * scale * 10.0) {
    throw NumericError("symmetric_eigenvalues: Jacobi iteration did not converge");
  }

  std::vector<double> eig(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<size_t>(i)] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<double>());
  return eig;
}

PcaReport pca_energy(const Matrix& embeddings, const std::vector<int>& ks) {
  const int n = embeddings.rows();
  const int d = embeddings.cols();
  if (n < 2) throw ContractError("pca_energy: need at least 2 rows");
  if (d < 1) throw ContractError("pca_energy: need at least 1 column");

  const Matrix x = centered(embeddings);
  const double denom = static_cast<double>(n - 1);

  PcaReport report;
  report.feature_dim = d;

  double total_var = 0.0;
  for (long i = 0; i < x.size(); ++i) total_var += x.data()[i] * x.data()[i];
  total_var /= denom;

  // Numerically constant input: centering leaves only rounding residue,
  // around eps^2 relative to the data scale.
  double max_abs = 0.0;
  for (long i = 0; i < embeddings.size(); ++i) {
    max_abs = std::max(max_abs, std::fabs(embeddings.data()[i]));
  }
  if (total_var <= 1e-24 * std::max(1.0, max_abs * max_abs)) {
    report.degenerate = true;
    report.eigenvalues = {0.0};
    report.cumulative_energy = {0.0};
    for (int k : ks) report.k_table.emplace_back(k, 0.0);
    return report;
  }

  // Covariance when n >= d, Gram matrix otherwise (same nonzero spectrum,
  // min(n,d)-sized decomposition).
  Matrix sym;
  if (n >= d) {
    sym = scale(matmul(transpose(x), x), 1.0 / denom);
  } else {
    sym = scale(matmul(x, transpose(x)), 1.0 / denom);
  }
  std::vector<double> eig = symmetric_eigenvalues(std::move(sym));

  // The spectrum of a covariance is nonnegative; clip Jacobi noise.
  const double neg_tol = 1e-9 * std::max(1.0, total_var);
  for (double& e : eig) {
    if (e < -neg_tol) {
      throw NumericError("pca_energy: significantly negative eigenvalue " + std::to_string(e));
    }
    if (e < 0.0) e = 0.0;
  }

  double sum = 0.0;
  for (double e : eig) sum += e;
  if (sum <= 0.0) sum = 1.0;

  report.eigenvalues = eig;
  report.cumulative_energy.reserve(eig.size());
  double acc = 0.0;
  for (double e : eig) {
    acc += e;
    report.cumulative_energy.push_back(acc / sum);
  }

  auto energy_at = [&](int k) -> double {
    if (k <= 0) return 0.0;
    // Eigenvalues beyond the decomposition size are exactly zero.
    if (k >= static_cast<int>(report.cumulative_energy.size())) return 1.0;
    return report.cumulative_energy[static_cast<size_t>(k) - 1];
  };
  for (int k : ks) report.k_table.emplace_back(k, energy_at(k));
  return report;
}

double redundancy_score(const Matrix& c) {
  if (c.rows() != c.cols()) {
    throw ShapeError("redundancy_score: matrix is " + c.shape_str() + ", not square");
  }
  const int n = c.rows();
  if (n < 2) return 0.0;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) s += std::fabs(c(i, j));
    }
  }
  return s / (static_cast<double>(n) * (n - 1));
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("matrix csv: cannot open for write: " + path);
  os << m.rows() << "," << m.cols() << "\n";
  for (int r = 0; r < m.rows(); ++r) {
    std::string line;
    for (int c = 0; c < m.cols(); ++c) {
      if (c) line += ",";
      append_g17(line, m(r, c));
    }
    os << line << "\n";
  }
  if (!os) throw IoError("matrix csv: write failed: " + path);
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("matrix csv: cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw IoError("matrix csv: empty file: " + path);
  int rows = 0, cols = 0;
  if (std::sscanf(line.c_str(), "%d,%d", &rows, &cols) != 2) {
    throw IoError("matrix csv: bad header '" + line + "'");
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!std::getline(is, line)) throw IoError("matrix csv: truncated file: " + path);
    std::stringstream ss(line);
    std::string field;
    for (int c = 0; c < cols; ++c) {
      if (!std::getline(ss, field, ',')) throw IoError("matrix csv: short row");
      m(r, c) = std::stod(field);
    }
  }
  return m;
}

void write_heatmap_pgm(const std::string& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("pgm: cannot open for write: " + path);
  os << "P5\n" << m.cols() << " " << m.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(m.cols()));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      const double v = std::clamp(m(r, c), -1.0, 1.0);
      const long px = std::lround((v + 1.0) * 127.5);
      row[static_cast<size_t>(c)] = static_cast<unsigned char>(std::clamp(px, 0L, 255L));
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw IoError("pgm: write failed: " + path);
}

void write_pca_report_csv(const std::string& path, const PcaReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("pca report: cannot open for write: " + path);
  os << "k,cumulative_energy\n";
  for (const auto& [k, e] : report.k_table) {
    std::string line = std::to_string(k) + ",";
    append_g17(line, e);
    os << line << "\n";
  }
  if (!os) throw IoError("pca report: write failed: " + path);
}

}  // namespace cob
