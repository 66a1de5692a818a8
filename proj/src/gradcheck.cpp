#include "cob/gradcheck.hpp"

#include <cmath>

#include "cob/error.hpp"

namespace cob {

std::vector<Matrix> finite_difference_gradient(const std::function<double()>& f,
                                               const std::vector<Matrix*>& params, double h) {
  if (!(h > 0.0)) throw ContractError("finite_difference_gradient: h must be > 0");
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (Matrix* p : params) {
    Matrix g(p->rows(), p->cols());
    for (long i = 0; i < p->size(); ++i) {
      const double saved = p->data()[i];
      p->data()[i] = saved + h;
      const double f_plus = f();
      p->data()[i] = saved - h;
      const double f_minus = f();
      p->data()[i] = saved;
      g.data()[i] = (f_plus - f_minus) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double max_relative_error(const std::vector<Matrix>& a, const std::vector<Matrix>& b,
                          double floor) {
  if (a.size() != b.size()) throw ShapeError("max_relative_error: list sizes differ");
  double worst = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    require_same_shape(a[k], b[k], "max_relative_error");
    for (long i = 0; i < a[k].size(); ++i) {
      const double x = a[k].data()[i];
      const double y = b[k].data()[i];
      const double denom = std::max({std::fabs(x), std::fabs(y), floor});
      worst = std::max(worst, std::fabs(x - y) / denom);
    }
  }
  return worst;
}

}  // namespace cob
