#include "cob/optim.hpp"

#include <cmath>

#include "cob/error.hpp"

namespace cob {

void AdamaxConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("optimizer.learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer.beta1 must be in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer.beta2 must be in [0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("optimizer.epsilon must be > 0");
}

Adamax::Adamax(AdamaxConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Adamax::step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("Adamax::step: params/grads count mismatch");
  }
  if (m_.empty()) {
    m_.reserve(params.size());
    u_.reserve(params.size());
    for (const Matrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      u_.emplace_back(p->rows(), p->cols());
    }
  }
  if (m_.size() != params.size()) {
    throw ShapeError("Adamax::step: parameter count changed between calls");
  }

  t_ += 1;
  const double bias = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double lr_t = cfg_.learning_rate / bias;

  for (size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = *grads[k];
    require_same_shape(p, g, "Adamax::step");
    require_same_shape(p, m_[k], "Adamax::step (slot)");
    Matrix& m = m_[k];
    Matrix& u = u_[k];
    for (long i = 0; i < p.size(); ++i) {
      const double gi = g.data()[i];
      m.data()[i] = cfg_.beta1 * m.data()[i] + (1.0 - cfg_.beta1) * gi;
      u.data()[i] = std::max(cfg_.beta2 * u.data()[i], std::fabs(gi));
      p.data()[i] -= lr_t * m.data()[i] / (u.data()[i] + cfg_.epsilon);
    }
    if (!p.all_finite()) throw NumericError("Adamax::step: parameters became non-finite");
  }
}

}  // namespace cob
