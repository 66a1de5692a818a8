#pragma once

#include <functional>
#include <vector>

#include "cob/matrix.hpp"

namespace cob {

/// Central finite-difference gradient estimate of a scalar function of the
/// given parameter matrices: (f(theta+h*e) - f(theta-h*e)) / 2h per coordinate.
///
/// `f` must re-evaluate the function from the parameters' current contents on
/// every call; parameters are perturbed in place and restored afterwards.
/// This is the independent gradient oracle: it never touches backward().
std::vector<Matrix> finite_difference_gradient(const std::function<double()>& f,
                                               const std::vector<Matrix*>& params, double h);

/// Max over coordinates of |a-b| / max(|a|, |b|, floor).
///
/// The floor turns the comparison absolute for near-zero coordinates: at
/// h=1e-5 a central difference carries ~1e-10 of roundoff, so coordinates
/// below the floor are held to |a-b| <= floor * tolerance instead of a
/// relative bound the estimator cannot resolve.
double max_relative_error(const std::vector<Matrix>& a, const std::vector<Matrix>& b,
                          double floor = 1e-4);

}  // namespace cob
