// Statistical test helpers.
#pragma once

#include <boost/math/special_functions/gamma.hpp>

namespace gglab {

// Upper-tail probability of a chi-square variate.
inline double chi_square_tail(double stat, double df) {
  if (df <= 0.0) return 1.0;
  if (stat <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * stat);
}

}  // namespace gglab
