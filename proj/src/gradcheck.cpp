#include "eden/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace eden::num {

double grad_check(const std::function<double()>& f, const std::vector<Matrix*>& params,
                  const std::vector<Matrix>& analytic, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
  if (params.size() != analytic.size())
    throw std::invalid_argument("grad_check: analytic gradient count does not match params");

  double worst = 0.0;
  for (size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& a = analytic[k];
    if (!p.same_shape(a)) shape_error("grad_check", p, a);
    for (size_t i = 0; i < p.v.size(); ++i) {
      const double saved = p.v[i];
      p.v[i] = saved + eps;
      const double up = f();
      p.v[i] = saved - eps;
      const double down = f();
      p.v[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::runtime_error("grad_check: non-finite f during finite differencing");
      const double fd = (up - down) / (2.0 * eps);
      const double err = std::fabs(a.v[i] - fd) / (std::fabs(a.v[i]) + 1e-8);
      if (err > worst) worst = err;
    }
  }
  return worst;
}

}  // namespace eden::num
