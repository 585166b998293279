#include "bbcd/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bbcd {

void Params::validate() const {
  if (n1 < 1 || n2 < 1) {
    throw std::domain_error("Params: trial counts must be >= 1, got n1=" +
                            std::to_string(n1) + ", n2=" + std::to_string(n2));
  }
  if (!(p1 > 0.0 && p1 < 1.0) || !std::isfinite(p1)) {
    throw std::domain_error("Params: p1 must lie strictly in (0,1), got " +
                            std::to_string(p1));
  }
  if (!(p2 > 0.0 && p2 < 1.0) || !std::isfinite(p2)) {
    throw std::domain_error("Params: p2 must lie strictly in (0,1), got " +
                            std::to_string(p2));
  }
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw std::domain_error("Params: t must be finite and > 0, got " +
                            std::to_string(t));
  }
}

void PoissonLimitParams::validate() const {
  if (!(lambda1 > 0.0) || !std::isfinite(lambda1) || !(lambda2 > 0.0) ||
      !std::isfinite(lambda2)) {
    throw std::domain_error("PoissonLimitParams: rates must be finite and > 0");
  }
  if (!(t > 0.0 && t <= 1.0)) {
    throw std::domain_error("PoissonLimitParams: t must lie in (0,1]");
  }
}

}  // namespace bbcd
