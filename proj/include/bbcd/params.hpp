#pragma once

namespace bbcd {

/// Five-parameter specification of the binomial-conditionals family:
/// X|Y=y ~ Binomial(n1, t^y p1 / (1-p1+t^y p1)) and symmetrically for Y|X.
/// t < 1 induces negative correlation, t = 1 independence, t > 1 positive.
struct Params {
  int n1 = 1;
  int n2 = 1;
  double p1 = 0.5;
  double p2 = 0.5;
  double t = 1.0;

  // Throws std::domain_error unless n1,n2 >= 1, p1,p2 in (0,1), t in (0,inf).
  void validate() const;

  double q1() const { return p1 / (1.0 - p1); }  // odds of p1
  double q2() const { return p2 / (1.0 - p2); }

  Params swapped() const { return {n2, n1, p2, p1, t}; }
};

/// Parameters of the Poisson-conditionals law reached as n -> inf with
/// n1*p1 and n2*p2 held fixed. Requires 0 < t <= 1 (t = 1 factorizes into
/// independent Poissons).
struct PoissonLimitParams {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double t = 1.0;

  void validate() const;
};

}  // namespace bbcd
