#pragma once

#include <string>
#include <vector>

namespace singsys {

// Exponent tuple for the coupled system
//   -Delta_p u = u^alpha1 v^beta1,  -Delta_q v = u^alpha2 v^beta2
// posed on a domain in R^N. The admissible ranges couple the four
// exponents through the Sobolev conjugates p* = Np/(N-p), q* = Nq/(N-q).
struct ExponentConfig {
    double p = 2.0;
    double q = 2.0;
    int N = 3;
    double alpha1 = -0.5;
    double beta1 = 0.5;
    double alpha2 = 0.5;
    double beta2 = -0.5;

    double p_star() const;
    double q_star() const;
};

// One strict open-interval constraint lower < value < upper.
// slack = min(value - lower, upper - value); ok iff slack > 0.
struct ExponentCheck {
    std::string name;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double slack = 0.0;
    bool ok = false;
};

struct ExponentReport {
    std::vector<ExponentCheck> checks;
    bool pass = false;
    double min_slack = 0.0;
};

// Evaluates every admissibility constraint:
//   1 < p < N,  1 < q < N,
//   -1 < alpha1 < 0,  0 < beta1 < min{p-1, (q*/p*)(p-1-alpha1)},
//   -1 < beta2 < 0,   0 < alpha2 < min{q-1, (p*/q*)(q-1-beta2)}.
// Failure is reported, never thrown. When p or q falls outside (1, N)
// the two conjugate-coupled bounds are undefined and their rows carry
// NaN bounds with ok = false.
ExponentReport check_exponents(const ExponentConfig& cfg);

}  // namespace singsys
