#pragma once

#include <vector>

namespace isac {

/// Real roots of c3 x^3 + c2 x^2 + c1 x + c0, ascending and with
/// multiplicity. Closed form (Cardano or the trigonometric form, whichever is
/// stable for the sign of the discriminant) followed by Newton polishing.
/// Falls back to the quadratic or linear formula when leading terms vanish.
std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0);

}  // namespace isac
