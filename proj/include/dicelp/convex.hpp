#pragma once

#include <functional>
#include <string>

#include "dicelp/errors.hpp"

namespace dicelp {

// A convex lower-semicontinuous scalar function together with its derivative
// and Fenchel conjugate pair. Registered pairs satisfy the Fenchel-Young
// equality f(x) + f*(f'(x)) = x f'(x).
struct ConvexFn {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
  std::function<double(double)> f_conj;
  std::function<double(double)> f_conj_prime;
};

// f(x) = x^2/2, self-conjugate: f* = f, f' = f*' = identity.
ConvexFn half_square();

// f(x) = x^2/4 with f*(y) = y^2, f*'(y) = 2y.
ConvexFn quarter_square();

// Lookup by name ("half_square" | "quarter_square"); throws UnsupportedConfig.
ConvexFn convex_fn_by_name(const std::string& name);

}  // namespace dicelp
