#include "dicelp/convex.hpp"

namespace dicelp {

ConvexFn half_square() {
  ConvexFn fn;
  fn.name = "half_square";
  fn.f = [](double x) { return 0.5 * x * x; };
  fn.f_prime = [](double x) { return x; };
  fn.f_conj = [](double y) { return 0.5 * y * y; };
  fn.f_conj_prime = [](double y) { return y; };
  return fn;
}

ConvexFn quarter_square() {
  ConvexFn fn;
  fn.name = "quarter_square";
  fn.f = [](double x) { return 0.25 * x * x; };
  fn.f_prime = [](double x) { return 0.5 * x; };
  fn.f_conj = [](double y) { return y * y; };
  fn.f_conj_prime = [](double y) { return 2.0 * y; };
  return fn;
}

ConvexFn convex_fn_by_name(const std::string& name) {
  if (name == "half_square") return half_square();
  if (name == "quarter_square") return quarter_square();
  throw UnsupportedConfig("unknown convex function: " + name);
}

}  // namespace dicelp
