#include "med/kernel.hpp"

#include "med/errors.hpp"

namespace med {

double kernel_eval(KernelFamily family, double u) {
  const double s = 1.0 - u * u;
  if (s <= 0.0) return 0.0;
  switch (family) {
    case KernelFamily::epanechnikov:
      return 0.75 * s;
    case KernelFamily::quartic:
      return 0.9375 * s * s;
    case KernelFamily::triweight:
      return 1.09375 * s * s * s;
  }
  return 0.0;
}

KernelFamily kernel_from_name(std::string_view name) {
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  if (name == "quartic") return KernelFamily::quartic;
  if (name == "triweight") return KernelFamily::triweight;
  throw DataError("unknown kernel '" + std::string(name) +
                  "' (expected epanechnikov, quartic or triweight)");
}

std::string kernel_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::epanechnikov:
      return "epanechnikov";
    case KernelFamily::quartic:
      return "quartic";
    case KernelFamily::triweight:
      return "triweight";
  }
  return "epanechnikov";
}

}  // namespace med
