#ifndef MED_KERNEL_HPP
#define MED_KERNEL_HPP

#include <string>
#include <string_view>

namespace med {

// Symmetric densities on (-1,1); all vanish at the support boundary, so a
// point at exactly |u| == 1 never contributes weight.
enum class KernelFamily { epanechnikov, quartic, triweight };

double kernel_eval(KernelFamily family, double u);

KernelFamily kernel_from_name(std::string_view name);  // throws DataError
std::string kernel_name(KernelFamily family);

}  // namespace med

#endif
