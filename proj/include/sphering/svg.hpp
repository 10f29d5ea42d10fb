#pragma once

#include "sphering/types.hpp"

#include <map>
#include <string>

namespace sphering {

/// Line chart of false discovery proportion (y, clamped to [0, 1]) against
/// the number of rejected tests (x). One polyline per curve; `true_fdp` is
/// drawn solid black, the rest dashed. Curves are truncated to `maxK` points
/// when maxK > 0.
std::string fdr_curve_svg(const std::map<std::string, Vector>& curves, const std::string& title, Index maxK = 0);

}  // namespace sphering
