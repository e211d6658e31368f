// Field dump format: `<base>.segf` holds a fixed binary header (dimension,
// shape, spacing, origin, domain description, component count, eigenvalues,
// normalization flag) followed by both node masks and the row-major 64-bit
// components; `<base>.json` mirrors the header for tooling. Round trips are
// bit exact.
#pragma once

#include <string>

#include "partlab/field_core.hpp"

namespace partlab {

void dump_field(const SegregatedField& u, const std::string& path_base);
SegregatedField load_field(const std::string& path_base);

}  // namespace partlab
