#pragma once

#include "purebox/core/types.hpp"

namespace purebox::corpus {

// Procedural class-conditional images used by the mock source adapter and the
// desk-scale experiments. Each class owns an oriented grating (orientation and
// frequency keyed to its rank) plus a mild color tint; instances vary phase,
// background, and pixel noise.
VecX render_synthetic_image(int class_rank, long instance, std::uint64_t base_seed,
                            const ImageShape& shape);

}  // namespace purebox::corpus
