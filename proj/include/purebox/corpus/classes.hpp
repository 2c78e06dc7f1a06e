#pragma once

#include <string>
#include <vector>

namespace purebox::corpus {

struct ClassSpec {
  std::string class_id;      // WordNet-style id, unique within a list
  std::string display_name;
  int rank = 0;              // 1-based position in the canonical ordering
};

// The canonical 25-class ordered list used throughout; subsets are always
// rank prefixes of this.
const std::vector<ClassSpec>& canonical_classes();

// First k classes by rank. Training labels for the subset are the positions
// 0..k-1 in the returned vector.
std::vector<ClassSpec> select_class_subset(const std::vector<ClassSpec>& class_list, int k);

}  // namespace purebox::corpus
