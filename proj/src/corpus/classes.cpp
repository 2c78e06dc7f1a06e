#include "purebox/corpus/classes.hpp"

#include <algorithm>

#include "purebox/core/error.hpp"

namespace purebox::corpus {

const std::vector<ClassSpec>& canonical_classes() {
  static const std::vector<ClassSpec> classes = {
      {"n04467665", "Trailer truck", 1},    {"n04389033", "Tank", 2},
      {"n03977966", "Police van", 3},       {"n03763968", "Military uniform", 4},
      {"n02480855", "Gorilla", 5},          {"n01882714", "Koala", 6},
      {"n02687172", "Aircraft carrier", 7}, {"n02749479", "Assault rifle", 8},
      {"n02950826", "Cannon", 9},           {"n04347754", "Submarine", 10},
      {"n04552348", "Warplane", 11},        {"n02106662", "German shepherd", 12},
      {"n01518878", "Ostrich", 13},         {"n02123159", "Tiger cat", 14},
      {"n01318894", "Pet", 15},             {"n01537134", "Bunting", 16},
      {"n01322898", "Lion cub", 17},        {"n00464478", "Water polo", 18},
      {"n00449796", "Hydroplane racing", 19}, {"n00021265", "Food", 20},
      {"n01504179", "Fledgling", 21},       {"n01514668", "Cock", 22},
      {"n00471437", "Ball game", 23},       {"n00451186", "Cross Country Riding", 24},
      {"n01503061", "Bird", 25},
  };
  return classes;
}

std::vector<ClassSpec> select_class_subset(const std::vector<ClassSpec>& class_list, int k) {
  if (k < 1 || k > static_cast<int>(class_list.size())) {
    raise(ErrorKind::OutOfRange, "k must lie in [1, " + std::to_string(class_list.size()) + "]");
  }
  std::vector<ClassSpec> sorted = class_list;
  std::sort(sorted.begin(), sorted.end(),
            [](const ClassSpec& a, const ClassSpec& b) { return a.rank < b.rank; });
  sorted.resize(static_cast<std::size_t>(k));
  return sorted;
}

}  // namespace purebox::corpus
