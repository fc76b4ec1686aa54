#pragma once

#include <string>
#include <vector>

#include "sentcast/tensor.hpp"

namespace sentcast {

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

// Checkpoint = flat little-endian float64 blob + JSON manifest listing each
// array's name, shape, and element offset into the blob.
void save_checkpoint(const std::string& bin_path, const std::string& manifest_path,
                     const std::vector<Parameter>& params);
std::vector<NamedArray> load_checkpoint(const std::string& bin_path,
                                        const std::string& manifest_path);

// Copies arrays into same-named parameters; missing/mismatched names or shapes fail.
void assign_checkpoint(std::vector<Parameter>& params, const std::vector<NamedArray>& arrays);

}  // namespace sentcast
