#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xlalign/tensor.hpp"

namespace xlalign {

/// Text checkpoint:
///   XLALIGN-CKPT 1
///   # optional metadata lines
///   <name> <ndim> <dim1> ... <dimk>
///   <v1> <v2> ...
/// Values are written with 17 significant digits, so doubles round-trip exactly.
struct Checkpoint {
  struct Entry {
    std::string name;
    Tensor value;
  };

  std::vector<std::string> comments;  // without the leading "# "
  std::vector<Entry> tensors;

  void add(std::string name, Tensor value);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
};

inline constexpr const char* kCheckpointHeader = "XLALIGN-CKPT 1";

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xlalign
