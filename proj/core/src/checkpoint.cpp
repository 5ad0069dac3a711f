#include "xlalign/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace xlalign {

void Checkpoint::add(std::string name, Tensor value) {
  tensors.push_back({std::move(name), std::move(value)});
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& e : tensors)
    if (e.name == name) return e.value;
  throw ValidationError("checkpoint has no tensor named '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& e : tensors)
    if (e.name == name) return true;
  return false;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os << kCheckpointHeader << '\n';
  for (const auto& c : ckpt.comments) os << "# " << c << '\n';
  char buf[64];
  for (const auto& e : ckpt.tensors) {
    if (e.name.empty() || e.name.find_first_of(" \t\n") != std::string::npos) {
      throw ValidationError("checkpoint tensor name must be a non-empty word: '" + e.name + "'");
    }
    os << e.name << ' ' << e.value.rank();
    for (auto d : e.value.shape()) os << ' ' << d;
    os << '\n';
    auto data = e.value.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", data[i]);
      if (i) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCheckpointHeader) {
    throw ValidationError("not a checkpoint: expected header '" + std::string(kCheckpointHeader) +
                          "'");
  }
  Checkpoint ckpt;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = line.size() > 1 && line[1] == ' ' ? 2 : 1;
      ckpt.comments.push_back(line.substr(start));
      continue;
    }
    std::istringstream head(line);
    std::string name;
    std::size_t ndim = 0;
    if (!(head >> name >> ndim) || ndim == 0) {
      throw ValidationError("bad checkpoint record header: '" + line + "'");
    }
    std::vector<std::size_t> shape(ndim);
    std::size_t count = 1;
    for (auto& d : shape) {
      if (!(head >> d) || d == 0) throw ValidationError("bad dimension in record '" + name + "'");
      count *= d;
    }
    std::vector<double> values;
    values.reserve(count);
    std::string tok;
    while (values.size() < count && is >> tok) {
      double x = 0.0;
      // strtod handles the full %.17g output including exponents.
      char* end = nullptr;
      x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw ValidationError("bad value '" + tok + "' in record '" + name + "'");
      }
      values.push_back(x);
    }
    if (values.size() != count) {
      throw ValidationError("record '" + name + "' truncated: expected " + std::to_string(count) +
                            " values, got " + std::to_string(values.size()));
    }
    std::getline(is, line);  // rest of the value line
    ckpt.add(name, Tensor(std::move(shape), std::move(values)));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write checkpoint " + path.string());
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

}  // namespace xlalign
