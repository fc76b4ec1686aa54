#include "sentcast/checkpoint.hpp"

#include <cstring>

#include <json.hpp>

#include "sentcast/common.hpp"
#include "sentcast/csv.hpp"

namespace sentcast {

namespace {

void append_le_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_le_f64(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& bin_path, const std::string& manifest_path,
                     const std::vector<Parameter>& params) {
  std::string blob;
  nlohmann::json arrays = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const Parameter& p : params) {
    const auto& v = p.value.value();
    blob.reserve(blob.size() + v.size() * 8);
    for (double x : v) append_le_f64(blob, x);
    arrays.push_back({{"name", p.name},
                      {"shape", p.value.shape()},
                      {"offset", offset},
                      {"numel", static_cast<std::int64_t>(v.size())}});
    offset += static_cast<std::int64_t>(v.size());
  }
  nlohmann::json manifest = {
      {"format", "sentcast-checkpoint-v1"}, {"total_numel", offset}, {"arrays", arrays}};
  write_file(bin_path, blob);
  write_file(manifest_path, manifest.dump(2) + "\n");
}

std::vector<NamedArray> load_checkpoint(const std::string& bin_path,
                                        const std::string& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path + ": " + e.what());
  }
  if (manifest.value("format", "") != "sentcast-checkpoint-v1")
    throw ParseError(manifest_path + ": unknown checkpoint format");
  std::string blob = read_file(bin_path);
  std::vector<NamedArray> out;
  for (const auto& a : manifest.at("arrays")) {
    NamedArray arr;
    arr.name = a.at("name").get<std::string>();
    arr.shape = a.at("shape").get<Shape>();
    std::int64_t offset = a.at("offset").get<std::int64_t>();
    std::int64_t numel = a.at("numel").get<std::int64_t>();
    if (numel != shape_numel(arr.shape))
      throw ParseError(manifest_path + ": array '" + arr.name + "' numel/shape mismatch");
    if (offset < 0 || (offset + numel) * 8 > static_cast<std::int64_t>(blob.size()))
      throw ParseError(bin_path + ": array '" + arr.name + "' extends past end of blob");
    arr.data.resize(static_cast<size_t>(numel));
    for (std::int64_t i = 0; i < numel; ++i)
      arr.data[static_cast<size_t>(i)] = read_le_f64(blob.data() + (offset + i) * 8);
    out.push_back(std::move(arr));
  }
  return out;
}

void assign_checkpoint(std::vector<Parameter>& params, const std::vector<NamedArray>& arrays) {
  for (Parameter& p : params) {
    const NamedArray* found = nullptr;
    for (const NamedArray& a : arrays)
      if (a.name == p.name) {
        found = &a;
        break;
      }
    if (!found) throw DataError("checkpoint missing array '" + p.name + "'");
    if (found->shape != p.value.shape())
      throw DataError("checkpoint array '" + p.name + "' has shape " + shape_str(found->shape) +
                      ", expected " + shape_str(p.value.shape()));
    p.value.mutable_value() = found->data;
  }
}

}  // namespace sentcast
