#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ngcg {

// Dataset / checkpoint container: a directory holding manifest.json plus one
// raw little-endian blob file per array.  The manifest records dtype, shape
// and an FNV-1a checksum for every blob, so loads are verified bit-exactly.
std::uint64_t fnv1a64(const void* data, std::size_t n_bytes);

class ContainerWriter {
 public:
  explicit ContainerWriter(std::filesystem::path dir, std::string kind);

  void add_f32(const std::string& name, const std::vector<float>& data,
               const std::vector<std::size_t>& shape);
  void add_f64(const std::string& name, const std::vector<double>& data,
               const std::vector<std::size_t>& shape);
  nlohmann::json& meta() { return meta_; }

  // Writes manifest.json; blobs are written as they are added.
  void finish();

 private:
  std::filesystem::path dir_;
  std::string kind_;
  nlohmann::json meta_;
  nlohmann::json blobs_;
};

class ContainerReader {
 public:
  explicit ContainerReader(std::filesystem::path dir);

  const nlohmann::json& meta() const { return meta_; }
  const std::string& kind() const { return kind_; }
  bool has_blob(const std::string& name) const;
  std::vector<std::size_t> shape(const std::string& name) const;
  // Checksum-verified reads; throw on mismatch or truncation.
  std::vector<float> read_f32(const std::string& name) const;
  std::vector<double> read_f64(const std::string& name) const;

 private:
  std::filesystem::path dir_;
  std::string kind_;
  nlohmann::json meta_;
  nlohmann::json blobs_;

  std::vector<char> read_raw(const std::string& name, const std::string& dtype) const;
};

}  // namespace ngcg
