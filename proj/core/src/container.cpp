#include "ngcg/container.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ngcg {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(const void* data, std::size_t n_bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n_bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

void write_blob(const fs::path& path, const void* data, std::size_t n_bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n_bytes));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

std::size_t shape_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

}  // namespace

ContainerWriter::ContainerWriter(fs::path dir, std::string kind)
    : dir_(std::move(dir)), kind_(std::move(kind)) {
  fs::create_directories(dir_);
  meta_ = nlohmann::json::object();
  blobs_ = nlohmann::json::object();
}

void ContainerWriter::add_f32(const std::string& name, const std::vector<float>& data,
                              const std::vector<std::size_t>& shape) {
  if (data.size() != shape_count(shape)) throw std::invalid_argument("shape/data mismatch: " + name);
  write_blob(dir_ / (name + ".bin"), data.data(), data.size() * sizeof(float));
  blobs_[name] = {{"dtype", "f32"},
                  {"shape", shape},
                  {"checksum", fnv1a64(data.data(), data.size() * sizeof(float))}};
}

void ContainerWriter::add_f64(const std::string& name, const std::vector<double>& data,
                              const std::vector<std::size_t>& shape) {
  if (data.size() != shape_count(shape)) throw std::invalid_argument("shape/data mismatch: " + name);
  write_blob(dir_ / (name + ".bin"), data.data(), data.size() * sizeof(double));
  blobs_[name] = {{"dtype", "f64"},
                  {"shape", shape},
                  {"checksum", fnv1a64(data.data(), data.size() * sizeof(double))}};
}

void ContainerWriter::finish() {
  nlohmann::json manifest;
  manifest["format"] = "ngcg-container";
  manifest["version"] = 1;
  manifest["kind"] = kind_;
  manifest["meta"] = meta_;
  manifest["blobs"] = blobs_;
  std::ofstream out(dir_ / "manifest.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir_.string());
  out << manifest.dump(2) << "\n";
}

ContainerReader::ContainerReader(fs::path dir) : dir_(std::move(dir)) {
  std::ifstream in(dir_ / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in " + dir_.string());
  nlohmann::json manifest = nlohmann::json::parse(in);
  if (manifest.value("format", "") != "ngcg-container")
    throw std::runtime_error("not an ngcg container: " + dir_.string());
  if (manifest.value("version", 0) != 1)
    throw std::runtime_error("unsupported container version in " + dir_.string());
  kind_ = manifest.value("kind", "");
  meta_ = manifest["meta"];
  blobs_ = manifest["blobs"];
}

bool ContainerReader::has_blob(const std::string& name) const { return blobs_.contains(name); }

std::vector<std::size_t> ContainerReader::shape(const std::string& name) const {
  if (!blobs_.contains(name)) throw std::runtime_error("no blob named " + name);
  return blobs_[name]["shape"].get<std::vector<std::size_t>>();
}

std::vector<char> ContainerReader::read_raw(const std::string& name,
                                            const std::string& dtype) const {
  if (!blobs_.contains(name)) throw std::runtime_error("no blob named " + name);
  const auto& entry = blobs_[name];
  if (entry["dtype"].get<std::string>() != dtype)
    throw std::runtime_error("dtype mismatch for blob " + name);
  std::size_t elem = dtype == "f32" ? 4 : 8;
  std::size_t count = shape_count(entry["shape"].get<std::vector<std::size_t>>());
  std::ifstream in(dir_ / (name + ".bin"), std::ios::binary);
  if (!in) throw std::runtime_error("missing blob file: " + name);
  std::vector<char> bytes(count * elem);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size())
    throw std::runtime_error("truncated blob: " + name);
  std::uint64_t want = entry["checksum"].get<std::uint64_t>();
  std::uint64_t got = fnv1a64(bytes.data(), bytes.size());
  if (want != got) throw std::runtime_error("checksum mismatch for blob " + name);
  return bytes;
}

std::vector<float> ContainerReader::read_f32(const std::string& name) const {
  auto bytes = read_raw(name, "f32");
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::vector<double> ContainerReader::read_f64(const std::string& name) const {
  auto bytes = read_raw(name, "f64");
  std::vector<double> out(bytes.size() / sizeof(double));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

}  // namespace ngcg
