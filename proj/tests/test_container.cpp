#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ngcg/container.hpp"

using namespace ngcg;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}
}  // namespace

TEST_CASE("container round trip") {
  auto dir = temp_dir("ngcg_container_rt");
  std::vector<float> data{1.5f, -2.25f, 3.0f, 0.125f, 9.0f, -1.0f};
  {
    ContainerWriter w(dir, "dataset");
    w.add_f32("x", data, {2, 3});
    w.meta()["note"] = "roundtrip";
    w.finish();
  }
  ContainerReader r(dir);
  CHECK(r.kind() == "dataset");
  CHECK(r.meta()["note"] == "roundtrip");
  CHECK(r.shape("x") == std::vector<std::size_t>{2, 3});
  CHECK(r.read_f32("x") == data);
  fs::remove_all(dir);
}

TEST_CASE("corrupted blob fails checksum") {
  auto dir = temp_dir("ngcg_container_bad");
  {
    ContainerWriter w(dir, "dataset");
    w.add_f32("x", {1.0f, 2.0f}, {2});
    w.finish();
  }
  {
    std::fstream f(dir / "x.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    char junk = 0x5a;
    f.write(&junk, 1);
  }
  ContainerReader r(dir);
  CHECK_THROWS_WITH_AS(r.read_f32("x"), doctest::Contains("checksum"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("truncated blob detected") {
  auto dir = temp_dir("ngcg_container_trunc");
  {
    ContainerWriter w(dir, "dataset");
    w.add_f32("x", {1.0f, 2.0f, 3.0f}, {3});
    w.finish();
  }
  fs::resize_file(dir / "x.bin", 4);
  ContainerReader r(dir);
  CHECK_THROWS_WITH_AS(r.read_f32("x"), doctest::Contains("truncated"), std::runtime_error);
  fs::remove_all(dir);
}
