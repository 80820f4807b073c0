// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "fvr/error.hpp"
#include "fvr/io.hpp"
#include "fvr/textio.hpp"

namespace fs = std::filesystem;
using namespace fvr;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("fvr_io_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

Volume3D random_volume(int d, int h, int w, std::uint64_t seed) {
  Volume3D v(d, h, w, {0.5, 0.25, 0.125});
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 100.0f);
  for (float& x : v.voxels) x = n(rng);
  v.voxels[0] = -0.0f;
  v.voxels[1] = std::numeric_limits<float>::denorm_min();
  return v;
}

void check_error(const auto& fn, ErrorCode code) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("volume round-trip is bit exact") {
  TempDir tmp;
  const Volume3D v = random_volume(3, 4, 5, 1);
  save_volume(v, tmp.path / "v.fvr");
  const Volume3D back = load_volume(tmp.path / "v.fvr");
  CHECK(back.depth == 3);
  CHECK(back.spacing == v.spacing);
  REQUIRE(back.size() == v.size());
  CHECK(std::memcmp(back.voxels.data(), v.voxels.data(), v.size() * sizeof(float)) == 0);
}

TEST_CASE("volume file layout") {
  TempDir tmp;
  Volume3D v(1, 1, 2, {1.5, 1.0, 1.0});
  v.voxels = {1.0f, -2.0f};
  save_volume(v, tmp.path / "v.fvr");
  const std::vector<char> bytes = read_file(tmp.path / "v.fvr");
  const std::string header = "FVRVOL1\n1 1 2\n1.5 1 1\n\n";
  REQUIRE(bytes.size() == header.size() + 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
  // 1.0f = 0x3f800000 stored little-endian.
  CHECK(static_cast<unsigned char>(bytes[header.size() + 3]) == 0x3f);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 2]) == 0x80);
  CHECK(bytes[header.size()] == 0);
}

TEST_CASE("malformed volume files are rejected") {
  TempDir tmp;
  save_volume(random_volume(2, 2, 2, 2), tmp.path / "v.fvr");
  std::vector<char> bytes = read_file(tmp.path / "v.fvr");

  std::vector<char> truncated(bytes.begin(), bytes.end() - 3);
  write_bytes(tmp.path / "t.fvr", truncated);
  check_error([&] { load_volume(tmp.path / "t.fvr"); }, ErrorCode::kDimensionMismatch);

  std::vector<char> bad = bytes;
  bad[0] = 'X';
  write_bytes(tmp.path / "m.fvr", bad);
  check_error([&] { load_volume(tmp.path / "m.fvr"); }, ErrorCode::kBadMagic);

  check_error([&] { load_volume(tmp.path / "missing.fvr"); }, ErrorCode::kIo);
}

TEST_CASE("frame round-trip") {
  TempDir tmp;
  Frame2D f(3, 7, 0.3);
  std::mt19937 rng(5);
  for (float& p : f.pixels) p = std::uniform_real_distribution<float>(-1, 1)(rng);
  save_frame(f, tmp.path / "f.fvr");
  CHECK(load_frame(tmp.path / "f.fvr") == f);
  save_volume(random_volume(2, 3, 7, 3), tmp.path / "v.fvr");
  check_error([&] { load_frame(tmp.path / "v.fvr"); }, ErrorCode::kDimensionMismatch);
}

TEST_CASE("sweep round-trip") {
  TempDir tmp;
  SweepDataset ds;
  ds.volume = random_volume(4, 5, 6, 7);
  ds.seed = 1234567890123ull;
  ds.trajectory = Trajectory::kFan;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int n = 0; n < 3; ++n) {
    Frame2D f(5, 6, 0.125);
    for (float& p : f.pixels) p = static_cast<float>(u(rng));
    ds.frames.push_back(f);
    ds.poses.push_back({u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)});
  }
  save_sweep(ds, tmp.path / "sweep");
  CHECK(fs::exists(tmp.path / "sweep" / "frames" / "0002.fvr"));
  CHECK(load_sweep(tmp.path / "sweep") == ds);
}

TEST_CASE("poses csv") {
  TempDir tmp;
  const std::vector<RigidParams> poses{{0.1, -0.2, 1e-17, 179.999999999, -45, 3}, {}};
  write_poses_csv(poses, tmp.path / "p.csv");
  const std::vector<char> bytes = read_file(tmp.path / "p.csv");
  CHECK(std::string(bytes.begin(), bytes.begin() + 24) == "index,tx,ty,tz,ax,ay,az\n");
  CHECK(read_poses_csv(tmp.path / "p.csv") == poses);
  write_text(tmp.path / "bad.csv", "index,tx\n0,1\n");
  check_error([&] { read_poses_csv(tmp.path / "bad.csv"); }, ErrorCode::kBadMagic);
}

TEST_CASE("decimal formatting round-trips doubles") {
  std::mt19937_64 rng(9);
  for (int n = 0; n < 1000; ++n) {
    const double x = std::bit_cast<double>(rng() & 0x7fefffffffffffffull);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(3.0) == "3");
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
  CHECK(parse_int(" 42 ") == 42);
  CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
}

}  // TEST_SUITE
