// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fvr/error.hpp"
#include "fvr/textio.hpp"

namespace fvr {
namespace {

constexpr const char* kVolumeMagic = "FVRVOL1";

std::uint32_t to_little_endian(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::little) {
    return x;
  } else {
    return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
  }
}

struct VolumeHeader {
  int d = 0, h = 0, w = 0;
  Spacing3 spacing;
};

void write_volume_file(const std::filesystem::path& path, const VolumeHeader& hdr,
                       const std::vector<float>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << kVolumeMagic << '\n'
      << hdr.d << ' ' << hdr.h << ' ' << hdr.w << '\n'
      << format_double(hdr.spacing.z) << ' ' << format_double(hdr.spacing.y) << ' '
      << format_double(hdr.spacing.x) << '\n'
      << '\n';
  std::vector<std::uint32_t> raw(data.size());
  for (std::size_t p = 0; p < data.size(); ++p) {
    raw[p] = to_little_endian(std::bit_cast<std::uint32_t>(data[p]));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

// Splits off one '\n'-terminated line starting at pos.
std::string next_line(const std::vector<char>& buf, std::size_t& pos) {
  const std::size_t start = pos;
  while (pos < buf.size() && buf[pos] != '\n') ++pos;
  if (pos >= buf.size()) throw Error(ErrorCode::kDimensionMismatch, "truncated header");
  std::string line(buf.begin() + start, buf.begin() + pos);
  ++pos;
  return line;
}

std::vector<float> read_volume_file(const std::filesystem::path& path, VolumeHeader& hdr) {
  const std::vector<char> buf = read_file(path);
  std::size_t pos = 0;
  std::size_t magic_len = std::strlen(kVolumeMagic);
  if (buf.size() < magic_len + 1 || std::memcmp(buf.data(), kVolumeMagic, magic_len) != 0 ||
      buf[magic_len] != '\n') {
    throw Error(ErrorCode::kBadMagic, "'" + path.string() + "' is not an FVRVOL1 file");
  }
  pos = magic_len + 1;
  {
    const auto dims = split(trim(next_line(buf, pos)), ' ');
    if (dims.size() != 3) throw Error(ErrorCode::kDimensionMismatch, "bad dimension line");
    hdr.d = static_cast<int>(parse_int(dims[0]));
    hdr.h = static_cast<int>(parse_int(dims[1]));
    hdr.w = static_cast<int>(parse_int(dims[2]));
    if (hdr.d < 1 || hdr.h < 1 || hdr.w < 1) {
      throw Error(ErrorCode::kDimensionMismatch, "non-positive dimensions");
    }
  }
  {
    const auto sp = split(trim(next_line(buf, pos)), ' ');
    if (sp.size() != 3) throw Error(ErrorCode::kDimensionMismatch, "bad spacing line");
    hdr.spacing = {parse_double(sp[0]), parse_double(sp[1]), parse_double(sp[2])};
  }
  if (!trim(next_line(buf, pos)).empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "missing blank line after header");
  }
  const std::size_t count = static_cast<std::size_t>(hdr.d) * hdr.h * hdr.w;
  if (buf.size() - pos != count * sizeof(float)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "payload has " + std::to_string(buf.size() - pos) + " bytes, expected " +
                    std::to_string(count * sizeof(float)));
  }
  std::vector<float> data(count);
  for (std::size_t p = 0; p < count; ++p) {
    std::uint32_t raw;
    std::memcpy(&raw, buf.data() + pos + p * sizeof(raw), sizeof(raw));
    data[p] = std::bit_cast<float>(to_little_endian(raw));
  }
  return data;
}

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu.fvr", index);
  return buf;
}

}  // namespace

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

void save_volume(const Volume3D& v, const std::filesystem::path& path) {
  write_volume_file(path, {v.depth, v.height, v.width, v.spacing}, v.voxels);
}

Volume3D load_volume(const std::filesystem::path& path) {
  VolumeHeader hdr;
  std::vector<float> data = read_volume_file(path, hdr);
  Volume3D v(hdr.d, hdr.h, hdr.w, hdr.spacing);
  v.voxels = std::move(data);
  return v;
}

void save_frame(const Frame2D& f, const std::filesystem::path& path) {
  write_volume_file(path, {1, f.height, f.width, {f.spacing, f.spacing, f.spacing}}, f.pixels);
}

Frame2D load_frame(const std::filesystem::path& path) {
  VolumeHeader hdr;
  std::vector<float> data = read_volume_file(path, hdr);
  if (hdr.d != 1) throw Error(ErrorCode::kDimensionMismatch, "frame files must have D = 1");
  if (hdr.spacing.x != hdr.spacing.y) {
    throw Error(ErrorCode::kDimensionMismatch, "frame spacing must be isotropic in-plane");
  }
  Frame2D f(hdr.h, hdr.w, hdr.spacing.x);
  f.pixels = std::move(data);
  return f;
}

void write_poses_csv(const std::vector<RigidParams>& poses, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "index,tx,ty,tz,ax,ay,az\n";
  for (std::size_t n = 0; n < poses.size(); ++n) {
    out << n;
    for (double c : poses[n].to_array()) out << ',' << format_double(c);
    out << '\n';
  }
  write_text(path, out.str());
}

std::vector<RigidParams> read_poses_csv(const std::filesystem::path& path) {
  const std::vector<char> buf = read_file(path);
  std::istringstream in(std::string(buf.begin(), buf.end()));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "index,tx,ty,tz,ax,ay,az") {
    throw Error(ErrorCode::kBadMagic, "poses.csv header mismatch");
  }
  std::vector<RigidParams> poses;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != 7) throw Error(ErrorCode::kDimensionMismatch, "poses.csv row needs 7 cells");
    if (parse_int(cells[0]) != static_cast<long long>(poses.size())) {
      throw Error(ErrorCode::kDimensionMismatch, "poses.csv indices must be 0..N-1 in order");
    }
    RigidParams p;
    for (std::size_t c = 0; c < 6; ++c) p[c] = parse_double(cells[c + 1]);
    poses.push_back(p);
  }
  return poses;
}

void save_sweep(const SweepDataset& ds, const std::filesystem::path& dir) {
  if (ds.frames.size() != ds.poses.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "frames and poses differ in length");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir / "frames", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  save_volume(ds.volume, dir / "volume.fvr");
  for (std::size_t n = 0; n < ds.frames.size(); ++n) {
    save_frame(ds.frames[n], dir / "frames" / frame_name(n));
  }
  write_poses_csv(ds.poses, dir / "poses.csv");
  std::string mats;
  for (const RigidParams& p : ds.poses) mats += params_to_matrix(p).serialize() + '\n';
  write_text(dir / "poses.txt", mats);
  write_text(dir / "sweep.txt", "seed=" + std::to_string(ds.seed) +
                                    "\ntrajectory=" + to_string(ds.trajectory) + "\n");
}

SweepDataset load_sweep(const std::filesystem::path& dir) {
  SweepDataset ds;
  ds.volume = load_volume(dir / "volume.fvr");
  ds.poses = read_poses_csv(dir / "poses.csv");
  for (std::size_t n = 0; n < ds.poses.size(); ++n) {
    ds.frames.push_back(load_frame(dir / "frames" / frame_name(n)));
  }
  if (std::filesystem::exists(dir / "frames" / frame_name(ds.poses.size()))) {
    throw Error(ErrorCode::kDimensionMismatch, "more frame files than poses");
  }
  if (std::filesystem::exists(dir / "sweep.txt")) {
    const std::vector<char> buf = read_file(dir / "sweep.txt");
    std::istringstream in(std::string(buf.begin(), buf.end()));
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key(trim(std::string_view(line).substr(0, eq)));
      const std::string val(trim(std::string_view(line).substr(eq + 1)));
      if (key == "seed") ds.seed = std::stoull(val);
      if (key == "trajectory") ds.trajectory = parse_trajectory(val);
    }
  }
  return ds;
}

}  // namespace fvr
