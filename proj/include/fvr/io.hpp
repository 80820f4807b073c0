// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_IO_HPP_
#define FVR_IO_HPP_

#include <filesystem>
#include <vector>

#include "fvr/geometry.hpp"
#include "fvr/image.hpp"
#include "fvr/phantom.hpp"

namespace fvr {

// Volume file layout:
//   FVRVOL1\n
//   D H W\n
//   sz sy sx\n
//   \n
//   D*H*W little-endian float32, depth-major then row-major.
// Frames use the same layout with D = 1 and sz = sy = sx = spacing.

void save_volume(const Volume3D& v, const std::filesystem::path& path);
Volume3D load_volume(const std::filesystem::path& path);

void save_frame(const Frame2D& f, const std::filesystem::path& path);
Frame2D load_frame(const std::filesystem::path& path);

// Sweep directory: volume.fvr, frames/NNNN.fvr, poses.csv
// (index,tx,ty,tz,ax,ay,az), poses.txt (one 16-number row-major matrix per
// frame) and sweep.txt (seed and trajectory).
void save_sweep(const SweepDataset& ds, const std::filesystem::path& dir);
SweepDataset load_sweep(const std::filesystem::path& dir);

void write_poses_csv(const std::vector<RigidParams>& poses, const std::filesystem::path& path);
std::vector<RigidParams> read_poses_csv(const std::filesystem::path& path);

/// Reads a whole file; throws Error(kIo).
std::vector<char> read_file(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fvr

#endif  // FVR_IO_HPP_
