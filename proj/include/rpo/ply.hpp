// ASCII PLY import/export for point clouds (x,y,z doubles, optional
// nx,ny,nz and an optional uchar mask property).
#pragma once

#include <filesystem>
#include <iosfwd>

#include "rpo/se3.hpp"

namespace rpo {

void write_ply(std::ostream& out, const Cloud& cloud);
void write_ply(const std::filesystem::path& path, const Cloud& cloud);

Cloud read_ply(std::istream& in);
Cloud read_ply(const std::filesystem::path& path);

}  // namespace rpo
