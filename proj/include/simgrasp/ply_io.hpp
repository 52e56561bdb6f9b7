#pragma once

#include "simgrasp/point_cloud.hpp"

#include <string>

namespace simgrasp {

/// Reads an ASCII PLY with x,y,z[,nx,ny,nz] vertex properties.
PointCloud read_ply(const std::string& path);

/// Writes an ASCII PLY; normals are emitted when present. Floats are printed
/// with enough digits to round-trip doubles exactly.
void write_ply(const PointCloud& cloud, const std::string& path);

}  // namespace simgrasp
