#pragma once

#include <string>
#include <vector>

#include "pfimex/spectral_grid.hpp"

namespace pfimex {

// File layout: one line of JSON metadata, '\n', then product(n) little-endian
// f64 values in row-major order.
struct SnapshotHeader {
  int format_version = 1;
  int dim = 0;
  std::vector<std::size_t> n;
  std::vector<double> length;
  double t = 0.0;
  std::string model_name;

  bool operator==(const SnapshotHeader&) const = default;
};

struct Snapshot {
  SnapshotHeader header;
  Field field;
};

void write_snapshot(const Field& field, const std::string& path, double t = 0.0, const std::string& model_name = "");

SnapshotHeader read_snapshot_header(const std::string& path);

/// Throws HeaderMismatch for an inconsistent or unsupported header and
/// SnapshotError for I/O failures or a payload of the wrong length.
Snapshot read_snapshot(const std::string& path);

/// As above, but also requires the stored shape to match `grid`.
Field read_snapshot(const std::string& path, const GridPtr& grid);

}  // namespace pfimex
