#pragma once

#include <string>

#include "dmnls/grid.hpp"

namespace dmnls {

// Binary field snapshot, little-endian throughout.  Layout:
//   bytes  0..7   magic "DMNLS1\0\0"
//   bytes  8..11  u32 n_points
//   bytes 12..15  zero padding
//   bytes 16..23  f64 half-width of the box
//   bytes 24..31  f64 sample time
//   then n_points (f64 re, f64 im) pairs in grid order.
struct Snapshot {
  Field field;
  double time;
};

void write_snapshot(const std::string& path, const Field& f, double time);
Snapshot read_snapshot(const std::string& path);

}  // namespace dmnls
