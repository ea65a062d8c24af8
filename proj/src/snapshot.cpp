#include "dmnls/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "snapshot i/o assumes a little-endian host");

namespace dmnls {

namespace {

constexpr char kMagic[8] = {'D', 'M', 'N', 'L', 'S', '1', '\0', '\0'};
constexpr uint32_t kMaxPoints = 1u << 26;

}  // namespace

void write_snapshot(const std::string& path, const Field& f, double time) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path);
  char header[32] = {};
  std::memcpy(header, kMagic, 8);
  const uint32_t n = static_cast<uint32_t>(f.grid->n_points());
  const double half_width = f.grid->half_width();
  std::memcpy(header + 8, &n, 4);
  std::memcpy(header + 16, &half_width, 8);
  std::memcpy(header + 24, &time, 8);
  out.write(header, sizeof(header));
  out.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(cx)));
  if (!out) throw std::runtime_error("snapshot: write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  char header[32];
  in.read(header, sizeof(header));
  if (!in || std::memcmp(header, kMagic, 8) != 0)
    throw std::runtime_error("snapshot: bad magic in " + path);
  uint32_t n = 0;
  double half_width = 0.0, time = 0.0;
  std::memcpy(&n, header + 8, 4);
  std::memcpy(&half_width, header + 16, 8);
  std::memcpy(&time, header + 24, 8);
  if (n < 8 || n % 2 != 0 || n > kMaxPoints || !(half_width > 0.0))
    throw std::runtime_error("snapshot: corrupt header in " + path);
  GridPtr g = make_grid(half_width, static_cast<int>(n));
  Field f = zero_field(g);
  in.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(n * sizeof(cx)));
  if (!in) throw std::runtime_error("snapshot: truncated data in " + path);
  return Snapshot{std::move(f), time};
}

}  // namespace dmnls
