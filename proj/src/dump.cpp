#include "occshape/dump.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "occshape/bytes.hpp"

namespace occshape {

namespace {
constexpr std::uint8_t kMagic[4] = {0x4F, 0x43, 0x43, 0x56};
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

std::vector<std::uint8_t> encode_dump(const OccupancyGrid& grid) {
  ByteWriter w;
  w.raw(kMagic);
  w.u8(kDumpVersion);
  const GridSpec& s = grid.spec();
  for (auto d : s.dims) w.u32(d);
  for (int a = 0; a < 3; ++a) w.f32(s.voxel_size[a]);
  for (int a = 0; a < 3; ++a) w.f32(s.origin[a]);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    w.u8(static_cast<std::uint8_t>(grid.cls(i)));
    w.f32(grid.prob(i));
    const Rgb c = grid.color(i);
    w.u8(c.r);
    w.u8(c.g);
    w.u8(c.b);
  }
  return std::move(w).take();
}

OccupancyGrid decode_dump(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "OCCV1");
  const auto magic = r.raw(4, "magic");
  for (int i = 0; i < 4; ++i)
    if (magic[i] != kMagic[i]) r.fail("bad magic", 0);
  const auto version = r.u8("version");
  if (version != kDumpVersion) r.fail("unsupported version " + std::to_string(version), 4);
  GridSpec spec;
  for (auto& d : spec.dims) d = r.u32("dims");
  const std::size_t size_at = r.offset();
  for (int a = 0; a < 3; ++a) spec.voxel_size[a] = r.f32("voxel size");
  for (int a = 0; a < 3; ++a) spec.origin[a] = r.f32("origin");
  for (int a = 0; a < 3; ++a) {
    if (spec.dims[a] == 0) r.fail("zero grid dimension", 5 + 4 * a);
    if (!(spec.voxel_size[a] > 0.0f) || !std::isfinite(spec.voxel_size[a]))
      r.fail("non-positive voxel size", size_at + 4 * a);
    if (!std::isfinite(spec.origin[a])) r.fail("non-finite origin", size_at + 12 + 4 * a);
  }
  const long double n = static_cast<long double>(spec.dims[0]) * spec.dims[1] * spec.dims[2];
  if (n * kDumpRecordBytes > static_cast<long double>(r.remaining()))
    throw ParseError("OCCV1: truncated voxel records", bytes.size());

  OccupancyGridBuilder b(spec);
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    const std::size_t at = r.offset();
    const auto cls_byte = r.u8("class");
    if (cls_byte > static_cast<std::uint8_t>(SemanticClass::Noise))
      r.fail("invalid class byte " + std::to_string(cls_byte), at);
    const float prob = r.f32("probability");
    if (!(prob >= 0.0f && prob <= 1.0f)) r.fail("probability outside [0, 1]", at + 1);
    Rgb c;
    c.r = r.u8("color");
    c.g = r.u8("color");
    c.b = r.u8("color");
    b.set(i, static_cast<SemanticClass>(cls_byte), prob, c);
  }
  r.expect_end();
  return std::move(b).build();
}

void write_dump(const OccupancyGrid& grid, const std::string& path) {
  write_file_bytes(path, encode_dump(grid));
}

OccupancyGrid read_dump(const std::string& path) { return decode_dump(read_file_bytes(path)); }

}  // namespace occshape
