#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "occshape/occupancy.hpp"

namespace occshape {

/// OCCV1 layout sizes in bytes.
inline constexpr std::size_t kDumpHeaderBytes = 41;
inline constexpr std::size_t kDumpRecordBytes = 8;
inline constexpr std::uint8_t kDumpVersion = 1;

std::vector<std::uint8_t> encode_dump(const OccupancyGrid& grid);
/// Throws ParseError on bad magic, version, truncation, or invalid records.
OccupancyGrid decode_dump(std::span<const std::uint8_t> bytes);

void write_dump(const OccupancyGrid& grid, const std::string& path);
OccupancyGrid read_dump(const std::string& path);

}  // namespace occshape
