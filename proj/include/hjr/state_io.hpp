#pragma once

// Text checkpoint format for RiccatiState:
//
//   hjr-state 1
//   n <dim>
//   epsilon <value>
//   track_r <0|1>
//   P
//   <dim rows of dim values, row-major>
//   q
//   <dim values>
//   r
//   <value>
//
// All numbers are written with 17 significant digits so a save/load cycle
// reproduces the state bit for bit.

#include <filesystem>
#include <string>
#include <string_view>

#include "hjr/riccati.hpp"

namespace hjr {

inline constexpr std::string_view kStateMagic = "hjr-state";
inline constexpr int kStateVersion = 1;

/// Shortest-safe round-trip formatting (17 significant digits).
std::string format_double(double value);

std::string serialize_state(const RiccatiState& state);
RiccatiState parse_state(std::string_view text);

void save_state(const RiccatiState& state, const std::filesystem::path& path);
RiccatiState load_state(const std::filesystem::path& path);

}  // namespace hjr
