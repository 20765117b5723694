#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace savsim {

// Identifiers as they appear in input files. Internally everything is
// remapped to dense indices.
using ExtId = std::int64_t;

using NodeIdx = std::int32_t;
using LinkIdx = std::int32_t;
using ZoneIdx = std::int32_t;

inline constexpr std::int32_t kInvalidIdx = -1;

enum class LandUse : int {
  office = 0,
  commerce,
  residence,
  industry,
  park,
  transport,
  nature,
};

inline constexpr int kLandUseCount = 7;

inline constexpr std::array<std::string_view, kLandUseCount> kLandUseNames = {
    "office", "commerce", "residence", "industry", "park", "transport", "nature"};

LandUse land_use_from_name(std::string_view name);

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Broken internal invariant (illegal state transition, unmatched event, ...).
struct InvariantViolation : Error {
  using Error::Error;
};

}  // namespace savsim
