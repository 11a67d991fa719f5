#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpd/hierarchy.hpp"

namespace fpd::io {

inline constexpr std::uint32_t kArtifactVersion = 1;

/// Binary container: "FPDSTACK", u32 version, u64 metadata length + JSON,
/// u64 value count + little-endian doubles, u32 CRC-32 of everything before.
std::vector<std::uint8_t> serialize_stack(const ExtractorStack& stack);
ExtractorStack deserialize_stack(const std::vector<std::uint8_t>& bytes);

/// Requires a finalized stack.
void save_stack(const ExtractorStack& stack, const std::string& path);
ExtractorStack load_stack(const std::string& path);

}  // namespace fpd::io
