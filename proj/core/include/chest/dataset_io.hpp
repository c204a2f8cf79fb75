#pragma once

#include "chest/channelgen.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace chest {

enum class SampleType : std::uint8_t { F32 = 0, F64 = 1 };

/// Binary dataset container:
///   "CHDS" | u32 version=1 | u32 nr | u32 nt | u64 count | u8 dtype |
///   count*nr*nt interleaved (re, im) values, row-major |
///   UTF-8 JSON trailer {"spec": ..., "seed": ...} up to end of file.
/// All integers and floats little-endian.
inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const Dataset& data, const std::filesystem::path& path,
                   SampleType type = SampleType::F64);
Dataset read_dataset(const std::filesystem::path& path);

std::string spec_to_json(const ChannelModelSpec& spec);
ChannelModelSpec spec_from_json(const std::string& text);

/// FNV-1a 64-bit digest of a byte string / file, used for checksums and
/// config hashes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t file_checksum(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

}  // namespace chest
