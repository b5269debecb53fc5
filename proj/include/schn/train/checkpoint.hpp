#pragma once

#include "schn/config.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace schn::train {

enum class TensorType : std::uint8_t { f32 = 0, f64 = 1, u64 = 2 };

struct NamedTensor {
    std::string name;
    TensorType type = TensorType::f64;
    std::vector<std::uint64_t> dims;
    std::vector<double> values;        // f32 / f64 payloads
    std::vector<std::uint64_t> words;  // u64 payloads

    std::uint64_t element_count() const;
};

/// "SCHN" | u32 version | u32 config length + text | u32 tensor count |
/// per tensor: u16 name length + name, u8 dtype, u8 rank, u64 dims, payload.
/// All integers and samples little-endian.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    ConfigText config;
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const;
};

std::vector<char> encode_checkpoint(const Checkpoint& c);
/// Throws FormatError with a distinct fault for bad magic, version, truncation
/// and malformed fields.
Checkpoint decode_checkpoint(std::span<const char> bytes, const std::string& context = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace schn::train
