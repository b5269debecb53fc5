#pragma once

#include "schn/grid.hpp"
#include "schn/sht.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace schn {

enum class SampleType : std::uint8_t { f32 = 0, f64 = 1 };

inline constexpr std::uint32_t kSignalFormatVersion = 1;
inline constexpr std::uint32_t kMaxFileBandlimit = 8192;
inline constexpr std::uint32_t kMaxFileChannels = 1u << 16;

// ".sphs": "SPHS" | u32 version | u32 B | u32 C | u8 dtype | payload (channel-major, colatitude-major).
std::vector<char> encode_signal(const FeatureMap& m, SampleType type = SampleType::f64);
FeatureMap decode_signal(std::span<const char> bytes, SampleType* stored_type = nullptr,
                         const std::string& context = "signal");
void write_signal(const FeatureMap& m, const std::filesystem::path& path, SampleType type = SampleType::f64);
FeatureMap read_signal(const std::filesystem::path& path, SampleType* stored_type = nullptr);

// ".sphl": "SPHL" | u32 version | u32 B | u32 num_classes | u16 labels row-major.
std::vector<char> encode_labels(const LabelMap& m);
LabelMap decode_labels(std::span<const char> bytes, const std::string& context = "labels");
void write_labels(const LabelMap& m, const std::filesystem::path& path);
LabelMap read_labels(const std::filesystem::path& path);

// Coefficient dump: the ".sphs" layout with magic "SPHC", C = 2 (real plane,
// imaginary plane), each plane holding the B^2 degree-major coefficients.
std::vector<char> encode_coeffs(const SpectralCoeffs& c, SampleType type = SampleType::f64);
SpectralCoeffs decode_coeffs(std::span<const char> bytes, const std::string& context = "coefficients");
void write_coeffs(const SpectralCoeffs& c, const std::filesystem::path& path, SampleType type = SampleType::f64);
SpectralCoeffs read_coeffs(const std::filesystem::path& path);

} // namespace schn
