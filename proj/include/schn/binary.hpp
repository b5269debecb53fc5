#pragma once

// Little-endian byte encoding independent of host byte order.

#include "schn/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace schn::binary {

class Writer {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    const std::vector<char>& buffer() const noexcept { return buf_; }
    std::vector<char> take() { return std::move(buf_); }

private:
    void put(std::uint64_t v, int n)
    {
        for (int i = 0; i < n; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
        }
    }
    std::vector<char> buf_;
};

class Reader {
public:
    Reader(std::span<const char> data, std::string context) : data_(data), context_(std::move(context)) {}

    std::string bytes(std::size_t n)
    {
        need(n);
        std::string s(data_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    /// Throws a truncation error unless n more bytes are available.
    void need(std::size_t n) const
    {
        if (remaining() < n) {
            throw FormatError(FormatFault::truncated, context_ + ": truncated payload (need " + std::to_string(n) +
                                                          " bytes, have " + std::to_string(remaining()) + ")");
        }
    }
    const std::string& context() const noexcept { return context_; }

private:
    std::uint64_t get(int n)
    {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const char> data_;
    std::size_t pos_ = 0;
    std::string context_;
};

/// Whole-file helpers; failures raise IoError naming the path.
std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const char> data);

} // namespace schn::binary
