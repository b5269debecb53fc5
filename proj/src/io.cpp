#include "schn/io.hpp"

#include "schn/binary.hpp"
#include "schn/error.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

namespace schn {

namespace binary {

std::vector<char> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("failed reading " + path.string());
    }
    return data;
}

void write_file(const std::filesystem::path& path, std::span<const char> data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace binary

namespace {

struct Header {
    std::uint32_t B;
    std::uint32_t second; // channels or class count
};

void expect_magic(binary::Reader& r, std::string_view magic)
{
    const std::string got = r.bytes(4);
    if (got != magic) {
        throw FormatError(FormatFault::bad_magic,
                          r.context() + ": bad magic (expected " + std::string(magic) + ")");
    }
}

Header read_header(binary::Reader& r, std::string_view magic, std::uint32_t max_second)
{
    expect_magic(r, magic);
    const std::uint32_t version = r.u32();
    if (version != kSignalFormatVersion) {
        throw FormatError(FormatFault::version_mismatch,
                          r.context() + ": unsupported version " + std::to_string(version));
    }
    Header h{r.u32(), r.u32()};
    if (h.B == 0 || h.second == 0) {
        throw FormatError(FormatFault::bad_value, r.context() + ": zero dimension in header");
    }
    if (h.B > kMaxFileBandlimit || h.second > max_second) {
        throw FormatError(FormatFault::dimension_overflow, r.context() + ": header dimensions too large (B=" +
                                                               std::to_string(h.B) + ", " +
                                                               std::to_string(h.second) + ")");
    }
    return h;
}

SampleType read_dtype(binary::Reader& r)
{
    const std::uint8_t t = r.u8();
    if (t > 1) {
        throw FormatError(FormatFault::bad_value, r.context() + ": unknown dtype " + std::to_string(t));
    }
    return static_cast<SampleType>(t);
}

std::size_t sample_width(SampleType t)
{
    return t == SampleType::f32 ? 4 : 8;
}

void write_samples(binary::Writer& w, std::span<const double> values, SampleType t)
{
    for (double v : values) {
        if (t == SampleType::f32) {
            w.f32(static_cast<float>(v));
        } else {
            w.f64(v);
        }
    }
}

std::vector<double> read_samples(binary::Reader& r, std::size_t count, SampleType t)
{
    r.need(count * sample_width(t));
    std::vector<double> out(count);
    for (auto& v : out) {
        v = (t == SampleType::f32) ? static_cast<double>(r.f32()) : r.f64();
        if (!std::isfinite(v)) {
            throw FormatError(FormatFault::bad_value, r.context() + ": non-finite sample");
        }
    }
    return out;
}

void expect_end(const binary::Reader& r)
{
    if (r.remaining() != 0) {
        throw FormatError(FormatFault::shape_mismatch, r.context() + ": trailing bytes after payload");
    }
}

} // namespace

std::vector<char> encode_signal(const FeatureMap& m, SampleType type)
{
    binary::Writer w;
    w.bytes("SPHS");
    w.u32(kSignalFormatVersion);
    w.u32(static_cast<std::uint32_t>(m.B()));
    w.u32(static_cast<std::uint32_t>(m.channels));
    w.u8(static_cast<std::uint8_t>(type));
    write_samples(w, m.values, type);
    return w.take();
}

FeatureMap decode_signal(std::span<const char> bytes, SampleType* stored_type, const std::string& context)
{
    binary::Reader r(bytes, context);
    const Header h = read_header(r, "SPHS", kMaxFileChannels);
    const SampleType t = read_dtype(r);
    const std::size_t n = 4ull * h.B * h.B * h.second;
    auto values = read_samples(r, n, t);
    expect_end(r);
    if (stored_type) {
        *stored_type = t;
    }
    return FeatureMap(shared_grid(static_cast<int>(h.B)), static_cast<int>(h.second), std::move(values));
}

void write_signal(const FeatureMap& m, const std::filesystem::path& path, SampleType type)
{
    binary::write_file(path, encode_signal(m, type));
}

FeatureMap read_signal(const std::filesystem::path& path, SampleType* stored_type)
{
    return decode_signal(binary::read_file(path), stored_type, path.string());
}

std::vector<char> encode_labels(const LabelMap& m)
{
    binary::Writer w;
    w.bytes("SPHL");
    w.u32(kSignalFormatVersion);
    w.u32(static_cast<std::uint32_t>(m.B()));
    w.u32(static_cast<std::uint32_t>(m.num_classes));
    for (auto v : m.labels) {
        w.u16(v);
    }
    return w.take();
}

LabelMap decode_labels(std::span<const char> bytes, const std::string& context)
{
    binary::Reader r(bytes, context);
    const Header h = read_header(r, "SPHL", 65536);
    const std::size_t n = 4ull * h.B * h.B;
    r.need(2 * n);
    std::vector<std::uint16_t> labels(n);
    for (auto& v : labels) {
        v = r.u16();
        if (v >= h.second) {
            throw FormatError(FormatFault::bad_value, context + ": label " + std::to_string(v) +
                                                          " exceeds class count " + std::to_string(h.second));
        }
    }
    expect_end(r);
    return LabelMap(shared_grid(static_cast<int>(h.B)), static_cast<int>(h.second), std::move(labels));
}

void write_labels(const LabelMap& m, const std::filesystem::path& path)
{
    binary::write_file(path, encode_labels(m));
}

LabelMap read_labels(const std::filesystem::path& path)
{
    return decode_labels(binary::read_file(path), path.string());
}

std::vector<char> encode_coeffs(const SpectralCoeffs& c, SampleType type)
{
    binary::Writer w;
    w.bytes("SPHC");
    w.u32(kSignalFormatVersion);
    w.u32(static_cast<std::uint32_t>(c.B()));
    w.u32(2);
    w.u8(static_cast<std::uint8_t>(type));
    std::vector<double> plane(c.coeffs.size());
    for (std::size_t i = 0; i < plane.size(); ++i) {
        plane[i] = c.coeffs[i].real();
    }
    write_samples(w, plane, type);
    for (std::size_t i = 0; i < plane.size(); ++i) {
        plane[i] = c.coeffs[i].imag();
    }
    write_samples(w, plane, type);
    return w.take();
}

SpectralCoeffs decode_coeffs(std::span<const char> bytes, const std::string& context)
{
    binary::Reader r(bytes, context);
    const Header h = read_header(r, "SPHC", 2);
    if (h.second != 2) {
        throw FormatError(FormatFault::shape_mismatch, context + ": coefficient dump needs exactly 2 planes");
    }
    const SampleType t = read_dtype(r);
    const std::size_t n = static_cast<std::size_t>(h.B) * h.B;
    const auto re = read_samples(r, n, t);
    const auto im = read_samples(r, n, t);
    expect_end(r);
    SpectralCoeffs c(Bandlimit(static_cast<int>(h.B)));
    for (std::size_t i = 0; i < n; ++i) {
        c.coeffs[i] = complex(re[i], im[i]);
    }
    return c;
}

void write_coeffs(const SpectralCoeffs& c, const std::filesystem::path& path, SampleType type)
{
    binary::write_file(path, encode_coeffs(c, type));
}

SpectralCoeffs read_coeffs(const std::filesystem::path& path)
{
    return decode_coeffs(binary::read_file(path), path.string());
}

} // namespace schn
