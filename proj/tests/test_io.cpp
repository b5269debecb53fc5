#include "schn/binary.hpp"
#include "schn/error.hpp"
#include "schn/io.hpp"
#include "schn/random.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>

using namespace schn;

namespace {

FeatureMap random_map(int B, int C, std::uint64_t seed)
{
    Rng rng(seed);
    FeatureMap m(shared_grid(B), C);
    for (auto& v : m.values) {
        v = rng.normal();
    }
    return m;
}

FormatFault fault_of(auto&& fn)
{
    try {
        fn();
    } catch (const FormatError& e) {
        return e.fault();
    }
    FAIL("expected a FormatError");
    return FormatFault::bad_value;
}

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("schn_test_io_" + name);
}

} // namespace

TEST_CASE("signal round trip is bit exact through a file")
{
    const auto m = random_map(4, 3, 7);
    const auto path = temp_path("a.sphs");
    write_signal(m, path);
    SampleType t{};
    const auto back = read_signal(path, &t);
    CHECK(t == SampleType::f64);
    CHECK(back.channels == 3);
    CHECK(back.B() == 4);
    CHECK(std::memcmp(back.values.data(), m.values.data(), m.values.size() * sizeof(double)) == 0);
    CHECK(encode_signal(back) == binary::read_file(path));
    std::filesystem::remove(path);
}

TEST_CASE("random shapes and both dtypes round trip")
{
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int B = 1 + static_cast<int>(rng.below(9));
        const int C = 1 + static_cast<int>(rng.below(4));
        const auto type = rng.below(2) ? SampleType::f32 : SampleType::f64;
        const auto m = random_map(B, C, 100 + trial);
        const auto bytes = encode_signal(m, type);
        REQUIRE(bytes.size() == 17 + (type == SampleType::f32 ? 4u : 8u) * 4u * B * B * C);
        const auto back = decode_signal(bytes);
        // read then write reproduces the file byte for byte
        REQUIRE(encode_signal(back, type) == bytes);
        for (std::size_t i = 0; i < m.values.size(); ++i) {
            const double expect = type == SampleType::f32 ? static_cast<double>(static_cast<float>(m.values[i]))
                                                          : m.values[i];
            REQUIRE(back.values[i] == expect);
        }
    }
}

TEST_CASE("header is little endian regardless of host")
{
    FeatureMap m(shared_grid(1), 2);
    m.values[0] = 1.0;
    const auto bytes = encode_signal(m, SampleType::f32);
    const unsigned char expect[] = {'S', 'P', 'H', 'S', 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 0,
                                    // 1.0f = 0x3f800000
                                    0x00, 0x00, 0x80, 0x3f};
    REQUIRE(bytes.size() >= sizeof(expect));
    CHECK(std::memcmp(bytes.data(), expect, sizeof(expect)) == 0);
}

TEST_CASE("signal format errors are distinct")
{
    auto bytes = encode_signal(random_map(4, 3, 1));

    auto bad_magic = bytes;
    std::memcpy(bad_magic.data(), "XXXX", 4);
    CHECK(fault_of([&] { decode_signal(bad_magic); }) == FormatFault::bad_magic);

    auto bad_version = bytes;
    bad_version[4] = 2;
    CHECK(fault_of([&] { decode_signal(bad_version); }) == FormatFault::version_mismatch);

    auto short_payload = bytes;
    short_payload.resize(bytes.size() - 8);
    CHECK(fault_of([&] { decode_signal(short_payload); }) == FormatFault::truncated);

    auto short_header = bytes;
    short_header.resize(10);
    CHECK(fault_of([&] { decode_signal(short_header); }) == FormatFault::truncated);

    auto huge = bytes;
    huge[8] = 0xff;
    huge[9] = 0xff;
    huge[10] = 0xff;
    huge[11] = 0x7f;
    CHECK(fault_of([&] { decode_signal(huge); }) == FormatFault::dimension_overflow);

    CHECK_THROWS_AS(read_signal(temp_path("does_not_exist.sphs")), IoError);
}

TEST_CASE("label round trip and errors")
{
    LabelMap m(shared_grid(4), 6);
    Rng rng(5);
    for (auto& v : m.labels) {
        v = static_cast<std::uint16_t>(rng.below(6));
    }
    const auto bytes = encode_labels(m);
    CHECK(bytes.size() == 16 + 2 * 64);
    const auto back = decode_labels(bytes);
    CHECK(back.labels == m.labels);
    CHECK(back.num_classes == 6);
    CHECK(encode_labels(back) == bytes);

    auto bad = bytes;
    std::memcpy(bad.data(), "SPHS", 4);
    CHECK(fault_of([&] { decode_labels(bad); }) == FormatFault::bad_magic);
    auto trunc = bytes;
    trunc.pop_back();
    CHECK(fault_of([&] { decode_labels(trunc); }) == FormatFault::truncated);
    auto out_of_range = bytes;
    out_of_range[16] = 9;
    CHECK(fault_of([&] { decode_labels(out_of_range); }) == FormatFault::bad_value);

    const auto path = temp_path("l.sphl");
    write_labels(m, path);
    CHECK(read_labels(path).labels == m.labels);
    std::filesystem::remove(path);
}

TEST_CASE("coefficient dump round trip")
{
    SpectralCoeffs c(Bandlimit(5));
    Rng rng(9);
    for (auto& v : c.coeffs) {
        v = complex(rng.normal(), rng.normal());
    }
    const auto bytes = encode_coeffs(c);
    CHECK(std::string(bytes.data(), 4) == "SPHC");
    const auto back = decode_coeffs(bytes);
    CHECK(back.coeffs == c.coeffs);
    CHECK(encode_coeffs(back) == bytes);
    CHECK(fault_of([&] { decode_signal(bytes); }) == FormatFault::bad_magic);
}
