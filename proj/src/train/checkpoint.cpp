#include "schn/train/checkpoint.hpp"

#include "schn/binary.hpp"
#include "schn/error.hpp"

#include <cmath>
#include <limits>

namespace schn::train {

namespace {

constexpr std::uint8_t kMaxRank = 8;

std::size_t element_size(TensorType t)
{
    return t == TensorType::f32 ? 4 : 8;
}

} // namespace

std::uint64_t NamedTensor::element_count() const
{
    std::uint64_t n = 1;
    for (auto d : dims) {
        n *= d;
    }
    return n;
}

const NamedTensor* Checkpoint::find(const std::string& name) const
{
    for (const auto& t : tensors) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

std::vector<char> encode_checkpoint(const Checkpoint& c)
{
    binary::Writer w;
    w.bytes("SCHN");
    w.u32(Checkpoint::kVersion);
    const std::string text = c.config.format();
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.bytes(text);
    w.u32(static_cast<std::uint32_t>(c.tensors.size()));
    for (const auto& t : c.tensors) {
        if (t.name.empty() || t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw ConfigError("checkpoint tensor name must have 1..65535 bytes");
        }
        if (t.dims.size() > kMaxRank) {
            throw ConfigError("checkpoint tensor " + t.name + " has rank above 8");
        }
        const std::uint64_t n = t.element_count();
        const std::size_t have = t.type == TensorType::u64 ? t.words.size() : t.values.size();
        if (have != n) {
            throw ShapeError("checkpoint tensor " + t.name + ": payload size does not match its dimensions");
        }
        w.u16(static_cast<std::uint16_t>(t.name.size()));
        w.bytes(t.name);
        w.u8(static_cast<std::uint8_t>(t.type));
        w.u8(static_cast<std::uint8_t>(t.dims.size()));
        for (auto d : t.dims) {
            w.u64(d);
        }
        switch (t.type) {
        case TensorType::f32:
            for (double v : t.values) {
                w.f32(static_cast<float>(v));
            }
            break;
        case TensorType::f64:
            for (double v : t.values) {
                w.f64(v);
            }
            break;
        case TensorType::u64:
            for (auto v : t.words) {
                w.u64(v);
            }
            break;
        }
    }
    return w.take();
}

Checkpoint decode_checkpoint(std::span<const char> bytes, const std::string& context)
{
    binary::Reader r(bytes, context);
    if (r.bytes(4) != "SCHN") {
        throw FormatError(FormatFault::bad_magic, context + ": bad magic (expected SCHN)");
    }
    const std::uint32_t version = r.u32();
    if (version != Checkpoint::kVersion) {
        throw FormatError(FormatFault::version_mismatch, context + ": unsupported version " + std::to_string(version));
    }
    Checkpoint c;
    const std::uint32_t text_len = r.u32();
    r.need(text_len);
    try {
        c.config = ConfigText::parse(r.bytes(text_len));
    } catch (const ConfigError& e) {
        throw FormatError(FormatFault::bad_value, context + ": malformed config block: " + e.what());
    }
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const std::uint16_t name_len = r.u16();
        if (name_len == 0) {
            throw FormatError(FormatFault::bad_value, context + ": empty tensor name");
        }
        t.name = r.bytes(name_len);
        const std::uint8_t type = r.u8();
        if (type > 2) {
            throw FormatError(FormatFault::bad_value, context + ": tensor " + t.name + " has unknown dtype " +
                                                          std::to_string(type));
        }
        t.type = static_cast<TensorType>(type);
        const std::uint8_t rank = r.u8();
        if (rank > kMaxRank) {
            throw FormatError(FormatFault::dimension_overflow, context + ": tensor " + t.name + " rank too large");
        }
        std::uint64_t n = 1;
        for (std::uint8_t k = 0; k < rank; ++k) {
            const std::uint64_t d = r.u64();
            if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
                throw FormatError(FormatFault::dimension_overflow, context + ": tensor " + t.name + " too large");
            }
            n *= d;
            t.dims.push_back(d);
        }
        if (n > r.remaining() / element_size(t.type)) {
            if (n > (std::uint64_t(1) << 40)) {
                throw FormatError(FormatFault::dimension_overflow, context + ": tensor " + t.name + " too large");
            }
            r.need(static_cast<std::size_t>(n * element_size(t.type)));
        }
        if (t.type == TensorType::u64) {
            t.words.resize(static_cast<std::size_t>(n));
            for (auto& v : t.words) {
                v = r.u64();
            }
        } else {
            t.values.resize(static_cast<std::size_t>(n));
            for (auto& v : t.values) {
                v = t.type == TensorType::f32 ? static_cast<double>(r.f32()) : r.f64();
                if (!std::isfinite(v)) {
                    throw FormatError(FormatFault::bad_value, context + ": tensor " + t.name + " holds a non-finite value");
                }
            }
        }
        if (c.find(t.name)) {
            throw FormatError(FormatFault::bad_value, context + ": duplicate tensor " + t.name);
        }
        c.tensors.push_back(std::move(t));
    }
    if (r.remaining() != 0) {
        throw FormatError(FormatFault::shape_mismatch, context + ": " + std::to_string(r.remaining()) +
                                                           " trailing bytes");
    }
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c)
{
    binary::write_file(path, encode_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    return decode_checkpoint(binary::read_file(path), path.string());
}

} // namespace schn::train
