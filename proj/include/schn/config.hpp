#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace schn {

/// Ordered `key = value` entries. Text form: one entry per line, `#` starts a
/// comment, keys use dotted sections (`model.levels = 3`).
class ConfigText {
public:
    /// Throws ConfigError naming the line for malformed input or a repeated key.
    static ConfigText parse(std::string_view text);

    std::string format() const;

    /// Inserts or replaces, keeping the original position of existing keys.
    void set(const std::string& key, const std::string& value);
    const std::string* find(const std::string& key) const;
    bool contains(const std::string& key) const { return find(key) != nullptr; }
    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Strict value parsers; each throws ConfigError naming the key.
long long parse_int(const std::string& key, const std::string& value);
std::uint64_t parse_u64(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
std::vector<int> parse_int_list(const std::string& key, const std::string& value);

/// Shortest text that parses back to exactly the same double.
std::string format_double(double v);

} // namespace schn
