#include "schn/config.hpp"

#include "schn/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace schn {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view key)
{
    if (key.empty()) {
        return false;
    }
    for (char c : key) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                        c == '.' || c == '-';
        if (!ok) {
            return false;
        }
    }
    return true;
}

template <class T>
T parse_number(const std::string& key, const std::string& value, const char* what)
{
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto res = std::from_chars(first, last, out);
    if (value.empty() || res.ec != std::errc{} || res.ptr != last) {
        throw ConfigError(key + ": expected " + what + ", got '" + value + "'");
    }
    return out;
}

} // namespace

ConfigText ConfigText::parse(std::string_view text)
{
    ConfigText out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (!valid_key(key)) {
            throw ConfigError("config line " + std::to_string(line_no) + ": invalid key '" + key + "'");
        }
        if (out.contains(key)) {
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        out.entries_.emplace_back(key, value);
    }
    return out;
}

std::string ConfigText::format() const
{
    std::string s;
    for (const auto& [k, v] : entries_) {
        s += k + " = " + v + "\n";
    }
    return s;
}

void ConfigText::set(const std::string& key, const std::string& value)
{
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

const std::string* ConfigText::find(const std::string& key) const
{
    for (const auto& [k, v] : entries_) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

long long parse_int(const std::string& key, const std::string& value)
{
    return parse_number<long long>(key, value, "an integer");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value)
{
    return parse_number<std::uint64_t>(key, value, "an unsigned integer");
}

double parse_double(const std::string& key, const std::string& value)
{
    const double v = parse_number<double>(key, value, "a number");
    if (!std::isfinite(v)) {
        throw ConfigError(key + ": value must be finite");
    }
    return v;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value)
{
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(static_cast<int>(parse_int(key, std::string(trim(item)))));
    }
    if (out.empty()) {
        throw ConfigError(key + ": expected a comma-separated list");
    }
    return out;
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace schn
