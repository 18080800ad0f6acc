#include "frsum/common.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace frsum {

std::string to_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf);
}

std::string hash_tag(std::uint64_t value) {
    return "fnv64:" + to_hex(value);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file for reading: " + path);
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open file for writing: " + path);
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw DataError("short write: " + path);
    }
}

std::uint64_t hash_file(const std::string& path) {
    return fnv1a64(read_file(path));
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw NumericError("double formatting failed");
    }
    return std::string(buf, ptr);
}

}  // namespace frsum
