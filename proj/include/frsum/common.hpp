#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace frsum {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint corruption, manifest/blob mismatch, vocab-hash mismatch.
struct IntegrityError : DataError {
    using DataError::DataError;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit. Used for content hashes embedded in artifacts (corpus hash,
// checkpoint hash, vocab hash). Stable across platforms.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

// "fnv64:<16 hex digits>"
std::string hash_tag(std::uint64_t value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
std::uint64_t hash_file(const std::string& path);

// Shortest round-trip decimal rendering of a double ("17" -> "17",
// "0.30000000000000004" stays exact). Used everywhere a float enters an
// artifact so that reruns are byte-identical.
std::string format_double(double v);

}  // namespace frsum
