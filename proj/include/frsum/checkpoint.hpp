#pragma once

#include <string>

#include <json.hpp>

#include "frsum/corpus.hpp"
#include "frsum/model.hpp"

namespace frsum {

// Single-file container: 8-byte magic, u64 little-endian manifest length, the
// JSON manifest, then raw row-major little-endian blobs (float32 or float64
// to match the model's float mode). Round-trips bit-exactly.
struct Checkpoint {
    ModelParams params;
    Vocab vocab;
    bool has_optimizer = false;
    AdamState opt;
    nlohmann::ordered_json train_meta;  // epochs_completed, strategy, config echo
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// strict verifies the embedded vocab against the manifest's vocab_hash.
Checkpoint load_checkpoint(const std::string& path, bool strict = true);

}  // namespace frsum
