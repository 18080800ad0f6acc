#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace frsum {

// Reserved vocabulary ids. PAD is never produced by tokenizing text; it only
// appears as filler when adversarial members are length-normalized.
constexpr int kPadId = 0;
constexpr int kUnkId = 1;
constexpr int kBosId = 2;
constexpr int kEosId = 3;

struct SummaryPair {
    std::string id;
    std::string document;  // whitespace-normalized
    std::string summary;   // whitespace-normalized
};

class Vocab {
public:
    Vocab();

    // Lookup in frozen mode: unknown tokens map to UNK.
    int lookup(const std::string& lowercased) const;
    // Lookup in build mode: unknown tokens get the next free id.
    int lookup_or_add(const std::string& lowercased);

    bool contains(const std::string& lowercased) const;
    int size() const { return static_cast<int>(id_to_token_.size()); }
    const std::string& token(int id) const;
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    // Rebuild from a saved token list (checkpoint manifests embed this).
    static Vocab from_tokens(const std::vector<std::string>& tokens);

    // Hash over the id-ordered token list; pinned into checkpoints so a model
    // can never be scored against the wrong vocabulary.
    std::uint64_t content_hash() const;

private:
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// One tokenized text with everything downstream consumers need: ids for the
// model, byte offsets for span alignment, capitalization and sentence-start
// flags for the extractor.
struct Tokenization {
    std::vector<std::string> tokens;            // original-case surfaces
    std::vector<int> ids;                       // vocab ids of lowercased tokens
    std::vector<std::pair<int, int>> offsets;   // [start, end) byte offsets
    std::vector<std::uint8_t> cap;              // first char was uppercase
    std::vector<std::uint8_t> sentence_start;   // first token or follows . ! ?

    int size() const { return static_cast<int>(tokens.size()); }
};

struct TokenizedPair {
    std::string id;
    Tokenization src;        // truncated to max_src_len tokens
    Tokenization tgt;        // content tokens only
    std::vector<int> src_ids;
    std::vector<int> tgt_ids;  // BOS + content ids + EOS
};

enum class VocabMode { Build, Frozen };

// Collapse whitespace runs to single spaces and trim. Input is assumed
// NFC-composed; bytes beyond ASCII pass through untouched.
std::string normalize_text(const std::string& raw);

// Tokenize normalized text. Token classes: words (alnum runs with internal
// hyphen/apostrophe, and ./,-separators between digits), currency-led number
// units ("£3,500"), and single punctuation marks. Lowercased for vocab
// lookup; original capitalization retained in flags.
Tokenization tokenize(const std::string& normalized, VocabMode mode, Vocab& vocab);

// Space-joined token stream; UNK-mapped tokens keep their original surface in
// Tokenization, so this renders ids through the vocab only.
std::string detokenize(const std::vector<int>& ids, const Vocab& vocab);

constexpr int kDefaultMaxSrcLen = 512;
constexpr int kDefaultMaxTgtLen = 128;

TokenizedPair tokenize_pair(const SummaryPair& pair, VocabMode mode, Vocab& vocab,
                            int max_src_len = kDefaultMaxSrcLen,
                            int max_tgt_len = kDefaultMaxTgtLen);

// Smallest token window [i, j) covering the byte span [byte_start, byte_end).
// Throws DataError if the span lies outside the text or covers no token.
std::pair<int, int> align_span_to_tokens(std::pair<int, int> span,
                                         const std::vector<std::pair<int, int>>& offsets,
                                         int text_len);

std::vector<SummaryPair> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<SummaryPair>& corpus, const std::string& path);

struct SynthConfig {
    int n_pairs = 500;
    int n_entities = 40;  // person-name pool size
    int n_numbers = 10;   // per-category numeric pool size
    std::uint64_t seed = 7;
};

// Deterministic template-based corpus. Every summary restates one document
// sentence and carries at least one entity span and one number span, and the
// document always offers same-kind distractors for each of them.
std::vector<SummaryPair> gen_synthetic_corpus(const SynthConfig& config);

}  // namespace frsum
