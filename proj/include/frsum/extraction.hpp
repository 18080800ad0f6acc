#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frsum/corpus.hpp"

namespace frsum {

enum class SpanKind { Entity, Number };
enum class SpanHost { Document, Summary };

const char* to_string(SpanKind kind);

// An entity or number span over a tokenized host text. token range is
// [begin, end) into the host's content tokens.
struct FactualSpan {
    SpanKind kind = SpanKind::Entity;
    SpanHost host = SpanHost::Summary;
    int begin = 0;
    int end = 0;
    std::string surface;  // space-joined original-case tokens

    int length() const { return end - begin; }
};

// Decoder conditioning context for a summary span: BOS plus the summary token
// ids strictly before the span.
struct FactualPrompt {
    std::vector<int> ids;
};

// One adversarial candidate, length-normalized against its target: truncated
// to the target length or padded with PAD. real_len counts the non-pad ids.
struct AdvMember {
    FactualSpan span;
    std::vector<int> norm_ids;
    int real_len = 0;
};

struct AdversarialSet {
    FactualSpan target;
    std::vector<AdvMember> members;
};

// Maximal runs of digit-bearing tokens, merged with adjacent month/unit words
// from a fixed lexicon (january..december, %, years, points, minutes).
std::vector<FactualSpan> extract_numbers(const Tokenization& tok, SpanHost host);

// Maximal runs of capitalized tokens, excluding digit-bearing tokens and
// tokens claimed by number spans. A run that is a single sentence-initial
// stoplisted word is dropped ("Police said ..." yields nothing for "Police").
std::vector<FactualSpan> extract_entities(const Tokenization& tok, SpanHost host);

// Numbers and entities together, ordered by token position. The two sets are
// disjoint by construction.
std::vector<FactualSpan> extract_spans(const Tokenization& tok, SpanHost host);

FactualPrompt factual_prompt(const TokenizedPair& pair, const FactualSpan& summary_span);

// Filter document spans to the target's kind, drop surface-equal candidates
// (case-insensitive) and duplicates, sample up to `cap` without replacement,
// and length-normalize every survivor. An empty result is legal.
AdversarialSet build_adversarial_set(const std::vector<FactualSpan>& doc_spans,
                                     const FactualSpan& target, const Tokenization& doc_tok,
                                     int cap, std::uint64_t seed);

bool is_digit_bearing(const std::string& token);
bool in_number_lexicon(const std::string& lowercased);
bool in_entity_stoplist(const std::string& lowercased);

}  // namespace frsum
