#include "frsum/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "frsum/common.hpp"
#include "frsum/rng.hpp"

namespace frsum {

namespace {

std::string lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

const std::unordered_set<std::string>& number_lexicon() {
    static const std::unordered_set<std::string> lex = {
        "january", "february", "march",     "april",   "may",      "june",
        "july",    "august",   "september", "october", "november", "december",
        "%",       "years",    "points",    "minutes"};
    return lex;
}

// ~200 function words and generic capitalized-sentence openers. Single
// sentence-initial tokens from this list never become entities on their own.
const std::unordered_set<std::string>& entity_stoplist() {
    static const std::unordered_set<std::string> stop = {
        // determiners, quantifiers
        "the", "a", "an", "this", "that", "these", "those", "some", "any", "each",
        "every", "no", "another", "other", "both", "all", "most", "many", "much",
        "few", "several", "such", "either", "neither", "its", "his", "her",
        "their", "our", "your", "my",
        // pronouns
        "i", "you", "he", "she", "it", "we", "they", "them", "him", "us", "me",
        "who", "whom", "whose", "which", "what", "where", "when", "why", "how",
        "there", "here", "one", "ones", "something", "anything", "nothing",
        "everything", "someone", "anyone", "everyone", "nobody",
        // conjunctions, prepositions
        "and", "or", "but", "nor", "so", "yet", "if", "as", "because",
        "although", "though", "while", "after", "before", "since", "until",
        "unless", "about", "above", "across", "against", "along", "among",
        "around", "at", "behind", "below", "beneath", "beside", "between",
        "beyond", "by", "despite", "down", "during", "except", "for", "from",
        "in", "inside", "into", "near", "of", "off", "on", "onto", "out",
        "outside", "over", "past", "through", "throughout", "to", "toward",
        "towards", "under", "up", "upon", "with", "within", "without",
        // auxiliaries and reporting verbs
        "is", "am", "are", "was", "were", "be", "been", "being", "have", "has",
        "had", "having", "do", "does", "did", "will", "would", "shall",
        "should", "can", "could", "may", "might", "must", "say", "says", "said",
        "saying", "according", "told", "added", "asked", "reported", "speaking",
        "announced", "described", "called", "made", "make", "get", "got",
        "goes", "went", "come", "came", "take", "took", "see", "saw", "know",
        "knew", "think", "thought",
        // adverbs, time words
        "not", "now", "then", "also", "just", "only", "even", "still", "again",
        "once", "twice", "very", "too", "more", "less", "least", "last",
        "first", "second", "third", "next", "new", "old", "early", "late",
        "earlier", "later", "today", "yesterday", "tomorrow", "meanwhile",
        "however", "moreover", "further", "instead", "indeed", "perhaps",
        "maybe", "almost", "already", "soon", "often", "never", "always",
        // generic capitalized openers in news copy
        "police", "officials", "government", "ministers", "people", "officers",
        "authorities", "residents", "experts", "critics", "campaigners",
        "prosecutors", "detectives", "organisers", "doctors", "lawyers",
        "judges", "researchers", "scientists", "witnesses", "neighbours",
        "protesters", "staff", "members", "leaders", "voters"};
    return stop;
}

std::string join_surface(const Tokenization& tok, int begin, int end) {
    std::string out;
    for (int k = begin; k < end; ++k) {
        if (k > begin) {
            out.push_back(' ');
        }
        out += tok.tokens[static_cast<std::size_t>(k)];
    }
    return out;
}

}  // namespace

const char* to_string(SpanKind kind) {
    return kind == SpanKind::Entity ? "entity" : "number";
}

bool is_digit_bearing(const std::string& token) {
    return std::any_of(token.begin(), token.end(),
                       [](unsigned char c) { return c >= '0' && c <= '9'; });
}

bool in_number_lexicon(const std::string& lowercased) {
    return number_lexicon().count(lowercased) > 0;
}

bool in_entity_stoplist(const std::string& lowercased) {
    return entity_stoplist().count(lowercased) > 0;
}

std::vector<FactualSpan> extract_numbers(const Tokenization& tok, SpanHost host) {
    std::vector<FactualSpan> spans;
    const int n = tok.size();
    int i = 0;
    while (i < n) {
        const std::string& t = tok.tokens[static_cast<std::size_t>(i)];
        const bool member = is_digit_bearing(t) || in_number_lexicon(lower(t));
        if (!member) {
            ++i;
            continue;
        }
        int j = i;
        bool has_digit = false;
        while (j < n) {
            const std::string& u = tok.tokens[static_cast<std::size_t>(j)];
            if (is_digit_bearing(u)) {
                has_digit = true;
                ++j;
            } else if (in_number_lexicon(lower(u))) {
                ++j;
            } else {
                break;
            }
        }
        if (has_digit) {
            spans.push_back({SpanKind::Number, host, i, j, join_surface(tok, i, j)});
        }
        i = j;
    }
    return spans;
}

std::vector<FactualSpan> extract_entities(const Tokenization& tok, SpanHost host) {
    const int n = tok.size();
    std::vector<char> claimed(static_cast<std::size_t>(n), 0);
    for (const FactualSpan& num : extract_numbers(tok, host)) {
        for (int k = num.begin; k < num.end; ++k) {
            claimed[static_cast<std::size_t>(k)] = 1;
        }
    }

    std::vector<FactualSpan> spans;
    int i = 0;
    while (i < n) {
        const bool eligible = tok.cap[static_cast<std::size_t>(i)] &&
                              !is_digit_bearing(tok.tokens[static_cast<std::size_t>(i)]) &&
                              !claimed[static_cast<std::size_t>(i)];
        if (!eligible) {
            ++i;
            continue;
        }
        int j = i;
        while (j < n && tok.cap[static_cast<std::size_t>(j)] &&
               !is_digit_bearing(tok.tokens[static_cast<std::size_t>(j)]) &&
               !claimed[static_cast<std::size_t>(j)]) {
            ++j;
        }
        const bool lone_opener =
            (j - i == 1) && tok.sentence_start[static_cast<std::size_t>(i)] &&
            in_entity_stoplist(lower(tok.tokens[static_cast<std::size_t>(i)]));
        if (!lone_opener) {
            spans.push_back({SpanKind::Entity, host, i, j, join_surface(tok, i, j)});
        }
        i = j;
    }
    return spans;
}

std::vector<FactualSpan> extract_spans(const Tokenization& tok, SpanHost host) {
    std::vector<FactualSpan> spans = extract_numbers(tok, host);
    std::vector<FactualSpan> entities = extract_entities(tok, host);
    spans.insert(spans.end(), entities.begin(), entities.end());
    std::sort(spans.begin(), spans.end(),
              [](const FactualSpan& a, const FactualSpan& b) { return a.begin < b.begin; });
    return spans;
}

FactualPrompt factual_prompt(const TokenizedPair& pair, const FactualSpan& summary_span) {
    if (summary_span.host != SpanHost::Summary) {
        throw DataError("factual prompt requested for a non-summary span");
    }
    if (summary_span.begin < 0 || summary_span.end > pair.tgt.size() ||
        summary_span.begin >= summary_span.end) {
        throw DataError("summary span out of range for pair " + pair.id);
    }
    FactualPrompt prompt;
    prompt.ids.reserve(static_cast<std::size_t>(summary_span.begin) + 1);
    prompt.ids.push_back(kBosId);
    prompt.ids.insert(prompt.ids.end(), pair.tgt.ids.begin(),
                      pair.tgt.ids.begin() + summary_span.begin);
    return prompt;
}

AdversarialSet build_adversarial_set(const std::vector<FactualSpan>& doc_spans,
                                     const FactualSpan& target, const Tokenization& doc_tok,
                                     int cap, std::uint64_t seed) {
    if (cap < 1) {
        throw ConfigError("adversarial set cap must be >= 1");
    }
    const std::string target_key = lower(target.surface);

    std::vector<const FactualSpan*> candidates;
    std::unordered_set<std::string> seen;
    for (const FactualSpan& sp : doc_spans) {
        if (sp.kind != target.kind) {
            continue;
        }
        const std::string key = lower(sp.surface);
        if (key == target_key) {
            continue;
        }
        if (!seen.insert(key).second) {
            continue;  // deduplicate by surface
        }
        candidates.push_back(&sp);
    }

    std::vector<const FactualSpan*> chosen;
    if (static_cast<int>(candidates.size()) > cap) {
        Rng rng(seed);
        for (int idx : rng.sample_indices(candidates.size(), static_cast<std::size_t>(cap))) {
            chosen.push_back(candidates[static_cast<std::size_t>(idx)]);
        }
    } else {
        chosen = candidates;
    }

    AdversarialSet set;
    set.target = target;
    const int norm_len = target.length();
    for (const FactualSpan* sp : chosen) {
        AdvMember member;
        member.span = *sp;
        member.real_len = std::min(sp->length(), norm_len);
        member.norm_ids.reserve(static_cast<std::size_t>(norm_len));
        for (int k = 0; k < member.real_len; ++k) {
            member.norm_ids.push_back(doc_tok.ids[static_cast<std::size_t>(sp->begin + k)]);
        }
        member.norm_ids.resize(static_cast<std::size_t>(norm_len), kPadId);
        set.members.push_back(std::move(member));
    }
    return set;
}

}  // namespace frsum
