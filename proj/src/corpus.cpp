#include "frsum/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "frsum/common.hpp"
#include "frsum/rng.hpp"

namespace frsum {

namespace {

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
// Non-ASCII bytes ride along inside word tokens (é, ü, ...).
bool is_word_byte(unsigned char c) { return is_alpha(c) || is_digit(c) || c >= 0x80; }

// Currency signs that glue onto a following digit cluster. Returns the byte
// length of the sign at s[i], or 0.
int currency_sign_len(const std::string& s, std::size_t i) {
    if (s[i] == '$') return 1;
    if (i + 1 < s.size() && static_cast<unsigned char>(s[i]) == 0xC2 &&
        static_cast<unsigned char>(s[i + 1]) == 0xA3)
        return 2;  // £
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
        static_cast<unsigned char>(s[i + 1]) == 0x82 &&
        static_cast<unsigned char>(s[i + 2]) == 0xAC)
        return 3;  // €
    return 0;
}

std::string lowercase_ascii(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

// Consume a word token starting at i: alnum runs with internal hyphen or
// apostrophe, and ,/. separators between digits ("15-year-old", "don't",
// "3,500", "3.14").
std::size_t scan_word(const std::string& s, std::size_t i) {
    std::size_t j = i;
    while (j < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[j]);
        if (is_word_byte(c)) {
            ++j;
            continue;
        }
        const bool separator = (c == '-' || c == '\'' || c == '.' || c == ',');
        if (separator && j > i && j + 1 < s.size()) {
            const unsigned char prev = static_cast<unsigned char>(s[j - 1]);
            const unsigned char next = static_cast<unsigned char>(s[j + 1]);
            const bool word_join = (c == '-' || c == '\'') && is_word_byte(next);
            const bool digit_join = (c == '.' || c == ',') && is_digit(prev) && is_digit(next);
            if (word_join || digit_join) {
                ++j;
                continue;
            }
        }
        break;
    }
    return j;
}

}  // namespace

Vocab::Vocab() {
    id_to_token_ = {"<pad>", "<unk>", "<bos>", "<eos>"};
    for (int i = 0; i < static_cast<int>(id_to_token_.size()); ++i) {
        token_to_id_[id_to_token_[i]] = i;
    }
}

int Vocab::lookup(const std::string& lowercased) const {
    auto it = token_to_id_.find(lowercased);
    return it == token_to_id_.end() ? kUnkId : it->second;
}

int Vocab::lookup_or_add(const std::string& lowercased) {
    auto it = token_to_id_.find(lowercased);
    if (it != token_to_id_.end()) {
        return it->second;
    }
    const int id = static_cast<int>(id_to_token_.size());
    token_to_id_.emplace(lowercased, id);
    id_to_token_.push_back(lowercased);
    return id;
}

bool Vocab::contains(const std::string& lowercased) const {
    return token_to_id_.count(lowercased) > 0;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) {
        throw DataError("vocab id out of range: " + std::to_string(id));
    }
    return id_to_token_[static_cast<std::size_t>(id)];
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
    Vocab v;
    if (tokens.size() < 4 || tokens[kPadId] != "<pad>" || tokens[kUnkId] != "<unk>" ||
        tokens[kBosId] != "<bos>" || tokens[kEosId] != "<eos>") {
        throw IntegrityError("vocab token list lacks the reserved prefix");
    }
    for (std::size_t i = 4; i < tokens.size(); ++i) {
        const int id = v.lookup_or_add(tokens[i]);
        if (id != static_cast<int>(i)) {
            throw IntegrityError("duplicate token in vocab list: " + tokens[i]);
        }
    }
    return v;
}

std::uint64_t Vocab::content_hash() const {
    std::uint64_t h = kFnvOffset;
    for (const std::string& t : id_to_token_) {
        h = fnv1a64(t, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
    }
    return h;
}

std::string normalize_text(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char ch : raw) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(ch);
    }
    return out;
}

Tokenization tokenize(const std::string& normalized, VocabMode mode, Vocab& vocab) {
    Tokenization t;
    std::size_t i = 0;
    while (i < normalized.size()) {
        if (normalized[i] == ' ') {
            ++i;
            continue;
        }
        std::size_t end;
        const int sign = currency_sign_len(normalized, i);
        if (sign > 0 && i + static_cast<std::size_t>(sign) < normalized.size() &&
            is_digit(static_cast<unsigned char>(normalized[i + sign]))) {
            end = scan_word(normalized, i + static_cast<std::size_t>(sign));
        } else if (is_word_byte(static_cast<unsigned char>(normalized[i]))) {
            end = scan_word(normalized, i);
        } else {
            end = i + 1;  // single punctuation mark
        }
        const std::string surface = normalized.substr(i, end - i);
        const std::string key = lowercase_ascii(surface);
        t.tokens.push_back(surface);
        t.ids.push_back(mode == VocabMode::Build ? vocab.lookup_or_add(key) : vocab.lookup(key));
        t.offsets.emplace_back(static_cast<int>(i), static_cast<int>(end));
        const unsigned char first = static_cast<unsigned char>(surface[0]);
        t.cap.push_back(first >= 'A' && first <= 'Z' ? 1 : 0);
        const bool start = t.tokens.size() == 1 ||
                           (t.tokens.size() >= 2 &&
                            (t.tokens[t.tokens.size() - 2] == "." ||
                             t.tokens[t.tokens.size() - 2] == "!" ||
                             t.tokens[t.tokens.size() - 2] == "?"));
        t.sentence_start.push_back(start ? 1 : 0);
        i = end;
    }
    return t;
}

std::string detokenize(const std::vector<int>& ids, const Vocab& vocab) {
    std::string out;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (k > 0) {
            out.push_back(' ');
        }
        out += vocab.token(ids[k]);
    }
    return out;
}

TokenizedPair tokenize_pair(const SummaryPair& pair, VocabMode mode, Vocab& vocab,
                            int max_src_len, int max_tgt_len) {
    TokenizedPair out;
    out.id = pair.id;
    out.src = tokenize(pair.document, mode, vocab);
    out.tgt = tokenize(pair.summary, mode, vocab);

    auto truncate = [](Tokenization& tok, int limit) {
        if (tok.size() > limit) {
            tok.tokens.resize(static_cast<std::size_t>(limit));
            tok.ids.resize(static_cast<std::size_t>(limit));
            tok.offsets.resize(static_cast<std::size_t>(limit));
            tok.cap.resize(static_cast<std::size_t>(limit));
            tok.sentence_start.resize(static_cast<std::size_t>(limit));
        }
    };
    truncate(out.src, max_src_len);
    truncate(out.tgt, max_tgt_len - 2);  // room for BOS/EOS

    out.src_ids = out.src.ids;
    out.tgt_ids.reserve(out.tgt.ids.size() + 2);
    out.tgt_ids.push_back(kBosId);
    out.tgt_ids.insert(out.tgt_ids.end(), out.tgt.ids.begin(), out.tgt.ids.end());
    out.tgt_ids.push_back(kEosId);
    return out;
}

std::pair<int, int> align_span_to_tokens(std::pair<int, int> span,
                                         const std::vector<std::pair<int, int>>& offsets,
                                         int text_len) {
    const auto [b, e] = span;
    if (b < 0 || e > text_len || b >= e) {
        throw DataError("span [" + std::to_string(b) + "," + std::to_string(e) +
                        ") lies outside the text");
    }
    int first = -1;
    int last = -1;
    for (int k = 0; k < static_cast<int>(offsets.size()); ++k) {
        const auto [s, t] = offsets[static_cast<std::size_t>(k)];
        if (t > b && s < e) {
            if (first < 0) {
                first = k;
            }
            last = k;
        }
    }
    if (first < 0) {
        throw DataError("span covers no token (alignment error)");
    }
    return {first, last + 1};
}

std::vector<SummaryPair> load_jsonl(const std::string& path) {
    const std::string blob = read_file(path);
    std::vector<SummaryPair> corpus;
    std::unordered_set<std::string> seen_ids;

    std::istringstream in(blob);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() +
                            ")");
        }
        if (!rec.is_object() || !rec.contains("document") || !rec["document"].is_string() ||
            !rec.contains("summary") || !rec["summary"].is_string()) {
            throw DataError("line " + std::to_string(line_no) +
                            ": expected object with string fields \"document\" and \"summary\"");
        }
        SummaryPair pair;
        pair.id = rec.contains("id") && rec["id"].is_string()
                      ? rec["id"].get<std::string>()
                      : std::to_string(line_no - 1);
        pair.document = normalize_text(rec["document"].get<std::string>());
        pair.summary = normalize_text(rec["summary"].get<std::string>());
        if (pair.document.empty()) {
            throw DataError("record " + pair.id + ": empty document");
        }
        if (pair.summary.empty()) {
            throw DataError("record " + pair.id + ": empty summary");
        }
        if (!seen_ids.insert(pair.id).second) {
            throw DataError("record id not unique: " + pair.id);
        }
        corpus.push_back(std::move(pair));
    }
    return corpus;
}

void save_jsonl(const std::vector<SummaryPair>& corpus, const std::string& path) {
    std::string out;
    for (const SummaryPair& pair : corpus) {
        nlohmann::ordered_json rec;
        rec["id"] = pair.id;
        rec["document"] = pair.document;
        rec["summary"] = pair.summary;
        out += rec.dump();
        out.push_back('\n');
    }
    write_file(path, out);
}

// --------------------------------------------------------------------------
// Synthetic corpus
// --------------------------------------------------------------------------

namespace {

const std::array<const char*, 24> kFirstNames = {
    "Alan",  "Galib", "Mary",    "Lucy", "Omar",  "Priya", "Ethan", "Nadia",
    "Victor", "Wendy", "Hassan",  "Irene", "Jacob", "Keira", "Leon",  "Maya",
    "Noor",  "Oscar", "Petra",   "Quentin", "Rosa", "Samir", "Tara",  "Yusuf"};

const std::array<const char*, 16> kLastNames = {
    "Smith", "Jones", "Ahmed", "Brown",  "Clarke", "Davies", "Evans", "Fischer",
    "Grant", "Hughes", "Iqbal", "Kovacs", "Lewis",  "Murray", "Novak", "Osei"};

const std::array<const char*, 14> kCities = {
    "Aberdeen", "Paris",  "Cardiff", "Glasgow", "Nairobi", "Oslo",   "Lisbon",
    "Madrid",   "Dublin", "Geneva",  "Vienna",  "Krakow",  "Seville", "Porto"};

const std::array<const char*, 10> kOrgs = {
    "Harbor Council",  "Crown Court",      "Northern Bank", "United Assembly",
    "Riverside Trust", "Central Exchange", "Maritime Board", "Highland Union",
    "Civic Forum",     "Summit Group"};

const std::array<const char*, 12> kMonths = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

const std::array<const char*, 10> kDays = {"3",  "5",  "8",  "11", "14",
                                           "17", "21", "24", "26", "28"};
const std::array<const char*, 10> kPoints = {"12", "19", "31", "38", "45",
                                             "52", "67", "74", "88", "93"};
const std::array<const char*, 10> kMinutes = {"15", "25", "35", "40", "55",
                                              "65", "70", "80", "85", "95"};
const std::array<const char*, 10> kYears = {"2",  "4",  "6",  "7",  "9",
                                            "13", "16", "18", "22", "27"};
const std::array<const char*, 10> kMoney = {
    "\xC2\xA3" "1,200", "\xC2\xA3" "3,500", "\xC2\xA3" "7,800", "\xC2\xA3" "2,400",
    "\xC2\xA3" "9,100", "\xC2\xA3" "5,600", "\xC2\xA3" "4,300", "\xC2\xA3" "8,700",
    "\xC2\xA3" "6,200", "\xC2\xA3" "1,900"};

// A numeric pool plus the per-pair bookkeeping for "sample distinct values,
// never colliding with the summarized sentence".
struct PoolDraw {
    std::vector<std::string> pool;
    std::set<std::string> forbidden;  // values in the summarized sentence
    std::set<std::string> used;

    std::string draw(Rng& rng, bool summary_sentence) {
        std::vector<const std::string*> candidates;
        for (const std::string& v : pool) {
            if (!summary_sentence && forbidden.count(v)) {
                continue;
            }
            if (!used.count(v)) {
                candidates.push_back(&v);
            }
        }
        if (candidates.empty()) {
            // pool exhausted: allow reuse among distractors, never of the
            // summary sentence's values
            for (const std::string& v : pool) {
                if (!summary_sentence && forbidden.count(v)) {
                    continue;
                }
                candidates.push_back(&v);
            }
        }
        if (candidates.empty()) {
            throw ConfigError("synthetic pools too small for distinct distractors");
        }
        const std::string v = *candidates[static_cast<std::size_t>(rng.index(candidates.size()))];
        used.insert(v);
        if (summary_sentence) {
            forbidden.insert(v);
        }
        return v;
    }
};

struct SlotValues {
    std::string person_a;
    std::string person_b;
    std::string city;
    std::string org;
    std::string day;
    std::string month;
    std::string points;
    std::string minutes;
    std::string years;
    std::string money;
};

std::string expand(const std::string& tpl, const SlotValues& v) {
    std::string out;
    for (std::size_t i = 0; i < tpl.size();) {
        if (tpl[i] == '{') {
            const std::size_t close = tpl.find('}', i);
            const std::string key = tpl.substr(i + 1, close - i - 1);
            if (key == "A") out += v.person_a;
            else if (key == "B") out += v.person_b;
            else if (key == "C") out += v.city;
            else if (key == "O") out += v.org;
            else if (key == "D") out += v.day;
            else if (key == "M") out += v.month;
            else if (key == "P") out += v.points;
            else if (key == "Mn") out += v.minutes;
            else if (key == "Y") out += v.years;
            else if (key == "$") out += v.money;
            else throw NumericError("unknown template slot: " + key);
            i = close + 1;
        } else {
            out.push_back(tpl[i]);
            ++i;
        }
    }
    return out;
}

struct SentenceTemplate {
    const char* document;
    const char* summary;
    bool uses_b;
    bool uses_city;
    bool uses_org;
    const char* numerics;  // subset of "dmpny$" (day+month, points, minutes, years, money)
};

const std::array<SentenceTemplate, 5> kTemplates = {{
    {"{A} met {B} in {C} on {D} {M}.", "{A} met {B} on {D} {M}.", true, true, false, "dm"},
    {"{O} said {A} scored {P} points in {Mn} minutes.", "{A} scored {P} points for {O}.", false,
     false, true, "pn"},
    {"{A} spent {$} during a visit to {C}.", "{A} spent {$} in {C}.", false, true, false, "$"},
    {"{A} worked for {O} for {Y} years.", "{A} spent {Y} years at {O}.", false, false, true, "y"},
    {"{O} fined {A} {$} on {D} {M}.", "{O} fined {A} {$}.", false, false, true, "dm$"},
}};

std::vector<std::string> person_pool(int n_entities) {
    // deterministic distinct (first, last) pairs; 7 and 5 are coprime to the
    // pool sizes, so pairs stay unique for n < lcm(24, 16)
    std::vector<std::string> pool;
    pool.reserve(static_cast<std::size_t>(n_entities));
    for (int i = 0; i < n_entities; ++i) {
        const std::size_t f = static_cast<std::size_t>((i * 7 + 3) % kFirstNames.size());
        const std::size_t l = static_cast<std::size_t>((i * 5 + 1) % kLastNames.size());
        pool.push_back(std::string(kFirstNames[f]) + " " + kLastNames[l]);
    }
    return pool;
}

template <std::size_t N>
std::vector<std::string> take(const std::array<const char*, N>& source, int n) {
    std::vector<std::string> out;
    const int limit = std::min<int>(n, static_cast<int>(N));
    for (int i = 0; i < limit; ++i) {
        out.emplace_back(source[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace

std::vector<SummaryPair> gen_synthetic_corpus(const SynthConfig& config) {
    if (config.n_pairs < 1) {
        throw ConfigError("gen_synthetic_corpus: n_pairs must be >= 1");
    }
    if (config.n_entities < 4 || config.n_entities > 48) {
        throw ConfigError("gen_synthetic_corpus: n_entities must be in [4, 48]");
    }
    if (config.n_numbers < 2 || config.n_numbers > 10) {
        throw ConfigError("gen_synthetic_corpus: n_numbers must be in [2, 10]");
    }

    const std::vector<std::string> persons = person_pool(config.n_entities);
    std::vector<SummaryPair> corpus;
    corpus.reserve(static_cast<std::size_t>(config.n_pairs));

    for (int pi = 0; pi < config.n_pairs; ++pi) {
        Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(pi), 0x5eedc0de}));

        PoolDraw people{persons, {}, {}};
        PoolDraw cities{take(kCities, 14), {}, {}};
        PoolDraw orgs{take(kOrgs, 10), {}, {}};
        PoolDraw months{take(kMonths, 12), {}, {}};
        PoolDraw days{take(kDays, config.n_numbers), {}, {}};
        PoolDraw points{take(kPoints, config.n_numbers), {}, {}};
        PoolDraw minutes{take(kMinutes, config.n_numbers), {}, {}};
        PoolDraw years{take(kYears, config.n_numbers), {}, {}};
        PoolDraw money{take(kMoney, config.n_numbers), {}, {}};

        const int n_sentences = 3 + rng.index(4);
        const int summarized = rng.index(n_sentences);

        std::vector<int> template_ids(static_cast<std::size_t>(n_sentences));
        for (int& tid : template_ids) {
            tid = rng.index(kTemplates.size());
        }

        // The summarized sentence draws first so its values can be barred
        // from every distractor sentence.
        std::vector<int> order(static_cast<std::size_t>(n_sentences));
        std::iota(order.begin(), order.end(), 0);
        std::stable_partition(order.begin(), order.end(),
                              [&](int s) { return s == summarized; });

        std::vector<std::string> sentences(static_cast<std::size_t>(n_sentences));
        std::string summary;
        for (int s : order) {
            const SentenceTemplate& tpl = kTemplates[static_cast<std::size_t>(
                template_ids[static_cast<std::size_t>(s)])];
            const bool is_summary = s == summarized;
            SlotValues v;
            v.person_a = people.draw(rng, is_summary);
            if (tpl.uses_b) v.person_b = people.draw(rng, is_summary);
            if (tpl.uses_city) v.city = cities.draw(rng, is_summary);
            if (tpl.uses_org) v.org = orgs.draw(rng, is_summary);
            for (const char* c = tpl.numerics; *c; ++c) {
                switch (*c) {
                    case 'd': v.day = days.draw(rng, is_summary); break;
                    case 'm': v.month = months.draw(rng, is_summary); break;
                    case 'p': v.points = points.draw(rng, is_summary); break;
                    case 'n': v.minutes = minutes.draw(rng, is_summary); break;
                    case 'y': v.years = years.draw(rng, is_summary); break;
                    case '$': v.money = money.draw(rng, is_summary); break;
                    default: break;
                }
            }
            sentences[static_cast<std::size_t>(s)] = expand(tpl.document, v);
            if (is_summary) {
                summary = expand(tpl.summary, v);
            }
        }

        SummaryPair pair;
        pair.id = std::to_string(pi);
        std::string doc;
        for (int s = 0; s < n_sentences; ++s) {
            if (s > 0) {
                doc.push_back(' ');
            }
            doc += sentences[static_cast<std::size_t>(s)];
        }
        pair.document = normalize_text(doc);
        pair.summary = normalize_text(summary);
        corpus.push_back(std::move(pair));
    }
    return corpus;
}

}  // namespace frsum
