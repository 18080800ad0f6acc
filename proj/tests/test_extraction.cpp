#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "frsum/corpus.hpp"
#include "frsum/extraction.hpp"
#include "frsum/rng.hpp"
#include "test_support.hpp"

using namespace frsum;

namespace {

Tokenization tok(const std::string& text, Vocab& v) {
    return tokenize(normalize_text(text), VocabMode::Build, v);
}

std::vector<std::string> surfaces(const std::vector<FactualSpan>& spans) {
    std::vector<std::string> out;
    for (const auto& s : spans) {
        out.push_back(s.surface);
    }
    return out;
}

}  // namespace

TEST_CASE("number extraction joins months and unit words") {
    Vocab v;
    CHECK(surfaces(extract_numbers(tok("charged on 14 March", v), SpanHost::Summary)) ==
          std::vector<std::string>{"14 March"});
    CHECK(surfaces(extract_numbers(tok("Alan spent \xC2\xA3"
                                       "3,500.",
                                       v),
                                   SpanHost::Summary)) ==
          std::vector<std::string>{"\xC2\xA3"
                                   "3,500"});
    CHECK(extract_numbers(tok("no digits here", v), SpanHost::Summary).empty());
    CHECK(surfaces(extract_numbers(tok("won 52 points in 25 minutes", v), SpanHost::Summary)) ==
          std::vector<std::string>{"52 points", "25 minutes"});
    // unit words alone never form a number span
    CHECK(extract_numbers(tok("for years and years", v), SpanHost::Summary).empty());
}

TEST_CASE("entity extraction follows capitalization runs") {
    Vocab v;
    CHECK(surfaces(extract_entities(tok("Police said Alan Smith left", v), SpanHost::Summary)) ==
          std::vector<std::string>{"Alan Smith"});
    CHECK(surfaces(extract_entities(tok("Aberdeen Sheriff Court is busy", v),
                                    SpanHost::Summary)) ==
          std::vector<std::string>{"Aberdeen Sheriff Court"});
    CHECK(extract_entities(tok("the 15-year-old boy", v), SpanHost::Summary).empty());
    // stoplisted word mid-sentence still breaks nothing: lowercase anyway
    CHECK(surfaces(extract_entities(tok("He met Mary Jones in Paris", v), SpanHost::Summary)) ==
          std::vector<std::string>{"Mary Jones", "Paris"});
    // digit-bearing tokens never join an entity run
    CHECK(surfaces(extract_entities(tok("Flight 370 left Kuala Lumpur", v), SpanHost::Summary)) ==
          std::vector<std::string>{"Flight", "Kuala Lumpur"});
}

TEST_CASE("entity and number spans are disjoint") {
    Vocab v;
    const Tokenization t = tok("Lucy visited Paris on 14 March and scored 99 points", v);
    const auto spans = extract_spans(t, SpanHost::Summary);
    std::set<int> seen;
    for (const auto& sp : spans) {
        for (int k = sp.begin; k < sp.end; ++k) {
            CHECK(seen.insert(k).second);
        }
    }
    // "March" belongs to the number span, never to an entity
    for (const auto& sp : spans) {
        if (sp.kind == SpanKind::Entity) {
            CHECK(sp.surface.find("March") == std::string::npos);
        }
    }
}

TEST_CASE("extraction is deterministic") {
    Vocab v1, v2;
    const std::string text = "Crown Court fined Omar Clarke \xC2\xA3"
                             "2,400 on 21 June.";
    const auto a = extract_spans(tok(text, v1), SpanHost::Document);
    const auto b = extract_spans(tok(text, v2), SpanHost::Document);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].surface == b[i].surface);
        CHECK(a[i].begin == b[i].begin);
        CHECK(a[i].kind == b[i].kind);
    }
}

TEST_CASE("factual prompt is the summary prefix before the span") {
    Vocab v;
    SummaryPair pair{"p", "Galib met Alan in Paris.", "Alan visited Paris."};
    const TokenizedPair tp = tokenize_pair(pair, VocabMode::Build, v);
    const auto spans = extract_spans(tp.tgt, SpanHost::Summary);
    REQUIRE(!spans.empty());
    const FactualSpan& paris = spans.back().surface == "Paris" ? spans.back() : spans.front();
    const FactualPrompt prompt = factual_prompt(tp, paris);
    REQUIRE(prompt.ids.size() == static_cast<std::size_t>(paris.begin) + 1);
    CHECK(prompt.ids.front() == kBosId);
    for (int i = 0; i < paris.begin; ++i) {
        CHECK(prompt.ids[static_cast<std::size_t>(i) + 1] ==
              tp.tgt.ids[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("adversarial sets filter, dedupe, and length-normalize") {
    Vocab v;
    SummaryPair pair{"p",
                     "Galib spoke in Paris. Alan Smith was there. Galib left on 14 March.",
                     "Alan met Galib."};
    const TokenizedPair tp = tokenize_pair(pair, VocabMode::Build, v);
    const auto doc_spans = extract_spans(tp.src, SpanHost::Document);
    const auto summary_spans = extract_spans(tp.tgt, SpanHost::Summary);

    const FactualSpan* alan = nullptr;
    for (const auto& sp : summary_spans) {
        if (sp.surface == "Alan") {
            alan = &sp;
        }
    }
    REQUIRE(alan != nullptr);

    SUBCASE("same-surface spans are excluded, Galib is a legitimate adversary") {
        // doc has Galib twice (deduped), Paris, and "Alan Smith" (different surface)
        const AdversarialSet adv = build_adversarial_set(doc_spans, *alan, tp.src, 10, 1);
        REQUIRE(!adv.members.empty());
        std::set<std::string> got;
        for (const auto& m : adv.members) {
            CHECK(m.span.kind == SpanKind::Entity);
            CHECK(m.norm_ids.size() == static_cast<std::size_t>(alan->length()));
            got.insert(m.span.surface);
        }
        CHECK(got.count("Galib") == 1);
        CHECK(got.count("Alan") == 0);
        CHECK(got.size() == adv.members.size());  // dedupe by surface
    }

    SUBCASE("short members are padded with PAD") {
        const FactualSpan* alan_smith = nullptr;
        for (const auto& sp : doc_spans) {
            if (sp.surface == "Alan Smith") {
                alan_smith = &sp;
            }
        }
        REQUIRE(alan_smith != nullptr);
        // target of length 2: use the document span as a pseudo-target host
        FactualSpan target = *alan;
        target.host = SpanHost::Summary;
        // member "Galib" (1 token) normalized against "Alan Smith" needs a
        // 2-token target; attack the doc span via a manual target
        FactualSpan two_tok = *alan_smith;
        two_tok.host = SpanHost::Summary;
        const AdversarialSet adv = build_adversarial_set(doc_spans, two_tok, tp.src, 10, 1);
        bool saw_padded = false;
        for (const auto& m : adv.members) {
            REQUIRE(m.norm_ids.size() == 2);
            if (m.real_len == 1) {
                saw_padded = true;
                CHECK(m.norm_ids[1] == kPadId);
            }
        }
        CHECK(saw_padded);
    }
}

TEST_CASE("adversarial sampling respects the cap deterministically") {
    Vocab v;
    std::string doc;
    const char* names[] = {"Alpha", "Bravo", "Delta", "Echo", "Foxtrot", "Golf", "Hotel",
                           "India", "Juliett", "Kilo", "Lima", "Mike", "Oscar", "Papa",
                           "Quebec"};
    for (const char* n : names) {
        doc += std::string(n) + " spoke. ";
    }
    SummaryPair pair{"p", doc, "Zulu spoke."};
    const TokenizedPair tp = tokenize_pair(pair, VocabMode::Build, v);
    const auto doc_spans = extract_spans(tp.src, SpanHost::Document);
    const auto summary_spans = extract_spans(tp.tgt, SpanHost::Summary);
    REQUIRE(doc_spans.size() == 15);
    REQUIRE(summary_spans.size() == 1);

    const AdversarialSet a =
        build_adversarial_set(doc_spans, summary_spans[0], tp.src, 10, 42);
    const AdversarialSet b =
        build_adversarial_set(doc_spans, summary_spans[0], tp.src, 10, 42);
    REQUIRE(a.members.size() == 10);
    for (std::size_t i = 0; i < a.members.size(); ++i) {
        CHECK(a.members[i].span.surface == b.members[i].span.surface);
    }
    const AdversarialSet c =
        build_adversarial_set(doc_spans, summary_spans[0], tp.src, 10, 43);
    bool same = c.members.size() == a.members.size();
    if (same) {
        for (std::size_t i = 0; i < a.members.size(); ++i) {
            same = same && c.members[i].span.surface == a.members[i].span.surface;
        }
    }
    CHECK_FALSE(same);
}

TEST_CASE("empty adversarial sets are legal") {
    Vocab v;
    SummaryPair pair{"p", "Alan spoke briefly.", "Alan spoke."};
    const TokenizedPair tp = tokenize_pair(pair, VocabMode::Build, v);
    const auto doc_spans = extract_spans(tp.src, SpanHost::Document);
    const auto summary_spans = extract_spans(tp.tgt, SpanHost::Summary);
    REQUIRE(summary_spans.size() == 1);
    const AdversarialSet adv =
        build_adversarial_set(doc_spans, summary_spans[0], tp.src, 10, 0);
    CHECK(adv.members.empty());
}

// Property: members always match the target's kind and normalized length.
TEST_CASE("adversarial set invariants over random synthetic pairs") {
    const SynthConfig cfg{.n_pairs = 25, .n_entities = 24, .n_numbers = 8, .seed = 5};
    Rng rng(99);
    for (const SummaryPair& pair : gen_synthetic_corpus(cfg)) {
        Vocab v;
        const TokenizedPair tp = tokenize_pair(pair, VocabMode::Build, v);
        const auto doc_spans = extract_spans(tp.src, SpanHost::Document);
        for (const FactualSpan& target : extract_spans(tp.tgt, SpanHost::Summary)) {
            const AdversarialSet adv =
                build_adversarial_set(doc_spans, target, tp.src, 1 + rng.index(10), rng.u64());
            CHECK(static_cast<int>(adv.members.size()) <= 10);
            for (const AdvMember& m : adv.members) {
                CHECK(m.span.kind == target.kind);
                CHECK(static_cast<int>(m.norm_ids.size()) == target.length());
                CHECK(m.real_len >= 1);
                CHECK(m.real_len <= target.length());
                for (int k = m.real_len; k < target.length(); ++k) {
                    CHECK(m.norm_ids[static_cast<std::size_t>(k)] == kPadId);
                }
            }
        }
    }
}
