#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "frsum/extraction.hpp"
#include "frsum/model.hpp"

namespace frsum {

// d_t series over the span steps: per step, the best member's advantage in
// probability space, hinged at zero. An empty member list yields all zeros.
std::vector<double> step_contrast(const std::vector<double>& target_prefix_probs,
                                  const std::vector<std::vector<double>>& member_prefix_probs);

// d = mean of the d_t series.
double span_contrast(const std::vector<double>& steps);

struct AttackOutcome {
    FactualSpan target;
    std::vector<double> steps;  // d_t, length |s|
    double d = 0.0;
    bool success = false;  // d > 0
    int members_evaluated = 0;
};

// Scores the target and every member under the same prompt and hidden
// states, then applies the probability-space contrast. adv must be non-empty
// (empty sets are skipped upstream).
AttackOutcome attack_span(const PairScorer& scorer, const TokenizedPair& pair,
                          const FactualSpan& target, const AdversarialSet& adv);

enum class KindFilter { Mix, Entity, Number };

const char* to_string(KindFilter k);
KindFilter kind_filter_from_string(const std::string& s);

struct KindCounts {
    long long successes = 0;
    long long denominator = 0;
};

struct RobustnessReport {
    std::optional<double> e_mix, e_entity, e_number;  // empty when denominator is 0
    KindCounts mix, entity, number;
    long long skipped_spans = 0;  // empty adversarial sets
    long long failed_spans = 0;   // scoring failures, excluded from E
    struct DocBreakdown {
        std::string id;
        int evaluated = 0;
        int successes = 0;
        int skipped = 0;
        int failed = 0;
    };
    std::vector<DocBreakdown> per_document;
    std::uint64_t seed = 0;
    int adv_cap = 0;
    KindFilter kinds = KindFilter::Mix;
};

// Eq.-faithful corpus sweep: extract summary spans, build seeded adversarial
// sets, attack each span, and aggregate success counts per kind. Results are
// independent of the worker count.
RobustnessReport corpus_success_rate(const SpanScorer& scorer,
                                     const std::vector<TokenizedPair>& corpus, KindFilter kinds,
                                     std::uint64_t seed, int adv_cap, int workers = 1);

}  // namespace frsum
