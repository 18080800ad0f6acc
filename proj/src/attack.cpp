#include "frsum/attack.hpp"

#include <algorithm>
#include <thread>

#include "frsum/common.hpp"
#include "frsum/rng.hpp"

namespace frsum {

std::vector<double> step_contrast(const std::vector<double>& target_prefix_probs,
                                  const std::vector<std::vector<double>>& member_prefix_probs) {
    const std::size_t len = target_prefix_probs.size();
    for (const auto& m : member_prefix_probs) {
        if (m.size() != len) {
            throw DataError("step_contrast: member series length differs from target");
        }
    }
    std::vector<double> d(len, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        double best = 0.0;
        for (const auto& m : member_prefix_probs) {
            best = std::max(best, std::max(m[t] - target_prefix_probs[t], 0.0));
        }
        d[t] = best;
    }
    return d;
}

double span_contrast(const std::vector<double>& steps) {
    if (steps.empty()) {
        throw DataError("span_contrast: empty d_t series");
    }
    double sum = 0.0;
    for (double v : steps) {
        sum += v;
    }
    return sum / static_cast<double>(steps.size());
}

AttackOutcome attack_span(const PairScorer& scorer, const TokenizedPair& pair,
                          const FactualSpan& target, const AdversarialSet& adv) {
    if (adv.members.empty()) {
        throw DataError("attack_span: empty adversarial set for span '" + target.surface +
                        "' in pair " + pair.id);
    }
    const FactualPrompt prompt = factual_prompt(pair, target);
    std::vector<int> span_ids(pair.tgt.ids.begin() + target.begin,
                              pair.tgt.ids.begin() + target.end);
    const int span_len = static_cast<int>(span_ids.size());

    auto score = [&](const std::vector<int>& ids, int real_len) {
        std::vector<int> input = prompt.ids;
        input.insert(input.end(), ids.begin(), ids.begin() + real_len);
        const Mat logp = scorer.decode_logprobs(input);
        return prefix_probs_from_logp(logp, static_cast<int>(prompt.ids.size()), ids, real_len);
    };

    const std::vector<double> target_probs = score(span_ids, span_len);
    std::vector<std::vector<double>> member_probs;
    member_probs.reserve(adv.members.size());
    for (const AdvMember& m : adv.members) {
        member_probs.push_back(score(m.norm_ids, m.real_len));
    }

    AttackOutcome out;
    out.target = target;
    out.steps = step_contrast(target_probs, member_probs);
    out.d = span_contrast(out.steps);
    out.success = out.d > 0.0;
    out.members_evaluated = static_cast<int>(adv.members.size());
    return out;
}

const char* to_string(KindFilter k) {
    switch (k) {
        case KindFilter::Entity: return "entity";
        case KindFilter::Number: return "number";
        default: return "mix";
    }
}

KindFilter kind_filter_from_string(const std::string& s) {
    if (s == "mix") return KindFilter::Mix;
    if (s == "entity") return KindFilter::Entity;
    if (s == "number") return KindFilter::Number;
    throw ConfigError("unknown kinds filter: " + s + " (expected mix, entity, or number)");
}

namespace {

struct PairTally {
    RobustnessReport::DocBreakdown doc;
    KindCounts entity, number;
};

PairTally attack_pair(const SpanScorer& scorer, const TokenizedPair& pair, KindFilter kinds,
                      std::uint64_t seed, int adv_cap) {
    PairTally tally;
    tally.doc.id = pair.id;

    std::vector<FactualSpan> targets;
    for (const FactualSpan& sp : extract_spans(pair.tgt, SpanHost::Summary)) {
        if (kinds == KindFilter::Entity && sp.kind != SpanKind::Entity) continue;
        if (kinds == KindFilter::Number && sp.kind != SpanKind::Number) continue;
        targets.push_back(sp);
    }
    if (targets.empty()) {
        return tally;
    }

    const std::vector<FactualSpan> doc_spans = extract_spans(pair.src, SpanHost::Document);
    const auto bound = scorer.bind(pair.src_ids);

    for (std::size_t k = 0; k < targets.size(); ++k) {
        const FactualSpan& target = targets[k];
        const std::uint64_t adv_seed =
            derive_seed(seed, {fnv1a64(pair.id), static_cast<std::uint64_t>(k), 0xadu});
        const AdversarialSet adv =
            build_adversarial_set(doc_spans, target, pair.src, adv_cap, adv_seed);
        if (adv.members.empty()) {
            tally.doc.skipped += 1;
            continue;
        }
        try {
            const AttackOutcome outcome = attack_span(*bound, pair, target, adv);
            KindCounts& kc = target.kind == SpanKind::Entity ? tally.entity : tally.number;
            kc.denominator += 1;
            kc.successes += outcome.success ? 1 : 0;
            tally.doc.evaluated += 1;
            tally.doc.successes += outcome.success ? 1 : 0;
        } catch (const std::exception&) {
            tally.doc.failed += 1;
        }
    }
    return tally;
}

}  // namespace

RobustnessReport corpus_success_rate(const SpanScorer& scorer,
                                     const std::vector<TokenizedPair>& corpus, KindFilter kinds,
                                     std::uint64_t seed, int adv_cap, int workers) {
    if (workers < 1) {
        throw ConfigError("workers must be >= 1");
    }
    std::vector<PairTally> tallies(corpus.size());

    if (workers == 1 || corpus.size() <= 1) {
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            tallies[i] = attack_pair(scorer, corpus[i], kinds, seed, adv_cap);
        }
    } else {
        const int n = std::min<int>(workers, static_cast<int>(corpus.size()));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n));
        for (int w = 0; w < n; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = static_cast<std::size_t>(w); i < corpus.size();
                     i += static_cast<std::size_t>(n)) {
                    tallies[i] = attack_pair(scorer, corpus[i], kinds, seed, adv_cap);
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    RobustnessReport report;
    report.seed = seed;
    report.adv_cap = adv_cap;
    report.kinds = kinds;
    for (PairTally& t : tallies) {
        report.entity.successes += t.entity.successes;
        report.entity.denominator += t.entity.denominator;
        report.number.successes += t.number.successes;
        report.number.denominator += t.number.denominator;
        report.skipped_spans += t.doc.skipped;
        report.failed_spans += t.doc.failed;
        report.per_document.push_back(std::move(t.doc));
    }
    report.mix.successes = report.entity.successes + report.number.successes;
    report.mix.denominator = report.entity.denominator + report.number.denominator;

    auto rate = [](const KindCounts& kc) -> std::optional<double> {
        if (kc.denominator == 0) {
            return std::nullopt;  // undefined, never reported as 0
        }
        return static_cast<double>(kc.successes) / static_cast<double>(kc.denominator);
    };
    report.e_mix = rate(report.mix);
    report.e_entity = rate(report.entity);
    report.e_number = rate(report.number);
    return report;
}

}  // namespace frsum
