#include "frsum/frsum.hpp"

#include <algorithm>
#include <cmath>

#include "frsum/common.hpp"
#include "frsum/rng.hpp"

namespace frsum {

void FrsumConfig::validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw ConfigError("frsum.eta must lie in [0, 1]");
    }
    if (gamma < 0.0) {
        throw ConfigError("frsum.gamma must be >= 0");
    }
    if (adv_cap < 1) {
        throw ConfigError("frsum.adv_cap must be >= 1");
    }
    if (start_epoch < 0) {
        throw ConfigError("frsum.start_epoch must be >= 0");
    }
    if (tau_step < 0.0 || tau_cap < 0.0) {
        throw ConfigError("frsum.tau_step and tau_cap must be >= 0");
    }
    if (span_sample_count < 1) {
        throw ConfigError("frsum.span_sample_count must be >= 1");
    }
}

double tau_schedule(int epoch, int start_epoch, double step, double cap) {
    if (epoch < 1) {
        throw ConfigError("tau_schedule: epoch must be >= 1");
    }
    return std::min(static_cast<double>(std::max(epoch - start_epoch, 0)) * step, cap);
}

std::vector<double> margin_step_contrast(const std::vector<double>& lp_target_prefixes,
                                         const std::vector<double>& lp_member_prefixes,
                                         int member_real_len, double gamma) {
    const std::size_t len = lp_target_prefixes.size();
    if (lp_member_prefixes.size() < static_cast<std::size_t>(member_real_len)) {
        throw DataError("margin_step_contrast: member series shorter than its real length");
    }
    std::vector<double> d(len, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        if (static_cast<int>(t) >= member_real_len) {
            break;  // pad exclusion
        }
        d[t] = std::max(lp_member_prefixes[t] - lp_target_prefixes[t] + gamma, 0.0);
    }
    return d;
}

PerturbationResult perturb_from_gradient(const Mat& grad, const Mat& h, double tau) {
    if (tau < 0.0) {
        throw ConfigError("factual_perturbation: tau must be >= 0");
    }
    if (!grad.allFinite()) {
        throw NumericError("factual_perturbation: non-finite gradient");
    }
    PerturbationResult out;
    out.tau_used = tau;
    const double norm = grad.norm();
    if (norm == 0.0) {
        out.delta = Mat::Zero(h.rows(), h.cols());
        out.h_hat = h;
        return out;
    }
    out.delta = grad / norm;
    out.h_hat = h + tau * out.delta;
    return out;
}

PerturbationResult factual_perturbation(const Transformer& model, const Mat& h,
                                        const std::vector<int>& prompt_ids,
                                        const std::vector<int>& span_ids, double tau) {
    // SpanNorm is irrelevant here: the normalization cancels any scale.
    const Mat grad = model.grad_span_nll_wrt_hidden(h, prompt_ids, span_ids, SpanNorm::Mean);
    return perturb_from_gradient(grad, h, tau);
}

SpanItem make_span_item(const TokenizedPair& pair, const FactualSpan& target,
                        const AdversarialSet& adv) {
    SpanItem item;
    item.prompt_ids = factual_prompt(pair, target).ids;
    item.span_ids.assign(pair.tgt.ids.begin() + target.begin, pair.tgt.ids.begin() + target.end);
    for (const AdvMember& m : adv.members) {
        item.members.push_back({m.norm_ids, m.real_len});
    }
    return item;
}

ad::Var factual_adversarial_loss_node(ad::Tape& tape, const Transformer& model,
                                      const Transformer::Bound& bound,
                                      const std::vector<std::pair<SpanItem, ad::Var>>& items,
                                      double gamma) {
    if (items.empty()) {
        throw DataError("factual_adversarial_loss: no evaluable spans");
    }
    std::vector<ad::Var> span_losses;
    span_losses.reserve(items.size());
    for (const auto& [item, h] : items) {
        const int prompt_len = static_cast<int>(item.prompt_ids.size());
        const int span_len = static_cast<int>(item.span_ids.size());

        std::vector<int> target_input = item.prompt_ids;
        target_input.insert(target_input.end(), item.span_ids.begin(), item.span_ids.end());
        ad::Var target_logp = model.decoder_graph(tape, bound, h, target_input);

        std::vector<ad::Var> member_logp;
        member_logp.reserve(item.members.size());
        for (const SpanItem::Member& m : item.members) {
            std::vector<int> input = item.prompt_ids;
            input.insert(input.end(), m.ids.begin(), m.ids.begin() + m.real_len);
            member_logp.push_back(model.decoder_graph(tape, bound, h, input));
        }

        std::vector<ad::Var> step_terms;
        step_terms.reserve(static_cast<std::size_t>(span_len));
        for (int t = 1; t <= span_len; ++t) {
            ad::Var lp_target =
                model.span_prefix_logprob_node(tape, target_logp, prompt_len, item.span_ids, t);
            std::vector<ad::Var> hinges;
            for (std::size_t mi = 0; mi < item.members.size(); ++mi) {
                const SpanItem::Member& m = item.members[mi];
                if (t > m.real_len) {
                    continue;  // padded step: the member drops out of the max
                }
                ad::Var lp_member = model.span_prefix_logprob_node(tape, member_logp[mi],
                                                                   prompt_len, m.ids, t);
                hinges.push_back(
                    tape.relu(tape.add_const(tape.sub(lp_member, lp_target), gamma)));
            }
            step_terms.push_back(hinges.empty() ? tape.zero_scalar() : tape.max_of(hinges));
        }
        span_losses.push_back(tape.mean_of(step_terms));
    }
    return tape.mean_of(span_losses);
}

double factual_adversarial_loss(const Transformer& model, const Mat& h,
                                const std::vector<SpanItem>& items, double gamma) {
    ad::Tape tape(false);
    Transformer::Bound bound = model.bind(tape, false);
    ad::Var hv = tape.constant(h);
    std::vector<std::pair<SpanItem, ad::Var>> with_h;
    with_h.reserve(items.size());
    for (const SpanItem& item : items) {
        with_h.emplace_back(item, hv);
    }
    return factual_adversarial_loss_node(tape, model, bound, with_h, gamma).value()(0, 0);
}

double combined_loss(double l_nll, double l_fa_perturbed, double eta) {
    if (!std::isfinite(l_nll) || !std::isfinite(l_fa_perturbed)) {
        throw NumericError("combined_loss: non-finite input");
    }
    return l_nll + eta * l_fa_perturbed;
}

FrsumStepResult frsum_train_step(Transformer& model, const TokenizedPair& pair,
                                 const FrsumConfig& cfg, int epoch, AdamState& opt,
                                 const AdamConfig& adam) {
    cfg.validate();
    FrsumStepResult result;

    auto nll_fallback = [&](const std::string& reason) {
        const Transformer::StepStats stats = model.train_step_nll({&pair}, opt, adam);
        result.l_nll = stats.loss;
        result.l_fa = 0.0;
        result.l_total = stats.loss;
        result.tau = 0.0;
        result.grad_norm = stats.grad_norm;
        result.skipped_reason = reason;
        return result;
    };

    // eta == 0 degenerates to the plain NLL update (Eq. 12 with zero weight);
    // bit-identical by taking the same code path.
    if (cfg.eta == 0.0) {
        return nll_fallback("");
    }

    Rng step_rng(derive_seed(cfg.seed, {fnv1a64(pair.id), static_cast<std::uint64_t>(epoch)}));

    const std::vector<FactualSpan> summary_spans = extract_spans(pair.tgt, SpanHost::Summary);
    if (summary_spans.empty()) {
        return nll_fallback("no_spans");
    }
    const std::vector<FactualSpan> doc_spans = extract_spans(pair.src, SpanHost::Document);

    const std::size_t k =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.span_sample_count),
                              summary_spans.size());
    std::vector<SpanItem> items;
    for (int idx : step_rng.sample_indices(summary_spans.size(), k)) {
        const FactualSpan& target = summary_spans[static_cast<std::size_t>(idx)];
        const std::uint64_t adv_seed = step_rng.u64();
        const AdversarialSet adv =
            build_adversarial_set(doc_spans, target, pair.src, cfg.adv_cap, adv_seed);
        if (adv.members.empty()) {
            continue;
        }
        items.push_back(make_span_item(pair, target, adv));
    }
    if (items.empty()) {
        return nll_fallback("empty_adv_set");
    }

    const double tau = tau_schedule(epoch, cfg.start_epoch, cfg.tau_step, cfg.tau_cap);

    ad::Tape tape(true);
    Transformer::Bound bound = model.bind(tape, true);
    ad::Var h = model.encoder_graph(tape, bound, pair.src_ids);
    ad::Var logp_y = model.decoder_graph(tape, bound, h, pair.tgt_ids);
    ad::Var l_nll = model.sequence_nll_node(tape, logp_y, pair.tgt_ids);

    // Perturbation per sampled span; the direction is a stop-gradient
    // constant, so h_hat = h + tau * delta still routes gradients into the
    // encoder with identity Jacobian.
    std::vector<std::pair<SpanItem, ad::Var>> items_with_h;
    items_with_h.reserve(items.size());
    for (SpanItem& item : items) {
        ad::Var h_for_span = h;
        if (tau > 0.0) {
            const PerturbationResult pert =
                factual_perturbation(model, h.value(), item.prompt_ids, item.span_ids, tau);
            if (pert.delta.norm() != 0.0) {
                h_for_span = tape.add(h, tape.constant(pert.tau_used * pert.delta));
            }
        }
        items_with_h.emplace_back(std::move(item), h_for_span);
    }

    ad::Var l_fa = factual_adversarial_loss_node(tape, model, bound, items_with_h, cfg.gamma);
    ad::Var total = tape.add(l_nll, tape.scale(l_fa, cfg.eta));

    result.l_nll = l_nll.value()(0, 0);
    result.l_fa = l_fa.value()(0, 0);
    result.l_total = total.value()(0, 0);
    result.tau = tau;
    if (!std::isfinite(result.l_total)) {
        throw NumericError("non-finite FRSUM loss on pair " + pair.id + " (l_nll=" +
                           std::to_string(result.l_nll) + ", l_fa=" +
                           std::to_string(result.l_fa) + "); step aborted");
    }

    tape.backward(total);
    model.apply_gradients(tape, bound, opt, adam, &result.grad_norm);
    return result;
}

}  // namespace frsum
