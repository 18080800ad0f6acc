#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "frsum/extraction.hpp"
#include "frsum/model.hpp"

namespace frsum {

struct FrsumConfig {
    double gamma = 0.05;       // margin in log-prob space
    double eta = 0.3;          // weight of the factual adversarial loss
    int adv_cap = 10;          // max |A_s|
    int start_epoch = 2;       // S, counted within the FRSUM phase
    double tau_step = 0.1;
    double tau_cap = 0.5;
    int span_sample_count = 1;  // spans sampled per summary per step
    std::uint64_t seed = 7;

    void validate() const;
};

// tau = min(max(epoch - S, 0) * step, cap); epoch is 1-based.
double tau_schedule(int epoch, int start_epoch, double step = 0.1, double cap = 0.5);

// Margin hinge in log space for one member, per step t = 1..|s|. Steps at or
// past the member's pad position contribute 0 (excluded rather than fed -inf).
std::vector<double> margin_step_contrast(const std::vector<double>& lp_target_prefixes,
                                         const std::vector<double>& lp_member_prefixes,
                                         int member_real_len, double gamma);

struct PerturbationResult {
    Mat delta;       // unit Frobenius norm, or zero when the gradient vanishes
    Mat h_hat;       // h + tau * delta
    double tau_used = 0.0;
};

// Frobenius-normalize a raw gradient and apply it: delta = g / ||g||_F,
// h_hat = h + tau * delta. A zero gradient yields the identity perturbation.
PerturbationResult perturb_from_gradient(const Mat& grad, const Mat& h, double tau);

// First-order factual adversarial perturbation: normalized gradient of the
// span NLL with respect to h, scaled by tau.
PerturbationResult factual_perturbation(const Transformer& model, const Mat& h,
                                        const std::vector<int>& prompt_ids,
                                        const std::vector<int>& span_ids, double tau);

// A target span with its adversarial set, lowered to ids for scoring.
struct SpanItem {
    std::vector<int> prompt_ids;  // BOS + summary prefix
    std::vector<int> span_ids;    // target span, no PAD
    struct Member {
        std::vector<int> ids;  // length == |span_ids|, PAD-filled tail
        int real_len = 0;
    };
    std::vector<Member> members;
};

SpanItem make_span_item(const TokenizedPair& pair, const FactualSpan& target,
                        const AdversarialSet& adv);

// In-graph factual adversarial loss over (span, hidden-states) pairs: mean
// over spans of (1/|s|) sum_t max_member hinge. The per-item hidden states
// allow per-span perturbations during training.
ad::Var factual_adversarial_loss_node(ad::Tape& tape, const Transformer& model,
                                      const Transformer::Bound& bound,
                                      const std::vector<std::pair<SpanItem, ad::Var>>& items,
                                      double gamma);

// Value-only evaluation on a shared h (all spans of a pair in eval mode).
double factual_adversarial_loss(const Transformer& model, const Mat& h,
                                const std::vector<SpanItem>& items, double gamma);

double combined_loss(double l_nll, double l_fa_perturbed, double eta);

struct FrsumStepResult {
    double l_nll = 0.0;
    double l_fa = 0.0;
    double l_total = 0.0;
    double tau = 0.0;
    double grad_norm = 0.0;
    std::string skipped_reason;  // "no_spans" / "empty_adv_set" when the step fell back to NLL
};

// One Algorithm-1 step on a single pair: sample a span and its adversarial
// set, perturb the encoder states along that span's NLL gradient, score the
// margins under the perturbed states, and take one optimizer step on
// L_nll + eta * L_fa. With eta == 0 the update is bit-identical to a plain
// NLL step.
FrsumStepResult frsum_train_step(Transformer& model, const TokenizedPair& pair,
                                 const FrsumConfig& cfg, int epoch, AdamState& opt,
                                 const AdamConfig& adam);

}  // namespace frsum
