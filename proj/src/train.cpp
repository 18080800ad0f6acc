#include "frsum/train.hpp"

#include <numeric>

#include "frsum/common.hpp"
#include "frsum/rng.hpp"

namespace frsum {

void TrainRunConfig::validate() const {
    if (strategy != "nll" && strategy != "frsum") {
        throw ConfigError("strategy must be \"nll\" or \"frsum\", got \"" + strategy + "\"");
    }
    if (epochs < 1) {
        throw ConfigError("epochs must be >= 1");
    }
    frsum.validate();
}

void train_epochs(Transformer& model, AdamState& opt,
                  const std::vector<TokenizedPair>& corpus, const TrainRunConfig& cfg,
                  int first_epoch, const StepFn& on_step, const EpochFn& on_epoch) {
    cfg.validate();
    if (corpus.empty()) {
        throw DataError("training corpus is empty");
    }

    FrsumConfig frsum_cfg = cfg.frsum;
    frsum_cfg.seed = cfg.seed;

    long long step = static_cast<long long>(first_epoch - 1) *
                     static_cast<long long>(corpus.size());
    for (int epoch = first_epoch; epoch < first_epoch + cfg.epochs; ++epoch) {
        std::vector<int> order(corpus.size());
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch), 0x0edeu}));
        shuffle_rng.shuffle(order);

        double nll_sum = 0.0;
        for (int idx : order) {
            const TokenizedPair& pair = corpus[static_cast<std::size_t>(idx)];
            StepRecord rec;
            rec.step = ++step;
            rec.epoch = epoch;
            rec.pair_id = pair.id;
            if (cfg.strategy == "nll") {
                const Transformer::StepStats stats = model.train_step_nll({&pair}, opt, cfg.adam);
                rec.l_nll = stats.loss;
                rec.l_fa = 0.0;
                rec.l_total = stats.loss;
                rec.tau = 0.0;
            } else {
                const FrsumStepResult r = frsum_train_step(model, pair, frsum_cfg, epoch, opt,
                                                           cfg.adam);
                rec.l_nll = r.l_nll;
                rec.l_fa = r.l_fa;
                rec.l_total = r.l_total;
                rec.tau = r.tau;
                rec.skipped_reason = r.skipped_reason;
            }
            nll_sum += rec.l_nll;
            if (on_step) {
                on_step(rec);
            }
        }
        if (on_epoch) {
            on_epoch(epoch, nll_sum / static_cast<double>(corpus.size()));
        }
    }
}

double corpus_mean_nll(const Transformer& model, const std::vector<TokenizedPair>& corpus) {
    if (corpus.empty()) {
        throw DataError("corpus_mean_nll: empty corpus");
    }
    double sum = 0.0;
    for (const TokenizedPair& pair : corpus) {
        const HiddenStates hs = model.encode(pair.src_ids);
        sum += model.sequence_nll(hs.h, pair.tgt_ids);
    }
    return sum / static_cast<double>(corpus.size());
}

}  // namespace frsum
