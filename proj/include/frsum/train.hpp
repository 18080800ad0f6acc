#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "frsum/frsum.hpp"
#include "frsum/model.hpp"

namespace frsum {

struct TrainRunConfig {
    std::string strategy = "nll";  // "nll" | "frsum"
    int epochs = 5;
    std::uint64_t seed = 7;
    AdamConfig adam;
    FrsumConfig frsum;

    void validate() const;
};

struct StepRecord {
    long long step = 0;
    int epoch = 0;
    std::string pair_id;
    double tau = 0.0;
    double l_nll = 0.0;
    double l_fa = 0.0;
    double l_total = 0.0;
    std::string skipped_reason;
};

using StepFn = std::function<void(const StepRecord&)>;
using EpochFn = std::function<void(int epoch, double mean_l_nll)>;

// Per-pair steps over shuffled epochs. Epochs run first_epoch ..
// first_epoch + epochs - 1 so resumed runs reproduce the original shuffle and
// tau schedule. The pair order is keyed on (seed, epoch) only.
void train_epochs(Transformer& model, AdamState& opt,
                  const std::vector<TokenizedPair>& corpus, const TrainRunConfig& cfg,
                  int first_epoch, const StepFn& on_step, const EpochFn& on_epoch);

// Teacher-forced mean NLL over a corpus (no parameter updates).
double corpus_mean_nll(const Transformer& model, const std::vector<TokenizedPair>& corpus);

}  // namespace frsum
