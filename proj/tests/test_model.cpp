#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "frsum/common.hpp"
#include "frsum/model.hpp"
#include "frsum/rng.hpp"
#include "test_support.hpp"

using namespace frsum;
using frsum::testing::micro_hparams;
using frsum::testing::random_ids;

namespace {

Transformer random_micro_model(std::uint64_t seed, int vocab = 20, int d_model = 8) {
    return Transformer(
        ModelParams::init(micro_hparams(vocab, d_model), FloatMode::F64, seed));
}

}  // namespace

TEST_CASE("encode shape and determinism") {
    const Transformer model = random_micro_model(1);
    Rng rng(2);
    const std::vector<int> src = random_ids(rng, 5, 20);
    const HiddenStates a = model.encode(src);
    const HiddenStates b = model.encode(src);
    CHECK(a.h.rows() == 5);
    CHECK(a.h.cols() == 8);
    CHECK(a.h == b.h);
    CHECK(a.h.allFinite());
}

TEST_CASE("encode rejects over-length sources") {
    const Transformer model = random_micro_model(1);
    const std::vector<int> too_long(65, 4);
    CHECK_THROWS_AS(model.encode(too_long), DataError);
    CHECK_THROWS_AS(model.encode({}), DataError);
}

TEST_CASE("zero-initialized parameters stay finite and uniform") {
    ModelParams p = ModelParams::init(micro_hparams(12), FloatMode::F64, 3);
    for (auto& [name, mat] : tensor_list(p)) {
        mat->setZero();
    }
    const Transformer model(std::move(p));
    const HiddenStates h = model.encode({4, 5, 6});
    CHECK(h.h.allFinite());

    // All-zero weights force equal logits, hence the uniform distribution and
    // mean NLL of exactly log V.
    const std::vector<int> tgt = {kBosId, 4, 5, kEosId};
    const double nll = model.sequence_nll(h.h, tgt);
    CHECK(nll == doctest::Approx(std::log(12.0)).epsilon(1e-12));
}

TEST_CASE("decoder rows are normalized distributions") {
    const Transformer model = random_micro_model(7);
    Rng rng(8);
    const HiddenStates h = model.encode(random_ids(rng, 6, 20));
    const std::vector<int> prefix = {kBosId, 4, 9, 11};
    const StepLogProbs lp = model.decode_logprobs(h.h, prefix);
    REQUIRE(lp.logp.rows() == 4);
    for (Eigen::Index r = 0; r < lp.logp.rows(); ++r) {
        double lse = 0.0;
        const double mx = lp.logp.row(r).maxCoeff();
        for (Eigen::Index c = 0; c < lp.logp.cols(); ++c) {
            lse += std::exp(lp.logp(r, c) - mx);
        }
        CHECK(mx + std::log(lse) == doctest::Approx(0.0).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("decoder is causal: rows before an edit are unchanged") {
    const Transformer model = random_micro_model(9);
    Rng rng(10);
    const HiddenStates h = model.encode(random_ids(rng, 5, 20));
    std::vector<int> prefix = {kBosId, 4, 9, 11, 6};
    const Mat base = model.decode_logprobs(h.h, prefix).logp;
    for (std::size_t k = 1; k < prefix.size(); ++k) {
        std::vector<int> edited = prefix;
        edited[k] = edited[k] == 4 ? 5 : 4;
        const Mat changed = model.decode_logprobs(h.h, edited).logp;
        for (std::size_t r = 0; r < k; ++r) {
            CHECK((base.row(static_cast<Eigen::Index>(r)) -
                   changed.row(static_cast<Eigen::Index>(r)))
                      .cwiseAbs()
                      .maxCoeff() == 0.0);
        }
        CHECK((base.row(static_cast<Eigen::Index>(k)) -
               changed.row(static_cast<Eigen::Index>(k)))
                  .cwiseAbs()
                  .maxCoeff() > 0.0);
    }
    CHECK_THROWS_AS(model.decode_logprobs(h.h, {4, 5}), DataError);  // no BOS
}

TEST_CASE("sequence_nll equals the brute-force recomputation") {
    const Transformer model = random_micro_model(11);
    Rng rng(12);
    const HiddenStates h = model.encode(random_ids(rng, 7, 20));
    std::vector<int> tgt = {kBosId};
    for (int id : random_ids(rng, 5, 20)) {
        tgt.push_back(id);
    }
    tgt.push_back(kEosId);

    const double nll = model.sequence_nll(h.h, tgt);
    const Mat lp = model.decode_logprobs(h.h, tgt).logp;
    double manual = 0.0;
    for (std::size_t i = 0; i + 1 < tgt.size(); ++i) {
        manual -= lp(static_cast<Eigen::Index>(i), tgt[i + 1]);
    }
    manual /= static_cast<double>(tgt.size() - 1);
    CHECK(nll == doctest::Approx(manual).epsilon(1e-12));
    CHECK(nll >= 0.0);
}

TEST_CASE("prefix probabilities multiply and respect the pad rule") {
    // explicit probability table: step probs 0.5 then 0.4 for the span tokens
    Mat logp(3, 6);
    logp.setConstant(std::log(0.1));
    logp(0, 4) = std::log(0.5);
    logp(1, 5) = std::log(0.4);

    SUBCASE("cumulative products") {
        const auto probs = prefix_probs_from_logp(logp, /*prompt_len=*/1, {4, 5}, 2);
        REQUIRE(probs.size() == 2);
        CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(probs[1] == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("padded member zeroes every step from the pad on") {
        const auto probs = prefix_probs_from_logp(logp, 1, {4, kPadId}, 1);
        REQUIRE(probs.size() == 2);
        CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(probs[1] == 0.0);
    }
}

TEST_CASE("span prefix probabilities are non-increasing and match span_nll") {
    const Transformer model = random_micro_model(13);
    Rng rng(14);
    const HiddenStates h = model.encode(random_ids(rng, 6, 20));
    const std::vector<int> prompt = {kBosId, 7, 9};
    const std::vector<int> span = random_ids(rng, 3, 20);

    const auto probs = model.span_prefix_probs(h.h, prompt, span, 3);
    REQUIRE(probs.size() == 3);
    for (std::size_t t = 1; t < probs.size(); ++t) {
        CHECK(probs[t] <= probs[t - 1]);
        CHECK(probs[t] >= 0.0);
    }

    const double nll_sum = model.span_nll(h.h, prompt, span, SpanNorm::Sum);
    CHECK(probs.back() == doctest::Approx(std::exp(-nll_sum)).epsilon(1e-10));

    const double nll_mean = model.span_nll(h.h, prompt, span, SpanNorm::Mean);
    CHECK(nll_mean == doctest::Approx(nll_sum / 3.0).epsilon(1e-12));

    std::vector<int> padded = span;
    padded.back() = kPadId;
    CHECK_THROWS_AS(model.span_nll(h.h, prompt, padded, SpanNorm::Sum), DataError);
}

TEST_CASE("gradient of span NLL matches central finite differences") {
    Rng rng(15);
    for (int trial = 0; trial < 3; ++trial) {
        const Transformer model = random_micro_model(20 + static_cast<std::uint64_t>(trial));
        const std::vector<int> src = random_ids(rng, 5 + trial, 20);
        const HiddenStates hs = model.encode(src);
        std::vector<int> prompt = {kBosId};
        for (int id : random_ids(rng, trial, 20)) {
            prompt.push_back(id);
        }
        const std::vector<int> span = random_ids(rng, 2, 20);

        const Mat grad = model.grad_span_nll_wrt_hidden(hs.h, prompt, span, SpanNorm::Sum);
        constexpr double eps = 1e-5;
        for (int probe = 0; probe < 10; ++probe) {
            const int r = rng.index(static_cast<std::size_t>(hs.h.rows()));
            const int c = rng.index(static_cast<std::size_t>(hs.h.cols()));
            Mat hp = hs.h, hm = hs.h;
            hp(r, c) += eps;
            hm(r, c) -= eps;
            const double fd = (model.span_nll(hp, prompt, span, SpanNorm::Sum) -
                               model.span_nll(hm, prompt, span, SpanNorm::Sum)) /
                              (2.0 * eps);
            const double denom = std::max({std::abs(fd), std::abs(grad(r, c)), 1e-6});
            CHECK(std::abs(grad(r, c) - fd) / denom < 1e-4);
        }
    }
}

TEST_CASE("a decoder blind to h has exactly zero hidden gradient") {
    ModelParams p = ModelParams::init(micro_hparams(12), FloatMode::F64, 3);
    for (auto& [name, mat] : tensor_list(p)) {
        if (name.rfind("dec.", 0) == 0 || name.rfind("out.", 0) == 0) {
            mat->setZero();
        }
    }
    const Transformer model(std::move(p));
    const HiddenStates h = model.encode({4, 5, 6, 7});
    const Mat g = model.grad_span_nll_wrt_hidden(h.h, {kBosId, 4}, {5, 6}, SpanNorm::Sum);
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duplicating the span contribution doubles the gradient") {
    const Transformer model = random_micro_model(31);
    Rng rng(32);
    const HiddenStates h = model.encode(random_ids(rng, 5, 20));
    const std::vector<int> prompt = {kBosId, 5};
    const std::vector<int> span = {8, 9};

    ad::Tape tape(true);
    const Transformer::Bound bound = model.bind(tape, false);
    ad::Var hv = tape.leaf(h.h);
    std::vector<int> input = prompt;
    input.insert(input.end(), span.begin(), span.end());
    ad::Var logp = model.decoder_graph(tape, bound, hv, input);
    ad::Var l = model.span_nll_node(tape, logp, 2, span, SpanNorm::Sum);
    ad::Var doubled = tape.add(l, l);
    tape.backward(doubled);
    const Mat g2 = tape.grad(hv);

    const Mat g1 = model.grad_span_nll_wrt_hidden(h.h, prompt, span, SpanNorm::Sum);
    CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("training memorizes a tiny corpus") {
    Vocab vocab;
    std::vector<TokenizedPair> pairs;
    const SynthConfig cfg{.n_pairs = 10, .n_entities = 8, .n_numbers = 4, .seed = 21};
    for (const SummaryPair& p : gen_synthetic_corpus(cfg)) {
        pairs.push_back(tokenize_pair(p, VocabMode::Build, vocab, 64, 64));
    }
    ModelHParams hp = micro_hparams(vocab.size(), 16, 1, 2, 32);
    Transformer model(ModelParams::init(hp, FloatMode::F32, 4));
    AdamState opt = AdamState::init(model.params());
    AdamConfig adam;
    adam.lr = 3e-3;

    std::vector<double> losses;
    for (int step = 0; step < 200; ++step) {
        const TokenizedPair& pair = pairs[static_cast<std::size_t>(step) % pairs.size()];
        losses.push_back(model.train_step_nll({&pair}, opt, adam).loss);
    }
    const auto mean_of = [&](std::size_t from, std::size_t to) {
        double s = 0.0;
        for (std::size_t i = from; i < to; ++i) {
            s += losses[i];
        }
        return s / static_cast<double>(to - from);
    };
    // smoothed loss must drop hard on a 10-pair memorization corpus
    CHECK(mean_of(180, 200) < 0.5 * mean_of(0, 20));
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    Vocab vocab;
    const SynthConfig cfg{.n_pairs = 1, .n_entities = 8, .n_numbers = 4, .seed = 2};
    const auto corpus = gen_synthetic_corpus(cfg);
    const TokenizedPair pair = tokenize_pair(corpus[0], VocabMode::Build, vocab, 64, 64);

    Transformer model(
        ModelParams::init(micro_hparams(vocab.size(), 8, 1, 2, 16), FloatMode::F32, 5));
    const ModelParams before = model.params();
    AdamState opt = AdamState::init(model.params());
    AdamConfig adam;
    adam.lr = 0.0;
    model.train_step_nll({&pair}, opt, adam);
    const auto now = tensor_list(model.params());
    const auto was = tensor_list(before);
    for (std::size_t i = 0; i < now.size(); ++i) {
        CHECK(*now[i].second == *was[i].second);
    }
}

TEST_CASE("fixed seed gives a bit-identical loss trajectory") {
    Vocab vocab;
    std::vector<TokenizedPair> pairs;
    const SynthConfig cfg{.n_pairs = 4, .n_entities = 8, .n_numbers = 4, .seed = 6};
    for (const SummaryPair& p : gen_synthetic_corpus(cfg)) {
        pairs.push_back(tokenize_pair(p, VocabMode::Build, vocab, 64, 64));
    }
    const auto run = [&] {
        Transformer model(
            ModelParams::init(micro_hparams(vocab.size(), 8, 1, 2, 16), FloatMode::F32, 9));
        AdamState opt = AdamState::init(model.params());
        AdamConfig adam;
        std::vector<double> losses;
        for (int step = 0; step < 12; ++step) {
            losses.push_back(
                model.train_step_nll({&pairs[static_cast<std::size_t>(step) % pairs.size()]},
                                     opt, adam)
                    .loss);
        }
        return losses;
    };
    CHECK(run() == run());
}
