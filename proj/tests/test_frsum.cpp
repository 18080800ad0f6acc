#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "frsum/common.hpp"
#include "frsum/frsum.hpp"
#include "frsum/train.hpp"
#include "test_support.hpp"

using namespace frsum;
using frsum::testing::micro_hparams;
using frsum::testing::random_ids;

namespace {

Transformer micro_model(std::uint64_t seed, int vocab = 20) {
    return Transformer(ModelParams::init(micro_hparams(vocab), FloatMode::F64, seed));
}

std::vector<TokenizedPair> tiny_corpus(Vocab& vocab, int n, std::uint64_t seed) {
    std::vector<TokenizedPair> out;
    const SynthConfig cfg{.n_pairs = n, .n_entities = 10, .n_numbers = 5, .seed = seed};
    for (const SummaryPair& p : gen_synthetic_corpus(cfg)) {
        out.push_back(tokenize_pair(p, VocabMode::Build, vocab, 64, 64));
    }
    return out;
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
    const auto ta = tensor_list(a);
    const auto tb = tensor_list(b);
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (!(*ta[i].second == *tb[i].second)) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("tau schedule follows the exact curriculum") {
    const int S = 2;
    CHECK(tau_schedule(S, S) == 0.0);
    CHECK(tau_schedule(S + 3, S) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(tau_schedule(S + 7, S) == 0.5);
    CHECK(tau_schedule(1, S) == 0.0);  // before S
    for (int epoch = 1; epoch < 20; ++epoch) {
        CHECK(tau_schedule(epoch + 1, S) >= tau_schedule(epoch, S));
        CHECK(tau_schedule(epoch, S) <= 0.5);
        CHECK(tau_schedule(epoch, S) >= 0.0);
    }
    CHECK_THROWS_AS(tau_schedule(0, S), ConfigError);
}

TEST_CASE("margin step contrast hinges in log space") {
    // lp series of length 1 each
    CHECK(margin_step_contrast({-1.2}, {-1.0}, 1, 0.05) ==
          std::vector<double>{doctest::Approx(0.25)});
    CHECK(margin_step_contrast({-0.5}, {-2.0}, 1, 0.05) == std::vector<double>{0.0});
    // member padded at t=2: second step contributes 0 regardless of values
    const auto d = margin_step_contrast({-1.0, -2.0}, {-0.5, 99.0}, 1, 0.1);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == doctest::Approx(0.6));
    CHECK(d[1] == 0.0);
}

TEST_CASE("perturbation normalizes the gradient to unit Frobenius norm") {
    Mat grad = Mat::Zero(2, 2);
    grad(0, 0) = 3.0;
    grad(1, 1) = 4.0;
    Mat h = Mat::Ones(2, 2);
    const PerturbationResult r = perturb_from_gradient(grad, h, 0.25);
    CHECK(r.delta(0, 0) == doctest::Approx(0.6));
    CHECK(r.delta(1, 1) == doctest::Approx(0.8));
    CHECK(r.delta.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((r.h_hat - h).norm() == doctest::Approx(0.25).epsilon(1e-12));

    SUBCASE("zero gradient keeps h untouched") {
        const PerturbationResult z = perturb_from_gradient(Mat::Zero(2, 2), h, 0.25);
        CHECK(z.delta.norm() == 0.0);
        CHECK(z.h_hat == h);
    }
    SUBCASE("tau = 0 is the identity") {
        const PerturbationResult t0 = perturb_from_gradient(grad, h, 0.0);
        CHECK(t0.h_hat == h);
    }
    SUBCASE("negative tau is rejected") {
        CHECK_THROWS_AS(perturb_from_gradient(grad, h, -0.1), ConfigError);
    }
}

TEST_CASE("model-level perturbation honors the contracts") {
    const Transformer model = micro_model(3);
    Rng rng(4);
    const HiddenStates hs = model.encode(random_ids(rng, 6, 20));
    const std::vector<int> prompt = {kBosId, 5};
    const std::vector<int> span = {9, 11};

    for (double tau : {0.0, 0.1, 0.5}) {
        const PerturbationResult r = factual_perturbation(model, hs.h, prompt, span, tau);
        CHECK(r.tau_used == tau);
        if (r.delta.norm() > 0.0) {
            CHECK(r.delta.norm() == doctest::Approx(1.0).epsilon(1e-9));
        }
        CHECK((r.h_hat - hs.h).norm() == doctest::Approx(tau).epsilon(1e-9));
    }
}

// First-order check: walking along delta increases the span NLL for small tau.
TEST_CASE("perturbation is an ascent direction almost always") {
    int ascents = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const Transformer model = micro_model(100 + static_cast<std::uint64_t>(t));
        Rng rng(200 + static_cast<std::uint64_t>(t));
        const HiddenStates hs = model.encode(random_ids(rng, 5, 20));
        std::vector<int> prompt = {kBosId};
        const std::vector<int> span = random_ids(rng, 2, 20);
        const double tau = 1e-3;
        const PerturbationResult r = factual_perturbation(model, hs.h, prompt, span, tau);
        const double before = model.span_nll(hs.h, prompt, span, SpanNorm::Mean);
        const double after = model.span_nll(r.h_hat, prompt, span, SpanNorm::Mean);
        if (after >= before) {
            ++ascents;
        }
    }
    CHECK(ascents >= 95);
}

TEST_CASE("combined loss is the exact weighted sum") {
    CHECK(combined_loss(2.0, 1.0, 0.3) == doctest::Approx(2.3).epsilon(1e-15));
    CHECK(combined_loss(2.0, 5.0, 0.0) == 2.0);
    CHECK(combined_loss(2.0, 0.0, 1.0) == 2.0);
    CHECK_THROWS_AS(combined_loss(std::nan(""), 0.0, 0.5), NumericError);
}

TEST_CASE("factual adversarial loss matches a brute-force triple loop") {
    const Transformer model = micro_model(7);
    Rng rng(8);
    const std::vector<int> src = random_ids(rng, 7, 20);
    const HiddenStates hs = model.encode(src);

    std::vector<SpanItem> items;
    for (int si = 0; si < 2; ++si) {
        SpanItem item;
        item.prompt_ids = {kBosId};
        for (int id : random_ids(rng, si, 20)) {
            item.prompt_ids.push_back(id);
        }
        item.span_ids = random_ids(rng, 2, 20);
        for (int mi = 0; mi < 3; ++mi) {
            SpanItem::Member m;
            m.real_len = 1 + rng.index(2);
            m.ids = random_ids(rng, m.real_len, 20);
            m.ids.resize(item.span_ids.size(), kPadId);
            item.members.push_back(std::move(m));
        }
        items.push_back(std::move(item));
    }

    const double gamma = 0.07;
    const double got = factual_adversarial_loss(model, hs.h, items, gamma);

    // independent recomputation from span prefix probabilities
    double expected = 0.0;
    for (const SpanItem& item : items) {
        const int len = static_cast<int>(item.span_ids.size());
        const auto target_probs = model.span_prefix_probs(hs.h, item.prompt_ids, item.span_ids,
                                                          len);
        double span_term = 0.0;
        for (int t = 1; t <= len; ++t) {
            double best = 0.0;
            for (const SpanItem::Member& m : item.members) {
                if (t > m.real_len) {
                    continue;
                }
                const auto member_probs =
                    model.span_prefix_probs(hs.h, item.prompt_ids, m.ids, m.real_len);
                const double lp_m = std::log(member_probs[static_cast<std::size_t>(t - 1)]);
                const double lp_s = std::log(target_probs[static_cast<std::size_t>(t - 1)]);
                best = std::max(best, std::max(lp_m - lp_s + gamma, 0.0));
            }
            span_term += best;
        }
        expected += span_term / len;
    }
    expected /= static_cast<double>(items.size());
    CHECK(got == doctest::Approx(expected).epsilon(1e-9));
    CHECK(got >= 0.0);

    SUBCASE("non-decreasing in gamma") {
        double prev = factual_adversarial_loss(model, hs.h, items, 0.0);
        for (double g : {0.05, 0.1, 0.5}) {
            const double cur = factual_adversarial_loss(model, hs.h, items, g);
            CHECK(cur >= prev);
            prev = cur;
        }
    }
}

TEST_CASE("factual adversarial loss is zero once every margin holds") {
    // bias the output projection so the target tokens dominate every step
    ModelParams p = ModelParams::init(micro_hparams(20), FloatMode::F64, 9);
    p.b_out(0, 8) = 14.0;
    p.b_out(0, 9) = 14.0;
    const Transformer model(std::move(p));
    Rng rng(10);
    const HiddenStates hs = model.encode(random_ids(rng, 5, 20));

    SpanItem item;
    item.prompt_ids = {kBosId};
    item.span_ids = {8, 9};
    item.members.push_back({{5, 6}, 2});
    item.members.push_back({{7, kPadId}, 1});

    CHECK(factual_adversarial_loss(model, hs.h, {item}, 0.05) == 0.0);
    CHECK(factual_adversarial_loss(model, hs.h, {item}, 0.0) == 0.0);
}

TEST_CASE("gradient of the factual adversarial loss matches finite differences") {
    const Transformer model = micro_model(11);
    Rng rng(12);
    const std::vector<int> src = random_ids(rng, 5, 20);

    SpanItem item;
    item.prompt_ids = {kBosId};
    item.span_ids = random_ids(rng, 2, 20);
    item.members.push_back({random_ids(rng, 2, 20), 2});
    item.members.push_back({random_ids(rng, 2, 20), 2});
    const double gamma = 0.3;  // keep hinges active and away from the kink

    // analytic gradient through encoder and decoder
    ad::Tape tape(true);
    const Transformer::Bound bound = model.bind(tape, true);
    ad::Var h = model.encoder_graph(tape, bound, src);
    ad::Var loss = factual_adversarial_loss_node(tape, model, bound, {{item, h}}, gamma);
    tape.backward(loss);

    const auto eval_at = [&](const ModelParams& params) {
        const Transformer m(params);
        const HiddenStates hs = m.encode(src);
        return factual_adversarial_loss(m, hs.h, {item}, gamma);
    };

    int checked = 0;
    constexpr double eps = 1e-6;
    const auto names = tensor_list(model.params());
    for (std::size_t ti = 0; ti < names.size(); ti += 7) {
        const Mat analytic = tape.grad(bound.ordered[ti]);
        const Mat& base = *names[ti].second;
        const int r = rng.index(static_cast<std::size_t>(base.rows()));
        const int c = rng.index(static_cast<std::size_t>(base.cols()));

        ModelParams pp = model.params();
        ModelParams pm = model.params();
        (*tensor_list(pp)[ti].second)(r, c) += eps;
        (*tensor_list(pm)[ti].second)(r, c) -= eps;
        const double fd = (eval_at(pp) - eval_at(pm)) / (2.0 * eps);
        const double a = analytic(r, c);
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-5});
        CHECK_MESSAGE(std::abs(a - fd) / denom < 1e-3,
                      "tensor ", names[ti].first, " coord (", r, ",", c, "): analytic ", a,
                      " vs fd ", fd);
        ++checked;
    }
    CHECK(checked >= 5);
}

TEST_CASE("frsum step with eta 0 is bit-identical to the NLL step") {
    Vocab vocab;
    const auto corpus = tiny_corpus(vocab, 3, 31);
    const ModelHParams hp = micro_hparams(vocab.size(), 16, 1, 2, 32);

    Transformer a(ModelParams::init(hp, FloatMode::F32, 5));
    Transformer b(ModelParams::init(hp, FloatMode::F32, 5));
    AdamState opt_a = AdamState::init(a.params());
    AdamState opt_b = AdamState::init(b.params());
    const AdamConfig adam;

    FrsumConfig cfg;
    cfg.eta = 0.0;
    cfg.seed = 7;
    for (const TokenizedPair& pair : corpus) {
        a.train_step_nll({&pair}, opt_a, adam);
        const FrsumStepResult r = frsum_train_step(b, pair, cfg, 1, opt_b, adam);
        CHECK(r.l_fa == 0.0);
        CHECK(r.tau == 0.0);
    }
    CHECK(params_equal(a.params(), b.params()));
}

TEST_CASE("frsum step runs the adversarial branch and logs the schedule") {
    Vocab vocab;
    const auto corpus = tiny_corpus(vocab, 2, 33);
    const ModelHParams hp = micro_hparams(vocab.size(), 16, 1, 2, 32);
    Transformer model(ModelParams::init(hp, FloatMode::F32, 6));
    AdamState opt = AdamState::init(model.params());
    const AdamConfig adam;

    FrsumConfig cfg;
    cfg.eta = 0.3;
    cfg.start_epoch = 2;
    cfg.seed = 7;

    SUBCASE("before S the loss is computed on unperturbed states") {
        const FrsumStepResult r = frsum_train_step(model, corpus[0], cfg, 1, opt, adam);
        CHECK(r.tau == 0.0);
        CHECK(r.skipped_reason.empty());
        CHECK(r.l_fa >= 0.0);
        CHECK(r.l_total == doctest::Approx(r.l_nll + 0.3 * r.l_fa).epsilon(1e-12));
    }
    SUBCASE("after S tau follows the schedule") {
        const FrsumStepResult r = frsum_train_step(model, corpus[0], cfg, 4, opt, adam);
        CHECK(r.tau == doctest::Approx(0.2));
    }
    SUBCASE("same seed and epoch reproduce the same step") {
        Transformer m1(ModelParams::init(hp, FloatMode::F32, 6));
        Transformer m2(ModelParams::init(hp, FloatMode::F32, 6));
        AdamState o1 = AdamState::init(m1.params());
        AdamState o2 = AdamState::init(m2.params());
        const FrsumStepResult r1 = frsum_train_step(m1, corpus[0], cfg, 3, o1, adam);
        const FrsumStepResult r2 = frsum_train_step(m2, corpus[0], cfg, 3, o2, adam);
        CHECK(r1.l_total == r2.l_total);
        CHECK(params_equal(m1.params(), m2.params()));
    }
}

TEST_CASE("train_epochs records match between nll and eta-zero frsum") {
    Vocab vocab;
    const auto corpus = tiny_corpus(vocab, 4, 35);
    const ModelHParams hp = micro_hparams(vocab.size(), 16, 1, 2, 32);

    const auto run = [&](const std::string& strategy) {
        Transformer model(ModelParams::init(hp, FloatMode::F32, 8));
        AdamState opt = AdamState::init(model.params());
        TrainRunConfig cfg;
        cfg.strategy = strategy;
        cfg.epochs = 2;
        cfg.seed = 11;
        cfg.frsum.eta = 0.0;
        std::vector<StepRecord> records;
        train_epochs(model, opt, corpus, cfg, 1,
                     [&](const StepRecord& r) { records.push_back(r); }, {});
        return records;
    };

    const auto nll = run("nll");
    const auto frsum0 = run("frsum");
    REQUIRE(nll.size() == frsum0.size());
    for (std::size_t i = 0; i < nll.size(); ++i) {
        CHECK(nll[i].pair_id == frsum0[i].pair_id);
        CHECK(nll[i].l_total == frsum0[i].l_total);  // bitwise
        CHECK(nll[i].tau == frsum0[i].tau);
        CHECK(nll[i].l_fa == frsum0[i].l_fa);
    }
}
