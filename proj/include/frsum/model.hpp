#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "frsum/autodiff.hpp"
#include "frsum/corpus.hpp"

namespace frsum {

using ad::Mat;

// float32: parameters (and optimizer moments) are held at float32 precision
// inside double storage, so checkpoints round-trip bit-exactly through
// float32 blobs. float64 skips the quantization; used for verification.
enum class FloatMode { F32, F64 };

const char* to_string(FloatMode mode);
FloatMode float_mode_from_string(const std::string& s);

struct ModelHParams {
    int vocab_size = 0;
    int d_model = 64;
    int n_layers = 2;
    int n_heads = 4;
    int d_ff = 256;
    int max_src_len = kDefaultMaxSrcLen;
    int max_tgt_len = kDefaultMaxTgtLen;

    void validate() const;
    bool operator==(const ModelHParams&) const = default;
};

struct LayerNormParams {
    Mat gain, bias;  // 1 x d
};
struct AttentionParams {
    Mat wq, bq, wk, bk, wv, bv, wo, bo;
};
struct FfnParams {
    Mat w1, b1, w2, b2;
};
struct EncoderLayerParams {
    LayerNormParams ln1;
    AttentionParams self_attn;
    LayerNormParams ln2;
    FfnParams ffn;
};
struct DecoderLayerParams {
    LayerNormParams ln1;
    AttentionParams self_attn;
    LayerNormParams ln2;
    AttentionParams cross_attn;
    LayerNormParams ln3;
    FfnParams ffn;
};

struct ModelParams {
    ModelHParams hp;
    FloatMode mode = FloatMode::F32;
    Mat tok_embed;  // vocab x d, shared by encoder and decoder inputs
    Mat pos_src;    // max_src x d
    Mat pos_tgt;    // max_tgt x d
    std::vector<EncoderLayerParams> enc;
    std::vector<DecoderLayerParams> dec;
    LayerNormParams enc_final;
    LayerNormParams dec_final;
    Mat w_out;  // d x vocab
    Mat b_out;  // 1 x vocab

    static ModelParams init(const ModelHParams& hp, FloatMode mode, std::uint64_t seed);
    void quantize_to_mode();
    bool all_finite() const;
};

// Stable (name, tensor) enumeration. Optimizer state, gradients, and
// checkpoint blobs all follow this order.
std::vector<std::pair<std::string, Mat*>> tensor_list(ModelParams& p);
std::vector<std::pair<std::string, const Mat*>> tensor_list(const ModelParams& p);

struct HiddenStates {
    Mat h;  // n x d_model
    int n = 0;
};

struct StepLogProbs {
    // row t is the log-distribution over the vocab for the token following
    // prefix position t (teacher forced)
    Mat logp;
};

enum class SpanNorm { Mean, Sum };

// Cumulative span prefix probabilities p(s_{1:t}) computed from a logprob
// matrix: prompt_len counts the conditioning ids (BOS included); positions at
// or past real_len are padding and force the prefix probability to 0.
std::vector<double> prefix_probs_from_logp(const Mat& logp, int prompt_len,
                                           const std::vector<int>& span_ids, int real_len);

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;
};

struct AdamState {
    std::vector<Mat> m, v;  // tensor_list order
    long long step = 0;

    static AdamState init(const ModelParams& params);
};

class Transformer {
public:
    explicit Transformer(ModelParams params);

    const ModelParams& params() const { return params_; }
    ModelParams& mutable_params() { return params_; }

    // -- graph building ----------------------------------------------------
    // Parameter leaves bound to one tape; ordered like tensor_list.
    struct Bound {
        std::vector<ad::Var> ordered;
        std::unordered_map<std::string, int> index;
        ad::Var at(const std::string& name) const;
    };
    Bound bind(ad::Tape& tape, bool needs_grad) const;
    ad::Var encoder_graph(ad::Tape& tape, const Bound& b, const std::vector<int>& src_ids) const;
    // prefix_ids must start with BOS; returns the L x vocab logprob node
    ad::Var decoder_graph(ad::Tape& tape, const Bound& b, ad::Var h,
                          const std::vector<int>& prefix_ids) const;

    // mean NLL over the predicted positions of tgt_ids (BOS ... EOS)
    ad::Var sequence_nll_node(ad::Tape& tape, ad::Var logp,
                              const std::vector<int>& tgt_ids) const;
    // l_s over the span continuation that follows prompt_len conditioning ids
    ad::Var span_nll_node(ad::Tape& tape, ad::Var logp, int prompt_len,
                          const std::vector<int>& span_ids, SpanNorm norm) const;
    // lp(s_{1:t}) for one t (1-based)
    ad::Var span_prefix_logprob_node(ad::Tape& tape, ad::Var logp, int prompt_len,
                                     const std::vector<int>& span_ids, int t) const;

    // -- forward-only spec surface ------------------------------------------
    HiddenStates encode(const std::vector<int>& src_ids) const;
    StepLogProbs decode_logprobs(const Mat& h, const std::vector<int>& prefix_ids) const;
    double sequence_nll(const Mat& h, const std::vector<int>& tgt_ids) const;
    std::vector<double> span_prefix_probs(const Mat& h, const std::vector<int>& prompt_ids,
                                          const std::vector<int>& span_ids, int real_len) const;
    double span_nll(const Mat& h, const std::vector<int>& prompt_ids,
                    const std::vector<int>& span_ids, SpanNorm norm = SpanNorm::Mean) const;

    // Exact reverse-mode gradient of span_nll with respect to h, parameters
    // held fixed.
    Mat grad_span_nll_wrt_hidden(const Mat& h, const std::vector<int>& prompt_ids,
                                 const std::vector<int>& span_ids,
                                 SpanNorm norm = SpanNorm::Mean) const;

    // -- training ------------------------------------------------------------
    struct StepStats {
        double loss = 0.0;
        double grad_norm = 0.0;
    };
    StepStats train_step_nll(const std::vector<const TokenizedPair*>& batch, AdamState& opt,
                             const AdamConfig& cfg);

    // Gradient accumulation shared by the training strategies: collects from
    // a bound tape, clips by global norm, applies Adam, re-quantizes.
    void apply_gradients(ad::Tape& tape, const Bound& bound, AdamState& opt,
                         const AdamConfig& cfg, double* grad_norm_out = nullptr);

private:
    void check_src(const std::vector<int>& ids) const;
    void check_prefix(const std::vector<int>& ids) const;

    ModelParams params_;
};

// Scoring contract the attack machinery runs against: bind one source
// document, then score teacher-forced prefixes. The transformer implements
// it; tests plug in explicit probability tables.
class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual Mat decode_logprobs(const std::vector<int>& prefix_ids) const = 0;
};

class SpanScorer {
public:
    virtual ~SpanScorer() = default;
    virtual std::unique_ptr<PairScorer> bind(const std::vector<int>& src_ids) const = 0;
};

class TransformerScorer : public SpanScorer {
public:
    explicit TransformerScorer(const Transformer& model) : model_(model) {}
    std::unique_ptr<PairScorer> bind(const std::vector<int>& src_ids) const override;

private:
    const Transformer& model_;
};

}  // namespace frsum
