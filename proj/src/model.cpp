#include "frsum/model.hpp"

#include <cmath>

#include "frsum/common.hpp"
#include "frsum/rng.hpp"

namespace frsum {

const char* to_string(FloatMode mode) {
    return mode == FloatMode::F32 ? "float32" : "float64";
}

FloatMode float_mode_from_string(const std::string& s) {
    if (s == "float32") return FloatMode::F32;
    if (s == "float64") return FloatMode::F64;
    throw ConfigError("unknown float mode: " + s + " (expected float32 or float64)");
}

void ModelHParams::validate() const {
    if (vocab_size < 5) throw ConfigError("vocab_size must cover the reserved ids");
    if (d_model < 1 || n_layers < 1 || n_heads < 1 || d_ff < 1) {
        throw ConfigError("model dimensions must be positive");
    }
    if (d_model % n_heads != 0) {
        throw ConfigError("d_model must be divisible by n_heads");
    }
    if (max_src_len < 1 || max_tgt_len < 3) {
        throw ConfigError("sequence length limits too small");
    }
}

namespace {

void collect(std::vector<std::pair<std::string, Mat*>>& out, const std::string& prefix,
             LayerNormParams& ln) {
    out.emplace_back(prefix + ".gain", &ln.gain);
    out.emplace_back(prefix + ".bias", &ln.bias);
}

void collect(std::vector<std::pair<std::string, Mat*>>& out, const std::string& prefix,
             AttentionParams& a) {
    out.emplace_back(prefix + ".wq", &a.wq);
    out.emplace_back(prefix + ".bq", &a.bq);
    out.emplace_back(prefix + ".wk", &a.wk);
    out.emplace_back(prefix + ".bk", &a.bk);
    out.emplace_back(prefix + ".wv", &a.wv);
    out.emplace_back(prefix + ".bv", &a.bv);
    out.emplace_back(prefix + ".wo", &a.wo);
    out.emplace_back(prefix + ".bo", &a.bo);
}

void collect(std::vector<std::pair<std::string, Mat*>>& out, const std::string& prefix,
             FfnParams& f) {
    out.emplace_back(prefix + ".w1", &f.w1);
    out.emplace_back(prefix + ".b1", &f.b1);
    out.emplace_back(prefix + ".w2", &f.w2);
    out.emplace_back(prefix + ".b2", &f.b2);
}

}  // namespace

std::vector<std::pair<std::string, Mat*>> tensor_list(ModelParams& p) {
    std::vector<std::pair<std::string, Mat*>> out;
    out.emplace_back("embed.tok", &p.tok_embed);
    out.emplace_back("embed.pos_src", &p.pos_src);
    out.emplace_back("embed.pos_tgt", &p.pos_tgt);
    for (std::size_t i = 0; i < p.enc.size(); ++i) {
        const std::string base = "enc." + std::to_string(i);
        collect(out, base + ".ln1", p.enc[i].ln1);
        collect(out, base + ".self", p.enc[i].self_attn);
        collect(out, base + ".ln2", p.enc[i].ln2);
        collect(out, base + ".ffn", p.enc[i].ffn);
    }
    collect(out, "enc.final", p.enc_final);
    for (std::size_t i = 0; i < p.dec.size(); ++i) {
        const std::string base = "dec." + std::to_string(i);
        collect(out, base + ".ln1", p.dec[i].ln1);
        collect(out, base + ".self", p.dec[i].self_attn);
        collect(out, base + ".ln2", p.dec[i].ln2);
        collect(out, base + ".cross", p.dec[i].cross_attn);
        collect(out, base + ".ln3", p.dec[i].ln3);
        collect(out, base + ".ffn", p.dec[i].ffn);
    }
    collect(out, "dec.final", p.dec_final);
    out.emplace_back("out.w", &p.w_out);
    out.emplace_back("out.b", &p.b_out);
    return out;
}

std::vector<std::pair<std::string, const Mat*>> tensor_list(const ModelParams& p) {
    auto mut = tensor_list(const_cast<ModelParams&>(p));
    std::vector<std::pair<std::string, const Mat*>> out;
    out.reserve(mut.size());
    for (auto& [name, m] : mut) {
        out.emplace_back(name, m);
    }
    return out;
}

namespace {

void shape_params(ModelParams& p) {
    const ModelHParams& hp = p.hp;
    const int d = hp.d_model;
    p.tok_embed.resize(hp.vocab_size, d);
    p.pos_src.resize(hp.max_src_len, d);
    p.pos_tgt.resize(hp.max_tgt_len, d);

    auto shape_ln = [d](LayerNormParams& ln) {
        ln.gain.resize(1, d);
        ln.bias.resize(1, d);
    };
    auto shape_attn = [d](AttentionParams& a) {
        a.wq.resize(d, d);
        a.bq.resize(1, d);
        a.wk.resize(d, d);
        a.bk.resize(1, d);
        a.wv.resize(d, d);
        a.bv.resize(1, d);
        a.wo.resize(d, d);
        a.bo.resize(1, d);
    };
    auto shape_ffn = [&hp, d](FfnParams& f) {
        f.w1.resize(d, hp.d_ff);
        f.b1.resize(1, hp.d_ff);
        f.w2.resize(hp.d_ff, d);
        f.b2.resize(1, d);
    };

    p.enc.resize(static_cast<std::size_t>(hp.n_layers));
    for (auto& layer : p.enc) {
        shape_ln(layer.ln1);
        shape_attn(layer.self_attn);
        shape_ln(layer.ln2);
        shape_ffn(layer.ffn);
    }
    p.dec.resize(static_cast<std::size_t>(hp.n_layers));
    for (auto& layer : p.dec) {
        shape_ln(layer.ln1);
        shape_attn(layer.self_attn);
        shape_ln(layer.ln2);
        shape_attn(layer.cross_attn);
        shape_ln(layer.ln3);
        shape_ffn(layer.ffn);
    }
    shape_ln(p.enc_final);
    shape_ln(p.dec_final);
    p.w_out.resize(d, hp.vocab_size);
    p.b_out.resize(1, hp.vocab_size);
}

std::string last_segment(const std::string& name) {
    const std::size_t dot = name.rfind('.');
    return dot == std::string::npos ? name : name.substr(dot + 1);
}

}  // namespace

ModelParams ModelParams::init(const ModelHParams& hp, FloatMode mode, std::uint64_t seed) {
    hp.validate();
    ModelParams p;
    p.hp = hp;
    p.mode = mode;
    shape_params(p);

    Rng rng(derive_seed(seed, {0x1417u}));
    constexpr double kInitStd = 0.02;
    for (auto& [name, mat] : tensor_list(p)) {
        const std::string leaf = last_segment(name);
        if (leaf == "gain") {
            mat->setOnes();
        } else if (!leaf.empty() && leaf[0] == 'b') {
            mat->setZero();
        } else {
            for (Eigen::Index r = 0; r < mat->rows(); ++r) {
                for (Eigen::Index c = 0; c < mat->cols(); ++c) {
                    (*mat)(r, c) = rng.normal(0.0, kInitStd);
                }
            }
        }
    }
    p.quantize_to_mode();
    return p;
}

void ModelParams::quantize_to_mode() {
    if (mode != FloatMode::F32) {
        return;
    }
    for (auto& [name, mat] : tensor_list(*this)) {
        for (Eigen::Index r = 0; r < mat->rows(); ++r) {
            for (Eigen::Index c = 0; c < mat->cols(); ++c) {
                (*mat)(r, c) = static_cast<double>(static_cast<float>((*mat)(r, c)));
            }
        }
    }
}

bool ModelParams::all_finite() const {
    for (const auto& [name, mat] : tensor_list(*this)) {
        if (!mat->allFinite()) {
            return false;
        }
    }
    return true;
}

AdamState AdamState::init(const ModelParams& params) {
    AdamState s;
    for (const auto& [name, mat] : tensor_list(params)) {
        s.m.push_back(Mat::Zero(mat->rows(), mat->cols()));
        s.v.push_back(Mat::Zero(mat->rows(), mat->cols()));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Transformer
// ---------------------------------------------------------------------------

Transformer::Transformer(ModelParams params) : params_(std::move(params)) {
    params_.hp.validate();
}

ad::Var Transformer::Bound::at(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) {
        throw NumericError("unbound parameter: " + name);
    }
    return ordered[static_cast<std::size_t>(it->second)];
}

Transformer::Bound Transformer::bind(ad::Tape& tape, bool needs_grad) const {
    Bound b;
    for (const auto& [name, mat] : tensor_list(params_)) {
        ad::Var v = needs_grad ? tape.leaf(*mat) : tape.constant(*mat);
        b.index.emplace(name, static_cast<int>(b.ordered.size()));
        b.ordered.push_back(v);
    }
    return b;
}

namespace {

std::vector<int> iota_ids(int n) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ids[static_cast<std::size_t>(i)] = i;
    }
    return ids;
}

Mat causal_mask(int n) {
    Mat m = Mat::Zero(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = r + 1; c < n; ++c) {
            m(r, c) = -1e30;
        }
    }
    return m;
}

struct AttnVars {
    ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
};

AttnVars attn_vars(const Transformer::Bound& b, const std::string& prefix) {
    return {b.at(prefix + ".wq"), b.at(prefix + ".bq"), b.at(prefix + ".wk"),
            b.at(prefix + ".bk"), b.at(prefix + ".wv"), b.at(prefix + ".bv"),
            b.at(prefix + ".wo"), b.at(prefix + ".bo")};
}

ad::Var layer_norm_at(ad::Tape& t, const Transformer::Bound& b, const std::string& prefix,
                      ad::Var x) {
    return t.layer_norm(x, b.at(prefix + ".gain"), b.at(prefix + ".bias"));
}

ad::Var multi_head_attention(ad::Tape& t, const AttnVars& p, ad::Var queries_in,
                             ad::Var keys_in, bool causal, int n_heads) {
    const int d = static_cast<int>(queries_in.cols());
    const int head_dim = d / n_heads;
    ad::Var q = t.add_row_broadcast(t.matmul(queries_in, p.wq), p.bq);
    ad::Var k = t.add_row_broadcast(t.matmul(keys_in, p.wk), p.bk);
    ad::Var v = t.add_row_broadcast(t.matmul(keys_in, p.wv), p.bv);

    ad::Var mask;
    if (causal) {
        mask = t.constant(causal_mask(static_cast<int>(q.rows())));
    }

    std::vector<ad::Var> heads;
    heads.reserve(static_cast<std::size_t>(n_heads));
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    for (int h = 0; h < n_heads; ++h) {
        ad::Var qh = t.slice_cols(q, h * head_dim, head_dim);
        ad::Var kh = t.slice_cols(k, h * head_dim, head_dim);
        ad::Var vh = t.slice_cols(v, h * head_dim, head_dim);
        ad::Var scores = t.scale(t.matmul_nt(qh, kh), inv_sqrt);
        if (causal) {
            scores = t.add(scores, mask);
        }
        heads.push_back(t.matmul(t.softmax_rows(scores), vh));
    }
    ad::Var merged = t.concat_cols(heads);
    return t.add_row_broadcast(t.matmul(merged, p.wo), p.bo);
}

ad::Var feed_forward(ad::Tape& t, const Transformer::Bound& b, const std::string& prefix,
                     ad::Var x) {
    ad::Var hidden = t.relu(t.add_row_broadcast(t.matmul(x, b.at(prefix + ".w1")),
                                                b.at(prefix + ".b1")));
    return t.add_row_broadcast(t.matmul(hidden, b.at(prefix + ".w2")), b.at(prefix + ".b2"));
}

}  // namespace

void Transformer::check_src(const std::vector<int>& ids) const {
    if (ids.empty()) {
        throw DataError("encode: empty source");
    }
    if (static_cast<int>(ids.size()) > params_.hp.max_src_len) {
        throw DataError("encode: source length " + std::to_string(ids.size()) +
                        " exceeds max_src_len " + std::to_string(params_.hp.max_src_len));
    }
}

void Transformer::check_prefix(const std::vector<int>& ids) const {
    if (ids.empty() || ids.front() != kBosId) {
        throw DataError("decode: prefix must start with BOS");
    }
    if (static_cast<int>(ids.size()) > params_.hp.max_tgt_len) {
        throw DataError("decode: prefix length " + std::to_string(ids.size()) +
                        " exceeds max_tgt_len " + std::to_string(params_.hp.max_tgt_len));
    }
}

ad::Var Transformer::encoder_graph(ad::Tape& tape, const Bound& b,
                                   const std::vector<int>& src_ids) const {
    check_src(src_ids);
    const int n = static_cast<int>(src_ids.size());
    ad::Var x = tape.add(tape.embed_rows(b.at("embed.tok"), src_ids),
                         tape.embed_rows(b.at("embed.pos_src"), iota_ids(n)));
    for (int i = 0; i < params_.hp.n_layers; ++i) {
        const std::string base = "enc." + std::to_string(i);
        ad::Var normed = layer_norm_at(tape, b, base + ".ln1", x);
        x = tape.add(x, multi_head_attention(tape, attn_vars(b, base + ".self"), normed, normed,
                                             /*causal=*/false, params_.hp.n_heads));
        x = tape.add(x, feed_forward(tape, b, base + ".ffn",
                                     layer_norm_at(tape, b, base + ".ln2", x)));
    }
    return layer_norm_at(tape, b, "enc.final", x);
}

ad::Var Transformer::decoder_graph(ad::Tape& tape, const Bound& b, ad::Var h,
                                   const std::vector<int>& prefix_ids) const {
    check_prefix(prefix_ids);
    const int n = static_cast<int>(prefix_ids.size());
    ad::Var x = tape.add(tape.embed_rows(b.at("embed.tok"), prefix_ids),
                         tape.embed_rows(b.at("embed.pos_tgt"), iota_ids(n)));
    for (int i = 0; i < params_.hp.n_layers; ++i) {
        const std::string base = "dec." + std::to_string(i);
        ad::Var normed = layer_norm_at(tape, b, base + ".ln1", x);
        x = tape.add(x, multi_head_attention(tape, attn_vars(b, base + ".self"), normed, normed,
                                             /*causal=*/true, params_.hp.n_heads));
        x = tape.add(x, multi_head_attention(tape, attn_vars(b, base + ".cross"),
                                             layer_norm_at(tape, b, base + ".ln2", x), h,
                                             /*causal=*/false, params_.hp.n_heads));
        x = tape.add(x, feed_forward(tape, b, base + ".ffn",
                                     layer_norm_at(tape, b, base + ".ln3", x)));
    }
    x = layer_norm_at(tape, b, "dec.final", x);
    ad::Var logits = tape.add_row_broadcast(tape.matmul(x, b.at("out.w")), b.at("out.b"));
    return tape.log_softmax_rows(logits);
}

ad::Var Transformer::sequence_nll_node(ad::Tape& tape, ad::Var logp,
                                       const std::vector<int>& tgt_ids) const {
    if (tgt_ids.size() < 2 || tgt_ids.front() != kBosId || tgt_ids.back() != kEosId) {
        throw DataError("sequence_nll: target must be BOS ... EOS");
    }
    std::vector<std::pair<int, int>> cells;
    cells.reserve(tgt_ids.size() - 1);
    for (std::size_t i = 0; i + 1 < tgt_ids.size(); ++i) {
        cells.emplace_back(static_cast<int>(i), tgt_ids[i + 1]);
    }
    const double w = -1.0 / static_cast<double>(cells.size());
    return tape.pick_sum(logp, std::move(cells), w);
}

ad::Var Transformer::span_nll_node(ad::Tape& tape, ad::Var logp, int prompt_len,
                                   const std::vector<int>& span_ids, SpanNorm norm) const {
    if (span_ids.empty()) {
        throw DataError("span_nll: empty span");
    }
    std::vector<std::pair<int, int>> cells;
    cells.reserve(span_ids.size());
    for (std::size_t j = 0; j < span_ids.size(); ++j) {
        if (span_ids[j] == kPadId) {
            throw DataError("span_nll: span contains PAD");
        }
        cells.emplace_back(prompt_len - 1 + static_cast<int>(j), span_ids[j]);
    }
    const double w =
        norm == SpanNorm::Sum ? -1.0 : -1.0 / static_cast<double>(span_ids.size());
    return tape.pick_sum(logp, std::move(cells), w);
}

ad::Var Transformer::span_prefix_logprob_node(ad::Tape& tape, ad::Var logp, int prompt_len,
                                              const std::vector<int>& span_ids, int t) const {
    if (t < 1 || t > static_cast<int>(span_ids.size())) {
        throw NumericError("span prefix step out of range");
    }
    std::vector<std::pair<int, int>> cells;
    cells.reserve(static_cast<std::size_t>(t));
    for (int j = 0; j < t; ++j) {
        cells.emplace_back(prompt_len - 1 + j, span_ids[static_cast<std::size_t>(j)]);
    }
    return tape.pick_sum(logp, std::move(cells), 1.0);
}

HiddenStates Transformer::encode(const std::vector<int>& src_ids) const {
    ad::Tape tape(false);
    Bound b = bind(tape, false);
    ad::Var h = encoder_graph(tape, b, src_ids);
    if (!h.value().allFinite()) {
        throw NumericError("encode produced non-finite hidden states");
    }
    return {h.value(), static_cast<int>(src_ids.size())};
}

StepLogProbs Transformer::decode_logprobs(const Mat& h, const std::vector<int>& prefix_ids) const {
    ad::Tape tape(false);
    Bound b = bind(tape, false);
    ad::Var logp = decoder_graph(tape, b, tape.constant(h), prefix_ids);
    return {logp.value()};
}

double Transformer::sequence_nll(const Mat& h, const std::vector<int>& tgt_ids) const {
    ad::Tape tape(false);
    Bound b = bind(tape, false);
    ad::Var logp = decoder_graph(tape, b, tape.constant(h), tgt_ids);
    return sequence_nll_node(tape, logp, tgt_ids).value()(0, 0);
}

std::vector<double> prefix_probs_from_logp(const Mat& logp, int prompt_len,
                                           const std::vector<int>& span_ids, int real_len) {
    std::vector<double> out(span_ids.size(), 0.0);
    double cum = 0.0;
    for (int t = 1; t <= static_cast<int>(span_ids.size()); ++t) {
        if (t > real_len) {
            break;  // padded positions: p(pad) = 0 kills every later prefix
        }
        const int row = prompt_len - 1 + t - 1;
        cum += logp(row, span_ids[static_cast<std::size_t>(t - 1)]);
        out[static_cast<std::size_t>(t - 1)] = std::exp(cum);
    }
    return out;
}

std::vector<double> Transformer::span_prefix_probs(const Mat& h,
                                                   const std::vector<int>& prompt_ids,
                                                   const std::vector<int>& span_ids,
                                                   int real_len) const {
    if (span_ids.empty()) {
        throw DataError("span_prefix_probs: empty span");
    }
    std::vector<int> input = prompt_ids;
    input.insert(input.end(), span_ids.begin(), span_ids.begin() + real_len);
    StepLogProbs lp = decode_logprobs(h, input);
    return prefix_probs_from_logp(lp.logp, static_cast<int>(prompt_ids.size()), span_ids,
                                  real_len);
}

double Transformer::span_nll(const Mat& h, const std::vector<int>& prompt_ids,
                             const std::vector<int>& span_ids, SpanNorm norm) const {
    ad::Tape tape(false);
    Bound b = bind(tape, false);
    std::vector<int> input = prompt_ids;
    input.insert(input.end(), span_ids.begin(), span_ids.end());
    ad::Var logp = decoder_graph(tape, b, tape.constant(h), input);
    return span_nll_node(tape, logp, static_cast<int>(prompt_ids.size()), span_ids, norm)
        .value()(0, 0);
}

Mat Transformer::grad_span_nll_wrt_hidden(const Mat& h, const std::vector<int>& prompt_ids,
                                          const std::vector<int>& span_ids,
                                          SpanNorm norm) const {
    ad::Tape tape(true);
    Bound b = bind(tape, false);  // parameters fixed, h is the variable
    ad::Var hv = tape.leaf(h);
    std::vector<int> input = prompt_ids;
    input.insert(input.end(), span_ids.begin(), span_ids.end());
    ad::Var logp = decoder_graph(tape, b, hv, input);
    ad::Var loss = span_nll_node(tape, logp, static_cast<int>(prompt_ids.size()), span_ids, norm);
    if (!std::isfinite(loss.value()(0, 0))) {
        throw NumericError("span NLL is non-finite; cannot differentiate");
    }
    tape.backward(loss);
    Mat g = tape.grad(hv);
    if (!g.allFinite()) {
        throw NumericError("gradient of span NLL w.r.t. hidden states is non-finite");
    }
    return g;
}

void Transformer::apply_gradients(ad::Tape& tape, const Bound& bound, AdamState& opt,
                                  const AdamConfig& cfg, double* grad_norm_out) {
    std::vector<Mat> grads;
    grads.reserve(bound.ordered.size());
    double sq_norm = 0.0;
    for (ad::Var v : bound.ordered) {
        grads.push_back(tape.grad(v));
        if (!grads.back().allFinite()) {
            throw NumericError("non-finite gradient encountered; step aborted");
        }
        sq_norm += grads.back().squaredNorm();
    }
    const double norm = std::sqrt(sq_norm);
    if (grad_norm_out != nullptr) {
        *grad_norm_out = norm;
    }
    const double scale = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm)
                             ? cfg.clip_norm / norm
                             : 1.0;

    opt.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
    auto tensors = tensor_list(params_);
    if (tensors.size() != grads.size() || opt.m.size() != grads.size()) {
        throw NumericError("optimizer state does not match parameter list");
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        Mat g = scale * grads[i];
        Mat& m = opt.m[i];
        Mat& v = opt.v[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square()).matrix();
        const Mat m_hat = m / bc1;
        const Mat v_hat = v / bc2;
        tensors[i].second->array() -=
            cfg.lr * (m_hat.array() / (v_hat.array().sqrt() + cfg.eps));
    }
    if (params_.mode == FloatMode::F32) {
        params_.quantize_to_mode();
        for (std::size_t i = 0; i < opt.m.size(); ++i) {
            for (Mat* mm : {&opt.m[i], &opt.v[i]}) {
                for (Eigen::Index r = 0; r < mm->rows(); ++r) {
                    for (Eigen::Index c = 0; c < mm->cols(); ++c) {
                        (*mm)(r, c) = static_cast<double>(static_cast<float>((*mm)(r, c)));
                    }
                }
            }
        }
    }
}

Transformer::StepStats Transformer::train_step_nll(const std::vector<const TokenizedPair*>& batch,
                                                   AdamState& opt, const AdamConfig& cfg) {
    if (batch.empty()) {
        throw DataError("train_step_nll: empty batch");
    }
    ad::Tape tape(true);
    Bound b = bind(tape, true);
    std::vector<ad::Var> losses;
    losses.reserve(batch.size());
    for (const TokenizedPair* pair : batch) {
        ad::Var h = encoder_graph(tape, b, pair->src_ids);
        ad::Var logp = decoder_graph(tape, b, h, pair->tgt_ids);
        losses.push_back(sequence_nll_node(tape, logp, pair->tgt_ids));
    }
    ad::Var loss = tape.mean_of(losses);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
        std::string ids;
        for (const TokenizedPair* pair : batch) {
            ids += ids.empty() ? pair->id : "," + pair->id;
        }
        throw NumericError("non-finite NLL " + std::to_string(loss_value) + " on batch [" + ids +
                           "]; step aborted");
    }
    tape.backward(loss);
    StepStats stats;
    stats.loss = loss_value;
    apply_gradients(tape, b, opt, cfg, &stats.grad_norm);
    return stats;
}

namespace {

class TransformerPairScorer : public PairScorer {
public:
    TransformerPairScorer(const Transformer& model, Mat h) : model_(model), h_(std::move(h)) {}

    Mat decode_logprobs(const std::vector<int>& prefix_ids) const override {
        return model_.decode_logprobs(h_, prefix_ids).logp;
    }

private:
    const Transformer& model_;
    Mat h_;
};

}  // namespace

std::unique_ptr<PairScorer> TransformerScorer::bind(const std::vector<int>& src_ids) const {
    return std::make_unique<TransformerPairScorer>(model_, model_.encode(src_ids).h);
}

}  // namespace frsum
