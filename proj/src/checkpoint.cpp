#include "frsum/checkpoint.hpp"

#include <cstring>

#include "frsum/common.hpp"

namespace frsum {

namespace {

constexpr char kMagic[9] = "FRSUMCK1";

void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

std::uint64_t read_u64(const std::string& blob, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[at + i])) << (8 * i);
    }
    return v;
}

void append_tensor(std::string& out, const Mat& m, FloatMode mode) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (mode == FloatMode::F32) {
                const float f = static_cast<float>(m(r, c));
                char buf[4];
                std::memcpy(buf, &f, 4);
                out.append(buf, 4);
            } else {
                const double d = m(r, c);
                char buf[8];
                std::memcpy(buf, &d, 8);
                out.append(buf, 8);
            }
        }
    }
}

void read_tensor(const std::string& blob, std::size_t& at, Mat& m, FloatMode mode) {
    const std::size_t width = mode == FloatMode::F32 ? 4 : 8;
    const std::size_t need = width * static_cast<std::size_t>(m.size());
    if (at + need > blob.size()) {
        throw IntegrityError("checkpoint blob too short for tensor data");
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (mode == FloatMode::F32) {
                float f;
                std::memcpy(&f, blob.data() + at, 4);
                m(r, c) = static_cast<double>(f);
            } else {
                double d;
                std::memcpy(&d, blob.data() + at, 8);
                m(r, c) = d;
            }
            at += width;
        }
    }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const ModelParams& p = ckpt.params;
    const std::size_t width = p.mode == FloatMode::F32 ? 4 : 8;

    nlohmann::ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["dtype"] = to_string(p.mode);
    manifest["hparams"] = {{"vocab_size", p.hp.vocab_size}, {"d_model", p.hp.d_model},
                           {"n_layers", p.hp.n_layers},     {"n_heads", p.hp.n_heads},
                           {"d_ff", p.hp.d_ff},             {"max_src_len", p.hp.max_src_len},
                           {"max_tgt_len", p.hp.max_tgt_len}};
    manifest["vocab"] = ckpt.vocab.tokens();
    manifest["vocab_hash"] = hash_tag(ckpt.vocab.content_hash());

    std::string blob;
    nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
    for (const auto& [name, mat] : tensor_list(p)) {
        tensors.push_back({{"name", name},
                           {"rows", mat->rows()},
                           {"cols", mat->cols()},
                           {"offset", blob.size()}});
        append_tensor(blob, *mat, p.mode);
    }
    manifest["tensors"] = tensors;
    manifest["optimizer"] = {{"present", ckpt.has_optimizer},
                             {"step", ckpt.has_optimizer ? ckpt.opt.step : 0}};
    if (ckpt.has_optimizer) {
        for (const Mat& m : ckpt.opt.m) {
            append_tensor(blob, m, p.mode);
        }
        for (const Mat& m : ckpt.opt.v) {
            append_tensor(blob, m, p.mode);
        }
    }
    manifest["blob_bytes"] = blob.size();
    manifest["train_meta"] = ckpt.train_meta;

    const std::string manifest_str = manifest.dump();
    std::string out;
    out.reserve(8 + 8 + manifest_str.size() + blob.size());
    out.append(kMagic, 8);
    append_u64(out, manifest_str.size());
    out += manifest_str;
    out += blob;
    write_file(path, out);
    (void)width;
}

Checkpoint load_checkpoint(const std::string& path, bool strict) {
    const std::string raw = read_file(path);
    if (raw.size() < 16 || std::memcmp(raw.data(), kMagic, 8) != 0) {
        throw IntegrityError("not a checkpoint file: " + path);
    }
    const std::uint64_t manifest_len = read_u64(raw, 8);
    if (16 + manifest_len > raw.size()) {
        throw IntegrityError("checkpoint manifest truncated: " + path);
    }
    nlohmann::ordered_json manifest;
    try {
        manifest = nlohmann::ordered_json::parse(raw.substr(16, manifest_len));
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
    }
    if (manifest.value("format_version", 0) != 1) {
        throw IntegrityError("unsupported checkpoint format_version");
    }

    Checkpoint ckpt;
    const auto& hj = manifest.at("hparams");
    ModelHParams hp;
    hp.vocab_size = hj.at("vocab_size").get<int>();
    hp.d_model = hj.at("d_model").get<int>();
    hp.n_layers = hj.at("n_layers").get<int>();
    hp.n_heads = hj.at("n_heads").get<int>();
    hp.d_ff = hj.at("d_ff").get<int>();
    hp.max_src_len = hj.at("max_src_len").get<int>();
    hp.max_tgt_len = hj.at("max_tgt_len").get<int>();
    hp.validate();

    const FloatMode mode = float_mode_from_string(manifest.at("dtype").get<std::string>());
    ckpt.vocab = Vocab::from_tokens(manifest.at("vocab").get<std::vector<std::string>>());
    if (strict) {
        const std::string expect = manifest.at("vocab_hash").get<std::string>();
        if (hash_tag(ckpt.vocab.content_hash()) != expect) {
            throw IntegrityError("vocab hash mismatch in checkpoint " + path);
        }
    }
    if (ckpt.vocab.size() != hp.vocab_size) {
        throw IntegrityError("checkpoint vocab size disagrees with hparams");
    }

    ckpt.params = ModelParams::init(hp, mode, 0);  // shapes; values overwritten below
    ckpt.params.mode = mode;

    const std::string blob = raw.substr(16 + manifest_len);
    if (manifest.at("blob_bytes").get<std::size_t>() != blob.size()) {
        throw IntegrityError("checkpoint blob length mismatch (expected " +
                             std::to_string(manifest.at("blob_bytes").get<std::size_t>()) +
                             ", found " + std::to_string(blob.size()) + ")");
    }

    auto tensors = tensor_list(ckpt.params);
    const auto& tj = manifest.at("tensors");
    if (tj.size() != tensors.size()) {
        throw IntegrityError("checkpoint tensor count mismatch");
    }
    std::size_t at = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& rec = tj[i];
        if (rec.at("name").get<std::string>() != tensors[i].first ||
            rec.at("rows").get<Eigen::Index>() != tensors[i].second->rows() ||
            rec.at("cols").get<Eigen::Index>() != tensors[i].second->cols()) {
            throw IntegrityError("checkpoint tensor record mismatch at " + tensors[i].first);
        }
        if (rec.at("offset").get<std::size_t>() != at) {
            throw IntegrityError("checkpoint tensor offset mismatch at " + tensors[i].first);
        }
        read_tensor(blob, at, *tensors[i].second, mode);
    }

    ckpt.has_optimizer = manifest.at("optimizer").at("present").get<bool>();
    if (ckpt.has_optimizer) {
        ckpt.opt = AdamState::init(ckpt.params);
        ckpt.opt.step = manifest.at("optimizer").at("step").get<long long>();
        for (Mat& m : ckpt.opt.m) {
            read_tensor(blob, at, m, mode);
        }
        for (Mat& m : ckpt.opt.v) {
            read_tensor(blob, at, m, mode);
        }
    }
    if (at != blob.size()) {
        throw IntegrityError("checkpoint blob has trailing bytes");
    }
    if (!ckpt.params.all_finite()) {
        throw IntegrityError("checkpoint holds non-finite parameters");
    }
    ckpt.train_meta = manifest.value("train_meta", nlohmann::ordered_json::object());
    return ckpt;
}

}  // namespace frsum
