#include "frsum/report.hpp"

#include <algorithm>
#include <cstdio>

#include "frsum/common.hpp"

namespace frsum {

namespace {

nlohmann::ordered_json counts_json(const KindCounts& kc) {
    return {{"successes", kc.successes}, {"denominator", kc.denominator}};
}

nlohmann::ordered_json rate_json(const std::optional<double>& e) {
    if (!e.has_value()) {
        return nullptr;
    }
    return *e;
}

std::string fmt_rate(const nlohmann::ordered_json& v) {
    if (v.is_null()) {
        return "n/a";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v.get<double>());
    return buf;
}

}  // namespace

nlohmann::ordered_json robustness_report_json(const RobustnessReport& report,
                                              const nlohmann::ordered_json& effective_config,
                                              const std::string& corpus_hash,
                                              const std::string& checkpoint_hash) {
    nlohmann::ordered_json j;
    j["type"] = "robustness_report";
    j["e_mix"] = rate_json(report.e_mix);
    j["e_entity"] = rate_json(report.e_entity);
    j["e_number"] = rate_json(report.e_number);
    j["counts"] = {{"mix", counts_json(report.mix)},
                   {"entity", counts_json(report.entity)},
                   {"number", counts_json(report.number)}};
    j["skipped_spans"] = report.skipped_spans;
    j["failed_spans"] = report.failed_spans;
    j["seed"] = report.seed;
    j["adv_cap"] = report.adv_cap;
    j["kinds"] = to_string(report.kinds);
    j["corpus_hash"] = corpus_hash;
    j["model_checkpoint_hash"] = checkpoint_hash;
    nlohmann::ordered_json docs = nlohmann::ordered_json::array();
    for (const auto& d : report.per_document) {
        docs.push_back({{"id", d.id},
                        {"evaluated", d.evaluated},
                        {"successes", d.successes},
                        {"skipped", d.skipped},
                        {"failed", d.failed}});
    }
    j["per_document"] = docs;
    j["config"] = effective_config;
    return j;
}

ReportComparison compare_reports(const std::vector<std::string>& paths,
                                 const std::vector<nlohmann::ordered_json>& reports) {
    if (reports.empty() || paths.size() != reports.size()) {
        throw DataError("compare_reports: need at least one report");
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (!reports[i].is_object() || reports[i].value("type", "") != "robustness_report") {
            throw DataError(paths[i] + " is not a robustness report");
        }
    }
    const std::string corpus_hash = reports[0].at("corpus_hash").get<std::string>();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const std::string other = reports[i].at("corpus_hash").get<std::string>();
        if (other != corpus_hash) {
            throw DataError("corpus hash mismatch: " + paths[0] + " has " + corpus_hash +
                            " but " + paths[i] + " has " + other + "; refusing comparison");
        }
    }

    ReportComparison out;
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    std::size_t best = 0;
    bool best_defined = false;
    double best_e = 0.0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        nlohmann::ordered_json col;
        col["path"] = paths[i];
        col["e_mix"] = r.at("e_mix");
        col["e_entity"] = r.at("e_entity");
        col["e_number"] = r.at("e_number");
        col["model_checkpoint_hash"] = r.at("model_checkpoint_hash");
        if (!r.at("e_mix").is_null()) {
            const double e = r.at("e_mix").get<double>();
            if (!best_defined || e < best_e) {
                best_defined = true;
                best_e = e;
                best = i;
            }
        }
        if (i > 0 && !r.at("e_mix").is_null() && !reports[0].at("e_mix").is_null()) {
            col["e_mix_delta_vs_first"] =
                r.at("e_mix").get<double>() - reports[0].at("e_mix").get<double>();
        }
        cols.push_back(col);
    }

    std::string text;
    text += "corpus: " + corpus_hash + "\n";
    for (const char* metric : {"e_mix", "e_entity", "e_number"}) {
        text += metric;
        text.resize(((text.size() / 12) + 1) * 12, ' ');
        for (std::size_t i = 0; i < reports.size(); ++i) {
            std::string cell = fmt_rate(reports[i].at(metric));
            if (i > 0 && !reports[i].at(metric).is_null() &&
                !reports[0].at(metric).is_null()) {
                const double delta = reports[i].at(metric).get<double>() -
                                     reports[0].at(metric).get<double>();
                char buf[48];
                std::snprintf(buf, sizeof(buf), " (%+.6f%s)", delta,
                              delta < 0.0 ? ", improved" : "");
                cell += buf;
            }
            text += "  " + cell;
        }
        text += "\n";
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        text += "  [" + std::to_string(i) + "] " + paths[i] + "\n";
    }
    if (best_defined) {
        text += "most factually robust (lowest e_mix): " + paths[best] + "\n";
    } else {
        text += "no defined e_mix in any report\n";
    }

    out.text = text;
    out.summary["type"] = "report_comparison";
    out.summary["corpus_hash"] = corpus_hash;
    out.summary["reports"] = cols;
    out.summary["most_robust"] = best_defined ? nlohmann::ordered_json(paths[best])
                                              : nlohmann::ordered_json(nullptr);
    return out;
}

}  // namespace frsum
