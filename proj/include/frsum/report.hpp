#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "frsum/attack.hpp"

namespace frsum {

// Full report artifact: E values, counts, per-document breakdown, plus the
// effective config and input hashes so any run is replayable from the file.
nlohmann::ordered_json robustness_report_json(const RobustnessReport& report,
                                              const nlohmann::ordered_json& effective_config,
                                              const std::string& corpus_hash,
                                              const std::string& checkpoint_hash);

struct ReportComparison {
    std::string text;                // side-by-side table
    nlohmann::ordered_json summary;  // machine-readable version
};

// Side-by-side E values with deltas against the first report. Refuses to
// compare reports produced from different corpora.
ReportComparison compare_reports(const std::vector<std::string>& paths,
                                 const std::vector<nlohmann::ordered_json>& reports);

}  // namespace frsum
