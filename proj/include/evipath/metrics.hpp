#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace evipath::metrics {

// Answer normalization: lowercase, strip punctuation and symbols, drop the
// articles "a"/"an"/"the" as whole tokens, collapse whitespace. Idempotent.
std::string normalize(std::string_view text);

std::vector<std::string> tokenize(std::string_view normalized);

bool exact_match(std::string_view pred, std::string_view gold);

// Token-level F1 over the multiset intersection of normalized tokens.
// Both sides empty after normalization -> 1.0; exactly one empty -> 0.0.
double f1(std::string_view pred, std::string_view gold);

struct Prediction {
    std::string sample_id;
    std::string text;
    std::string termination; // optional annotation carried into the report
};

struct SampleScore {
    std::string sample_id;
    bool em = false;
    double f1 = 0.0;
    std::string termination;
};

struct EvalReport {
    size_t n = 0;
    double em = 0.0;     // mean over samples
    double f1 = 0.0;     // mean over samples
    double em_sum = 0.0; // raw sums, exposed for transparency
    double f1_sum = 0.0;
    std::vector<SampleScore> per_sample;
};

// golds: (sample_id, gold answer) in report order. A prediction whose id is
// not present in golds raises IdMismatch; a gold with no prediction scores 0.
EvalReport evaluate(const std::vector<Prediction>& predictions,
                    const std::vector<std::pair<std::string, std::string>>& golds);

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

} // namespace evipath::metrics
