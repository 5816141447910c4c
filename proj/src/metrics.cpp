#include "evipath/metrics.hpp"

#include "evipath/errors.hpp"
#include "evipath/unicode.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

namespace evipath::metrics {

std::string normalize(std::string_view text) {
    std::string lowered;
    lowered.reserve(text.size());
    bool pending_space = false;
    size_t i = 0;
    while (i < text.size()) {
        char32_t cp;
        i = unicode::decode_utf8(text, i, cp);
        if (unicode::is_space(cp)) {
            pending_space = !lowered.empty();
            continue;
        }
        if (unicode::is_punct_or_symbol(cp)) continue; // removed, not spaced
        if (pending_space) {
            lowered.push_back(' ');
            pending_space = false;
        }
        unicode::encode_utf8(unicode::to_lower(cp), lowered);
    }

    // Drop article tokens.
    std::string out;
    out.reserve(lowered.size());
    size_t start = 0;
    while (start <= lowered.size()) {
        size_t end = lowered.find(' ', start);
        if (end == std::string::npos) end = lowered.size();
        std::string_view tok(lowered.data() + start, end - start);
        if (!tok.empty() && tok != "a" && tok != "an" && tok != "the") {
            if (!out.empty()) out.push_back(' ');
            out.append(tok);
        }
        if (end == lowered.size()) break;
        start = end + 1;
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view normalized) {
    std::vector<std::string> tokens;
    size_t start = 0;
    while (start < normalized.size()) {
        size_t end = normalized.find(' ', start);
        if (end == std::string_view::npos) end = normalized.size();
        if (end > start) tokens.emplace_back(normalized.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

bool exact_match(std::string_view pred, std::string_view gold) {
    return normalize(pred) == normalize(gold);
}

double f1(std::string_view pred, std::string_view gold) {
    auto pred_tokens = tokenize(normalize(pred));
    auto gold_tokens = tokenize(normalize(gold));
    if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
    if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;

    std::unordered_map<std::string, int> gold_counts;
    for (const auto& t : gold_tokens) ++gold_counts[t];
    size_t common = 0;
    for (const auto& t : pred_tokens) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    double p = static_cast<double>(common) / static_cast<double>(pred_tokens.size());
    double r = static_cast<double>(common) / static_cast<double>(gold_tokens.size());
    return 2.0 * p * r / (p + r);
}

EvalReport evaluate(const std::vector<Prediction>& predictions,
                    const std::vector<std::pair<std::string, std::string>>& golds) {
    std::map<std::string, const Prediction*> by_id;
    std::map<std::string, bool> known;
    for (const auto& [id, answer] : golds) known[id] = true;
    for (const auto& pred : predictions) {
        if (!known.count(pred.sample_id))
            throw IdMismatch("prediction for unknown sample: " + pred.sample_id);
        by_id[pred.sample_id] = &pred;
    }

    EvalReport report;
    report.n = golds.size();
    for (const auto& [id, gold_answer] : golds) {
        SampleScore score;
        score.sample_id = id;
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            score.em = false;
            score.f1 = 0.0;
            score.termination = "missing";
        } else {
            score.em = exact_match(it->second->text, gold_answer);
            score.f1 = f1(it->second->text, gold_answer);
            score.termination = it->second->termination;
        }
        report.em_sum += score.em ? 1.0 : 0.0;
        report.f1_sum += score.f1;
        report.per_sample.push_back(std::move(score));
    }
    if (report.n > 0) {
        report.em = report.em_sum / static_cast<double>(report.n);
        report.f1 = report.f1_sum / static_cast<double>(report.n);
    }
    return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["n"] = report.n;
    doc["em"] = report.em;
    doc["f1"] = report.f1;
    doc["em_sum"] = report.em_sum;
    doc["f1_sum"] = report.f1_sum;
    auto& rows = doc["per_sample"] = nlohmann::ordered_json::array();
    for (const auto& s : report.per_sample) {
        nlohmann::ordered_json row;
        row["sample_id"] = s.sample_id;
        row["em"] = s.em ? 1 : 0;
        row["f1"] = s.f1;
        row["termination"] = s.termination;
        rows.push_back(std::move(row));
    }
    return doc;
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream os;
    char line[128];
    std::snprintf(line, sizeof(line), "%-24s %8s %8s %s\n", "sample_id", "EM", "F1",
                  "termination");
    os << line;
    for (const auto& s : report.per_sample) {
        std::snprintf(line, sizeof(line), "%-24s %8d %8.4f %s\n", s.sample_id.c_str(),
                      s.em ? 1 : 0, s.f1, s.termination.c_str());
        os << line;
    }
    std::snprintf(line, sizeof(line), "%-24s %8.4f %8.4f (n=%zu)\n", "mean", report.em,
                  report.f1, report.n);
    os << line;
    return os.str();
}

} // namespace evipath::metrics
