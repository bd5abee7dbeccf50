// SPDX-License-Identifier: Apache-2.0
#include "rtpd/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "rtpd/error.h"

namespace rtpd {

const ModelScore& EpochReport::score(std::string_view model) const {
    for (const auto& s : scores)
        if (s.model == model) return s;
    throw InvalidInput("epoch " + std::to_string(epoch) + " has no score for '" + std::string(model) + "'");
}

double return_shift(std::span<const EpochReport> reports) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& r : reports)
        for (const auto& s : r.scores) lo = std::min({lo, s.mean_return, s.max_return});
    if (!std::isfinite(lo) || lo > 0.0) return 0.0;
    return 1.0 - lo;
}

namespace {

double pct(double student, double teacher, double shift) {
    const double denom = teacher + shift;
    if (!(denom > 0.0))
        throw UndefinedPercentage("teacher score plus shift is not positive; percentage undefined");
    return 100.0 * (student + shift) / denom;
}

}  // namespace

void fill_percentages(std::span<EpochReport> reports, double shift, std::string_view teacher) {
    for (auto& r : reports) {
        const ModelScore t = r.score(teacher);
        for (auto& s : r.scores) {
            if (s.model == teacher) {
                pct(t.mean_return, t.mean_return, shift);  // still validates the denominator
                pct(t.max_return, t.max_return, shift);
                s.pct_of_teacher_mean = 100.0;
                s.pct_of_teacher_max = 100.0;
                continue;
            }
            s.pct_of_teacher_mean = pct(s.mean_return, t.mean_return, shift);
            s.pct_of_teacher_max = pct(s.max_return, t.max_return, shift);
        }
    }
}

double max_pct(std::span<const EpochReport> reports, std::string_view model, double shift,
               std::string_view teacher) {
    if (reports.empty()) throw InvalidInput("max_pct needs at least one epoch");
    double best_student = -std::numeric_limits<double>::infinity();
    double best_teacher = -std::numeric_limits<double>::infinity();
    for (const auto& r : reports) {
        best_student = std::max(best_student, r.score(model).max_return);
        best_teacher = std::max(best_teacher, r.score(teacher).max_return);
    }
    return pct(best_student, best_teacher, shift);
}

LastKPct mean_last_k_pct(std::span<const EpochReport> reports, std::string_view model, std::size_t k) {
    if (reports.empty()) throw InvalidInput("mean_last_k_pct needs at least one epoch");
    if (k == 0) throw InvalidInput("k must be positive");
    LastKPct out;
    out.flagged = reports.size() < k;
    out.epochs_used = std::min(k, reports.size());
    double sum = 0.0;
    for (std::size_t i = reports.size() - out.epochs_used; i < reports.size(); ++i)
        sum += reports[i].score(model).pct_of_teacher_mean;
    out.value = sum / static_cast<double>(out.epochs_used);
    return out;
}

std::string format_pct(double pct) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", pct);
    return buf;
}

std::vector<std::string> model_names(std::span<const EpochReport> reports) {
    std::vector<std::string> names;
    for (const auto& r : reports)
        for (const auto& s : r.scores)
            if (std::find(names.begin(), names.end(), s.model) == names.end()) names.push_back(s.model);
    return names;
}

namespace {

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_num(std::string_view s, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InvalidInput("epochs.csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::string epochs_csv(std::span<const EpochReport> reports) {
    std::string out(kEpochsCsvHeader);
    out += '\n';
    for (const auto& r : reports)
        for (const auto& s : r.scores) {
            out += std::to_string(r.epoch) + ',' + s.model + ',' + num(s.mean_return) + ',' + num(s.max_return) +
                   ',' + num(s.pct_of_teacher_mean) + ',' + num(s.pct_of_teacher_max) + '\n';
        }
    return out;
}

std::vector<EpochReport> parse_epochs_csv(std::string_view text) {
    std::vector<EpochReport> reports;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kEpochsCsvHeader) throw InvalidInput("epochs.csv: unexpected header");
            continue;
        }
        std::vector<std::string_view> f;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i)
            if (i == line.size() || line[i] == ',') {
                f.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        if (f.size() != 6) throw InvalidInput("epochs.csv line " + std::to_string(line_no) + ": expected 6 fields");
        const int epoch = static_cast<int>(parse_num(f[0], line_no));
        if (reports.empty() || reports.back().epoch != epoch) {
            if (!reports.empty() && epoch <= reports.back().epoch)
                throw InvalidInput("epochs.csv: epoch indices must increase");
            reports.push_back(EpochReport{epoch, {}});
        }
        reports.back().scores.push_back(ModelScore{std::string(f[1]), parse_num(f[2], line_no),
                                                   parse_num(f[3], line_no), parse_num(f[4], line_no),
                                                   parse_num(f[5], line_no)});
    }
    return reports;
}

nlohmann::json metrics_json(std::span<const EpochReport> reports, double shift, std::size_t k,
                            std::string_view teacher) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& name : model_names(reports)) {
        const auto last = mean_last_k_pct(reports, name, k);
        double best_mean = -std::numeric_limits<double>::infinity();
        double best_max = -std::numeric_limits<double>::infinity();
        for (const auto& r : reports) {
            best_mean = std::max(best_mean, r.score(name).mean_return);
            best_max = std::max(best_max, r.score(name).max_return);
        }
        models.push_back({{"model", name},
                          {"max_pct", max_pct(reports, name, shift, teacher)},
                          {"mean_last10_pct", last.value},
                          {"mean_last_k_epochs_used", last.epochs_used},
                          {"mean_last_k_flagged", last.flagged},
                          {"shift", shift},
                          {"final_mean_return", reports.back().score(name).mean_return},
                          {"best_mean_return", best_mean},
                          {"best_max_return", best_max}});
    }
    return {{"teacher", teacher}, {"shift", shift}, {"last_k", k}, {"epochs", reports.size()}, {"models", models}};
}

}  // namespace rtpd
