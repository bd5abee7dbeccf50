// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rtpd {

struct ModelScore {
    std::string model;
    double mean_return = 0.0;
    double max_return = 0.0;
    double pct_of_teacher_mean = 0.0;
    double pct_of_teacher_max = 0.0;
};

struct EpochReport {
    int epoch = 0;
    std::vector<ModelScore> scores;

    const ModelScore& score(std::string_view model) const;  // throws InvalidInput if absent
};

inline constexpr std::string_view kTeacherName = "teacher";

/// Affine shift applied to returns before any percentage is taken: 0 when every
/// observed return (mean and max, all models, all epochs) is positive, otherwise
/// 1 - min observed return.
double return_shift(std::span<const EpochReport> reports);

/// Fills pct_of_teacher_{mean,max} for every model at every epoch:
/// 100 * (student + shift) / (teacher + shift) on the matched epoch.
/// Throws UndefinedPercentage if a shifted teacher score is not positive.
void fill_percentages(std::span<EpochReport> reports, double shift, std::string_view teacher = kTeacherName);

/// 100 * (max_epochs student max_return + shift) / (max_epochs teacher max_return + shift)
double max_pct(std::span<const EpochReport> reports, std::string_view model, double shift,
               std::string_view teacher = kTeacherName);

struct LastKPct {
    double value = 0.0;
    std::size_t epochs_used = 0;
    bool flagged = false;  // fewer than k epochs were available
};

/// Mean of pct_of_teacher_mean over the final k epochs (all epochs, flagged, if fewer).
LastKPct mean_last_k_pct(std::span<const EpochReport> reports, std::string_view model, std::size_t k = 10);

/// One decimal place, e.g. "95.2".
std::string format_pct(double pct);

std::vector<std::string> model_names(std::span<const EpochReport> reports);

inline constexpr std::string_view kEpochsCsvHeader =
    "epoch,model,mean_return,max_return,pct_of_teacher_mean,pct_of_teacher_max";

/// Numbers are written with round-trip precision.
std::string epochs_csv(std::span<const EpochReport> reports);
std::vector<EpochReport> parse_epochs_csv(std::string_view text);

/// {"teacher":..., "shift":..., "last_k":k, "models":[{"model","max_pct","mean_last10_pct","shift",...}]}
nlohmann::json metrics_json(std::span<const EpochReport> reports, double shift, std::size_t k = 10,
                            std::string_view teacher = kTeacherName);

}  // namespace rtpd
