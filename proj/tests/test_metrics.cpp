// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "rtpd/error.h"
#include "rtpd/metrics.h"

using namespace rtpd;

namespace {

// Reports from per-epoch (mean, max) pairs for the teacher and one student "s".
std::vector<EpochReport> series(const std::vector<std::pair<double, double>>& teacher,
                                const std::vector<std::pair<double, double>>& student) {
    std::vector<EpochReport> out;
    for (std::size_t e = 0; e < teacher.size(); ++e)
        out.push_back({int(e) + 1,
                       {{"teacher", teacher[e].first, teacher[e].second, 0, 0},
                        {"s", student[e].first, student[e].second, 0, 0}}});
    fill_percentages(out, return_shift(out));
    return out;
}

}  // namespace

TEST(MaxPct, Examples) {
    const auto r = series({{1, 2}, {1, 4}, {1, 4}}, {{1, 1}, {1, 3}, {1, 2}});
    EXPECT_EQ(return_shift(r), 0.0);
    EXPECT_DOUBLE_EQ(max_pct(r, "s", 0.0), 75.0);
    EXPECT_DOUBLE_EQ(max_pct(r, "teacher", 0.0), 100.0);
    const auto same = series({{1, 2}, {3, 4}}, {{1, 2}, {3, 4}});
    EXPECT_DOUBLE_EQ(max_pct(same, "s", 0.0), 100.0);
    EXPECT_THROW(max_pct(r, "nobody", 0.0), InvalidInput);
    EXPECT_THROW(max_pct(std::vector<EpochReport>{}, "s", 0.0), InvalidInput);
}

TEST(MeanLastK, Examples) {
    std::vector<std::pair<double, double>> t(12, {2.0, 2.0}), s(12, {1.0, 1.0});
    const auto half = series(t, s);
    const auto m = mean_last_k_pct(half, "s", 10);
    EXPECT_DOUBLE_EQ(m.value, 50.0);
    EXPECT_EQ(m.epochs_used, 10u);
    EXPECT_FALSE(m.flagged);

    std::vector<std::pair<double, double>> t2, s2;
    for (int e = 0; e < 14; ++e) {
        t2.push_back({100.0, 100.0});
        s2.push_back({e < 4 ? 10.0 : 91.0 + (e - 4), 100.0});
    }
    EXPECT_DOUBLE_EQ(mean_last_k_pct(series(t2, s2), "s", 10).value, 95.5);

    const auto few = mean_last_k_pct(series({{2, 2}, {2, 2}}, {{1, 1}, {2, 2}}), "s", 10);
    EXPECT_TRUE(few.flagged);
    EXPECT_EQ(few.epochs_used, 2u);
    EXPECT_DOUBLE_EQ(few.value, 75.0);
    EXPECT_DOUBLE_EQ(mean_last_k_pct(half, "teacher", 10).value, 100.0);
}

TEST(MeanLastK, AllEpochsEqualsOverallMean) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    std::vector<std::pair<double, double>> t, s;
    for (int e = 0; e < 15; ++e) {
        t.push_back({u(rng), u(rng)});
        s.push_back({u(rng), u(rng)});
    }
    const auto r = series(t, s);
    double sum = 0.0;
    for (const auto& rep : r) sum += rep.score("s").pct_of_teacher_mean;
    EXPECT_NEAR(mean_last_k_pct(r, "s", 15).value, sum / 15.0, 1e-12);
}

TEST(Metrics, ShiftedReturnsHandTable) {
    // min observed return -1.0 -> shift 2.0
    //   epoch  teacher mean/max  student mean/max  pct mean          pct max
    //   1      -0.5 / 0.0        -1.0 / -0.5       1.0/1.5 = 66.667  1.5/2.0 = 75
    //   2       0.5 / 1.0         0.0 /  0.5       2.0/2.5 = 80      2.5/3.0 = 83.333
    //   3       1.0 / 1.0         1.0 /  0.8       3.0/3.0 = 100     2.8/3.0 = 93.333
    const auto r = series({{-0.5, 0.0}, {0.5, 1.0}, {1.0, 1.0}}, {{-1.0, -0.5}, {0.0, 0.5}, {1.0, 0.8}});
    const double shift = return_shift(r);
    EXPECT_DOUBLE_EQ(shift, 2.0);
    const double mean_pct[] = {100.0 / 1.5, 80.0, 100.0};
    const double max_pct_row[] = {75.0, 250.0 / 3.0, 280.0 / 3.0};
    for (int e = 0; e < 3; ++e) {
        EXPECT_NEAR(r[e].score("s").pct_of_teacher_mean, mean_pct[e], 1e-12);
        EXPECT_NEAR(r[e].score("s").pct_of_teacher_max, max_pct_row[e], 1e-12);
        EXPECT_EQ(r[e].score("teacher").pct_of_teacher_mean, 100.0);
    }
    EXPECT_NEAR(max_pct(r, "s", shift), 280.0 / 3.0, 1e-12);
    EXPECT_NEAR(mean_last_k_pct(r, "s", 10).value, (100.0 / 1.5 + 80.0 + 100.0) / 3.0, 1e-12);
    const auto j = metrics_json(r, shift);
    EXPECT_EQ(j.at("shift").get<double>(), 2.0);
    EXPECT_EQ(j.at("models")[1].at("model"), "s");
    EXPECT_EQ(j.at("models")[1].at("shift").get<double>(), 2.0);
    EXPECT_EQ(j.at("models")[1].at("final_mean_return").get<double>(), 1.0);
}

TEST(Metrics, UndefinedWhenShiftedTeacherNotPositive) {
    std::vector<EpochReport> r{{1, {{"teacher", 0.0, 0.0, 0, 0}, {"s", 1.0, 1.0, 0, 0}}}};
    EXPECT_THROW(fill_percentages(r, 0.0), UndefinedPercentage);
}

TEST(Metrics, ScaleInvariantForPositiveReturns) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    std::vector<std::pair<double, double>> t, s;
    for (int e = 0; e < 12; ++e) {
        t.push_back({u(rng), u(rng)});
        s.push_back({u(rng), u(rng)});
    }
    const auto a = series(t, s);
    for (double c : {0.01, 3.0, 1000.0}) {
        auto t2 = t, s2 = s;
        for (auto& p : t2) p = {c * p.first, c * p.second};
        for (auto& p : s2) p = {c * p.first, c * p.second};
        const auto b = series(t2, s2);
        EXPECT_NEAR(max_pct(b, "s", 0.0), max_pct(a, "s", 0.0), 1e-9);
        EXPECT_NEAR(mean_last_k_pct(b, "s").value, mean_last_k_pct(a, "s").value, 1e-9);
    }
}

TEST(Csv, RoundTripIsExact) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n;
    std::vector<std::pair<double, double>> t, s;
    for (int e = 0; e < 7; ++e) {
        t.push_back({n(rng), n(rng)});
        s.push_back({n(rng) / 3.0, n(rng) * 1e-7});
    }
    const auto r = series(t, s);
    const auto text = epochs_csv(r);
    EXPECT_EQ(text.substr(0, kEpochsCsvHeader.size()), kEpochsCsvHeader);
    const auto back = parse_epochs_csv(text);
    ASSERT_EQ(back.size(), r.size());
    for (std::size_t e = 0; e < r.size(); ++e)
        for (const auto& name : {"teacher", "s"}) {
            const auto &x = r[e].score(name), &y = back[e].score(name);
            EXPECT_EQ(x.mean_return, y.mean_return);
            EXPECT_EQ(x.max_return, y.max_return);
            EXPECT_EQ(x.pct_of_teacher_mean, y.pct_of_teacher_mean);
            EXPECT_EQ(x.pct_of_teacher_max, y.pct_of_teacher_max);
        }
    const double shift = return_shift(back);
    EXPECT_EQ(shift, return_shift(r));
    EXPECT_EQ(max_pct(back, "s", shift), max_pct(r, "s", shift));
    EXPECT_EQ(mean_last_k_pct(back, "s").value, mean_last_k_pct(r, "s").value);
    EXPECT_EQ(epochs_csv(back), text);
    EXPECT_THROW(parse_epochs_csv("epoch,model\n1,teacher\n"), InvalidInput);
}

TEST(Format, OneDecimal) {
    EXPECT_EQ(format_pct(95.2), "95.2");
    EXPECT_EQ(format_pct(95.24), "95.2");
    EXPECT_EQ(format_pct(100.0), "100.0");
    EXPECT_EQ(format_pct(25.2876), "25.3");
}
