#include "osnrpert/margin.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace osnrpert;

TEST(PerturbedSnr, FixedPoints) {
    EXPECT_EQ(perturbed_snr({0.0, 56.8e9, 5.68e9}), 0.0);
    EXPECT_EQ(perturbed_snr({12.3, 56.8e9, 0.0}), 12.3);
}

TEST(PerturbedSnr, TenPercentOfBandAtTenDb) {
    const double s = perturbed_snr({10.0, 56.8e9, 5.68e9});
    EXPECT_NEAR(s, std::pow(11.0, 1.0 / 0.9) - 1.0, 1e-12);
    EXPECT_NEAR(s, 13.36, 0.005);
    EXPECT_NEAR(10 * std::log10(s), 11.26, 0.005);
    EXPECT_NEAR(10 * std::log10(s) - 10.0, 1.26, 0.005);
}

TEST(PerturbedSnr, RejectsBandwidthAtOrAboveBaud) {
    EXPECT_THROW(perturbed_snr({10.0, 56.8e9, 56.8e9}), std::invalid_argument);
    EXPECT_THROW(perturbed_snr({10.0, 56.8e9, 60e9}), std::invalid_argument);
    EXPECT_THROW(perturbed_snr({-1.0, 56.8e9, 1e9}), std::invalid_argument);
}

TEST(PerturbedSnr, PreservesCapacity) {
    const double b = 56.8e9;
    for (int i = 0; i < 1000; ++i) {
        const double snr = std::pow(10.0, (-10.0 + 40.0 * (i % 50) / 49.0) / 10.0);
        const double bwd = b * 0.9 * (i / 50) / 19.0;
        const double s2 = perturbed_snr({snr, b, bwd});
        const double lhs = (b - bwd) * std::log2(1.0 + s2);
        const double rhs = b * std::log2(1.0 + snr);
        ASSERT_NEAR(lhs / rhs, 1.0, 1e-12) << snr << " " << bwd;
    }
}

TEST(MarginCurve, MonotoneInBandwidthAndSnr) {
    std::vector<double> bwds{0.0, 0.5e9, 1e9, 2e9, 4e9, 5.68e9};
    std::vector<double> grid;
    for (double s = 0.0; s <= 30.0; s += 0.5) grid.push_back(s);
    const auto pts = margin_curve(56.8e9, bwds, grid);
    ASSERT_EQ(pts.size(), bwds.size() * grid.size());
    for (std::size_t b = 0; b < bwds.size(); ++b)
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const auto& p = pts[b * grid.size() + s];
            if (bwds[b] == 0.0) {
                EXPECT_EQ(p.penalty_db, 0.0);
                continue;
            }
            EXPECT_GT(p.penalty_db, pts[(b - 1) * grid.size() + s].penalty_db);
            if (s > 0) {
                EXPECT_GT(p.penalty_db, pts[b * grid.size() + s - 1].penalty_db);
            }
        }
}

TEST(MarginCurve, CsvHasHeader) {
    const auto path = (std::filesystem::temp_directory_path() / "osnrpert_margin.csv").string();
    write_margin_csv(margin_curve(56.8e9, default_margin_bandwidths(), {10.0, 20.0}), path);
    const auto t = csv::read(path);
    EXPECT_EQ(t.header, (std::vector<std::string>{"snr_db", "bwd_pert_hz", "snr_pert_db", "penalty_db"}));
    EXPECT_EQ(t.rows.size(), 10u);
    std::filesystem::remove(path);
}
