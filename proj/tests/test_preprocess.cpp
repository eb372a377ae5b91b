#include <gtest/gtest.h>

#include <balans/preprocess.hpp>
#include <balans/random.hpp>

#include "oracles.hpp"

using namespace balans;

namespace {

// Reference inverse normal values, computed at the exact binary64 arguments with 30-digit arithmetic.
struct QuantileCase {
    double p;
    double x;
};

const QuantileCase quantile_table[] = {
    {1e-10, -6.3613409024040561991},
    {1e-06, -4.7534243088228989573},
    {0.001, -3.0902323061678135354},
    {0.02, -2.0537489106318230443},
    {0.02425, -1.9729610513118848376},
    {0.1, -1.2815515655446004353},
    {0.3, -0.52440051270804081597},
    {0.5, 0.0},
    {0.7, 0.52440051270804065631},
    {0.9, 1.2815515655446005935},
    {0.97575, 1.9729610513118849594},
    {0.999, 3.0902323061678132778},
    {0.999999, 4.7534243088170877657},
    {0.9999999999, 6.3613408896974218642},
};

}

TEST(NormalQuantile, MatchesHighPrecisionReference) {
    for (const auto& c : quantile_table) {
        EXPECT_NEAR(normal_quantile(c.p), c.x, 1e-10 * std::max(1.0, std::abs(c.x))) << "p = " << c.p;
    }
    EXPECT_EQ(normal_quantile(0.0), -INFINITY);
    EXPECT_EQ(normal_quantile(1.0), INFINITY);
    EXPECT_THROW(normal_quantile(1.5), InputError);
}

TEST(RankInt, OffsetIsThreeEighths) {
    EXPECT_EQ(rank_int_offset, 0.375);
}

TEST(RankInt, MedianMapsToZero) {
    const std::vector<double> col{5.0, -2.0, 9.0};
    const auto t = rank_int(col);
    EXPECT_EQ(t[0], 0.0);
    EXPECT_LT(t[1], 0.0);
    EXPECT_GT(t[2], 0.0);
    EXPECT_NEAR(t[1], -t[2], 1e-15);
}

TEST(RankInt, FiveValuesMatchReference) {
    // Phi^-1((r - 3/8) / (5 + 1/4)) for r = 1..5.
    const double expected[] = {-1.1797611176118609531, -0.49720057068155404834, 0.0, 0.49720057068155404834, 1.1797611176118609531};
    const std::vector<double> col{0.7, -3.1, 12.0, 0.2, 4.4};
    const auto t = rank_int(col);
    const int rank[] = {2, 0, 4, 1, 3};
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(t[static_cast<std::size_t>(i)], expected[rank[i]], 1e-10);
    }
}

TEST(RankInt, TiesShareAverageRank) {
    const std::vector<double> col{1, 1, 2, 3};
    EXPECT_EQ(average_ranks(col), (std::vector<double>{1.5, 1.5, 3, 4}));
    const auto t = rank_int(col);
    EXPECT_EQ(t[0], t[1]);
    EXPECT_THROW(rank_int(std::vector<double>{1.0}), InputError);
}

TEST(RankInt, MonotoneOnRandomColumns) {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> col(2 + rng.below(50));
        for (auto& v : col) {
            v = rng.normal();
        }
        const auto t = rank_int(col);
        for (std::size_t i = 0; i < col.size(); ++i) {
            for (std::size_t j = 0; j < col.size(); ++j) {
                if (col[i] < col[j]) {
                    EXPECT_LT(t[i], t[j]);
                }
            }
        }
    }
}

TEST(ControlMask, NeedsTwoControlsPerGroup) {
    EXPECT_THROW(ControlMask({1, 0, 1, 1}, {0, 0, 1, 1}), InputError);
    EXPECT_NO_THROW(ControlMask({1, 1, 1, 1}, {0, 0, 1, 1}));
    EXPECT_THROW(ControlMask({1, 1}, {0}), InputError);
}

TEST(Median, EvenAndOdd) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
    EXPECT_THROW(median({}), InputError);
}

TEST(VariationFilter, DropsConstantKeepsSpread) {
    Matrix X(6, 3);
    X << 7, 1, 1,
         7, 2, 1,
         7, 3, 1,
         7, 1, 100,
         7, 2, 100,
         7, 3, 100;
    ControlMask mask({1, 1, 1, 1, 1, 1}, {0, 0, 0, 1, 1, 1});
    // Column 1: median 2, MAD 1, coefficient 0.5 in both groups. Column 2 is constant within each group.
    EXPECT_EQ(variation_filter(ProfileMatrix(X), mask), (std::vector<Index>{1}));
    EXPECT_EQ(variation_filter(ProfileMatrix(X), mask, 0.6), (std::vector<Index>{}));
}

TEST(VariationFilter, ConstantFeaturesAlwaysDropped) {
    Rng rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 4 + rng.below(30);
        Matrix X(static_cast<Eigen::Index>(n), 4);
        const double c = rng.normal() * 10;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            X(i, 0) = rng.normal();
            X(i, 1) = c;
            X(i, 2) = rng.normal() + 5;
            X(i, 3) = 0;
        }
        ControlMask mask(std::vector<char>(n, 1), std::vector<int>(n, 0));
        const auto kept = variation_filter(ProfileMatrix(X), mask, 1e-3);
        EXPECT_EQ(std::count(kept.begin(), kept.end(), 1u), 0);
        EXPECT_EQ(std::count(kept.begin(), kept.end(), 3u), 0);
    }
}

TEST(MadNormalize, HandExamples) {
    Matrix X(4, 1);
    X << 1, 2, 3, 3;
    ControlMask mask({1, 1, 1, 0}, {0, 0, 0, 0});
    const Matrix Z = mad_normalize(X, mask);
    EXPECT_EQ(Z(3, 0), 1.0);
    EXPECT_EQ(Z(1, 0), 0.0);
}

TEST(MadNormalize, ZeroMadIsNumericError) {
    Matrix X(3, 1);
    X << 2, 2, 5;
    ControlMask mask({1, 1, 0}, {0, 0, 0});
    EXPECT_THROW(mad_normalize(X, mask), NumericError);
}

TEST(MadNormalize, MatchesSortOracle) {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = 6 + rng.below(40);
        Matrix X(static_cast<Eigen::Index>(n), 3);
        std::vector<char> ctl(n);
        std::vector<int> grp(n);
        for (Index i = 0; i < n; ++i) {
            for (Eigen::Index f = 0; f < 3; ++f) {
                X(static_cast<Eigen::Index>(i), f) = rng.normal() * 3 + 1;
            }
            grp[i] = static_cast<int>(i % 2);
            ctl[i] = i < 4 || rng.uniform() < 0.5;
        }
        ControlMask mask(ctl, grp);
        const Matrix Z = mad_normalize(X, mask);
        for (Eigen::Index f = 0; f < 3; ++f) {
            for (int g = 0; g < 2; ++g) {
                std::vector<double> vals;
                for (Index i = 0; i < n; ++i) {
                    if (ctl[i] && grp[i] == g) {
                        vals.push_back(X(static_cast<Eigen::Index>(i), f));
                    }
                }
                const double med = oracle::median_sorted(vals);
                std::vector<double> dev;
                for (auto v : vals) {
                    dev.push_back(std::abs(v - med));
                }
                const double mad = oracle::median_sorted(dev);
                for (Index i = 0; i < n; ++i) {
                    if (grp[i] == g) {
                        EXPECT_NEAR(Z(static_cast<Eigen::Index>(i), f), (X(static_cast<Eigen::Index>(i), f) - med) / mad, 1e-12);
                    }
                }
            }
        }
    }
}

TEST(CorrelationSelect, IdenticalPairLosesOne) {
    Rng rng(13);
    Matrix X(50, 3);
    for (Eigen::Index i = 0; i < 50; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = X(i, 0);
        X(i, 2) = rng.normal();
    }
    const auto keep = correlation_select(X);
    EXPECT_EQ(keep.size(), 2u);
    EXPECT_EQ(std::count(keep.begin(), keep.end(), 2u), 1);
}

TEST(CorrelationSelect, OrthogonalFeaturesAllKept) {
    Matrix X(4, 3);
    X << 1, 1, 1,
         -1, 1, -1,
         1, -1, -1,
         -1, -1, 1;
    EXPECT_EQ(correlation_select(X, 0.9), (std::vector<Index>{0, 1, 2}));
}

TEST(CorrelationSelect, DefaultThresholdIsPointNine) {
    Matrix X(5, 2);
    X << 1, 1.2, 2, 1.9, 3, 3.3, 4, 3.8, 5, 5.1;
    EXPECT_EQ(correlation_select(X).size(), 1u);
    EXPECT_EQ(correlation_select(X, 0.9).size(), 1u);
    EXPECT_EQ(correlation_select(X, 0.999).size(), 2u);
}

TEST(Pca, FullDimensionPreservesDistances) {
    Rng rng(14);
    Matrix X(15, 4);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            X(i, j) = rng.normal();
        }
    }
    const auto p = pca_project(X, 4);
    for (Eigen::Index i = 0; i < 15; ++i) {
        for (Eigen::Index j = 0; j < 15; ++j) {
            EXPECT_NEAR((p.scores.row(i) - p.scores.row(j)).norm(), (X.row(i) - X.row(j)).norm(), 1e-8);
        }
    }
}

TEST(Pca, RankOneReconstruction) {
    Matrix X(10, 3);
    for (Eigen::Index i = 0; i < 10; ++i) {
        X.row(i) << 1.0 * i, 2.0 * i, -1.0 * i;
    }
    const auto p = pca_project(X, 1);
    const Matrix centered = X.rowwise() - X.colwise().mean();
    const Matrix back = p.scores * p.components.transpose();
    EXPECT_LT((back - centered).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pca, ExplainedVarianceMatchesEigenOracle) {
    Rng rng(15);
    Matrix X(20, 6);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            X(i, j) = rng.normal() * (j + 1);
        }
    }
    const auto p = pca_project(X, 3);
    const Matrix centered = X.rowwise() - X.colwise().mean();
    // Singular values of the centered data give the covariance eigenvalues independently.
    const Vector s = centered.jacobiSvd().singularValues();
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(p.explained_variance(k), s(k) * s(k) / 19.0, 1e-8);
        Eigen::Index big;
        p.components.col(k).cwiseAbs().maxCoeff(&big);
        EXPECT_GT(p.components(big, k), 0.0);
    }
    EXPECT_THROW(pca_project(X, 7), InputError);
}

TEST(Preprocess, FixedOrderAndColumnTracking) {
    Rng rng(16);
    Matrix X(30, 5);
    for (Eigen::Index i = 0; i < 30; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = 4.0;
        X(i, 2) = rng.normal() + 3;
        X(i, 3) = X(i, 2) * 2 + 1;
        X(i, 4) = rng.normal() - 2;
    }
    ControlMask mask(std::vector<char>(30, 1), std::vector<int>(30, 0));
    PreprocessOptions opt;
    opt.variation_threshold = 1e-3;
    opt.mad_normalize = true;
    opt.rank_int = true;
    opt.correlation_threshold = 0.9;
    opt.pca_dims = 2;
    const auto res = preprocess(ProfileMatrix(X), mask, opt);
    EXPECT_EQ(res.retained, (std::vector<Index>{0, 2, 4}));
    EXPECT_EQ(res.features.cols(), 3);
    EXPECT_EQ(res.embedding.cols(), 2);
    EXPECT_EQ(res.embedding.rows(), 30);
}
