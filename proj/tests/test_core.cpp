#include <gtest/gtest.h>

#include <balans/core.hpp>
#include <balans/random.hpp>

using namespace balans;

namespace {

Matrix small_matrix() {
    Matrix X(4, 2);
    X << 0, 1, 2, 3, 4, 5, 6, 7;
    return X;
}

}

TEST(ValidateInputs, AcceptsConsistentBundle) {
    ProfileMatrix P(small_matrix());
    BatchLabels b(std::vector<int>{0, 0, 1, 1});
    HyperParams hp;
    hp.k = 1;
    auto v = validate_inputs(P, b, hp);
    EXPECT_EQ(&v.profiles, &P);
    EXPECT_EQ(b.count(), 2u);
}

TEST(ValidateInputs, RejectsLengthMismatch) {
    ProfileMatrix P(small_matrix());
    BatchLabels b(std::vector<int>{0, 0, 1});
    try {
        validate_inputs(P, b, HyperParams{});
        FAIL() << "expected an error";
    } catch (const InputError& e) {
        EXPECT_EQ(e.exit_code(), 2);
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    }
}

TEST(ProfileMatrix, NamesNonFinitePosition) {
    Matrix X = small_matrix();
    X(2, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
        ProfileMatrix P(X);
        FAIL() << "expected an error";
    } catch (const NonFiniteError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_EQ(e.col(), 0u);
        EXPECT_NE(std::string(e.what()).find("(2,0)"), std::string::npos);
    }
    X(2, 0) = INFINITY;
    EXPECT_THROW(ProfileMatrix{X}, NonFiniteError);
}

TEST(ProfileMatrix, RejectsEmpty) {
    EXPECT_THROW(ProfileMatrix(Matrix(0, 3)), InputError);
    EXPECT_THROW(ProfileMatrix(Matrix(3, 0)), InputError);
}

TEST(HyperParams, Bounds) {
    HyperParams hp;
    EXPECT_NO_THROW(validate_params(hp));
    EXPECT_EQ(hp.k, 5);
    EXPECT_EQ(hp.tau, 50);
    EXPECT_EQ(hp.block_len, 50);
    hp.k = 0;
    EXPECT_THROW(validate_params(hp), InputError);
    hp = {};
    hp.tau = 0;
    EXPECT_THROW(validate_params(hp), InputError);
    hp = {};
    hp.block_len = 0;
    EXPECT_THROW(validate_params(hp), InputError);
    hp = {};
    hp.pca_dims = 3;
    EXPECT_THROW(validate_params(hp, 2), InputError);
    EXPECT_NO_THROW(validate_params(hp, 3));
    hp.pca_dims = 0;
    EXPECT_THROW(validate_params(hp, 3), InputError);
}

TEST(LabelVector, RequiresEveryIdToOccur) {
    EXPECT_THROW(BatchLabels(std::vector<int>{0, 2}), InputError);
    EXPECT_THROW(BatchLabels(std::vector<int>{}), InputError);
    EXPECT_THROW(BatchLabels(std::vector<int>{-1, 0}), InputError);
    BatchLabels ok(std::vector<int>{1, 0, 1});
    EXPECT_EQ(ok.count(), 2u);
}

TEST(LabelVector, FromStringsKeepsFirstAppearanceOrder) {
    std::vector<std::string> names;
    auto b = BatchLabels::from_strings({"plate7", "plate2", "plate7", "plate9"}, &names);
    EXPECT_EQ(b.ids(), (std::vector<int>{0, 1, 0, 2}));
    EXPECT_EQ(names, (std::vector<std::string>{"plate7", "plate2", "plate9"}));
}

TEST(SparseAffinityRows, PushAndView) {
    SparseAffinityRows rows(5);
    rows.push_row(3, SparseRow{{0, 2, 4}, {0.5, 1.0, 0.25}});
    rows.push_row(1, SparseRow{{1}, {1.0}});
    EXPECT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows.nnz(), 4u);
    EXPECT_DOUBLE_EQ(rows.row(0).sum(), 1.75);
    EXPECT_EQ(rows.row(1).cols[0], 1u);
    EXPECT_NO_THROW(rows.check_affinity_invariants());

    Matrix dense = rows.to_dense();
    EXPECT_EQ(dense.rows(), 2);
    EXPECT_EQ(dense(0, 2), 1.0);
    EXPECT_EQ(dense(1, 0), 0.0);
}

TEST(SparseAffinityRows, RejectsNonCanonicalRows) {
    SparseAffinityRows rows(4);
    EXPECT_THROW(rows.push_row(0, SparseRow{{2, 1}, {0.5, 0.5}}), InputError);
    EXPECT_THROW(rows.push_row(0, SparseRow{{1, 1}, {0.5, 0.5}}), InputError);
    EXPECT_THROW(rows.push_row(0, SparseRow{{4}, {0.5}}), InputError);
    EXPECT_THROW(rows.push_row(4, SparseRow{{0}, {0.5}}), InputError);
    EXPECT_EQ(rows.size(), 0u);
}

TEST(SparseAffinityRows, InvariantChecks) {
    SparseAffinityRows dup(3);
    dup.push_row(1, SparseRow{{0}, {0.5}});
    dup.push_row(1, SparseRow{{2}, {0.5}});
    EXPECT_THROW(dup.check_affinity_invariants(), InputError);

    SparseAffinityRows big(3);
    big.push_row(0, SparseRow{{0}, {1.5}});
    EXPECT_THROW(big.check_affinity_invariants(), InputError);

    EXPECT_THROW(SparseAffinityRows(3, {0}, {0, 2}, {1}, {0.5}), InputError);
}

TEST(SparseRow, CanonicalizeSortsByColumn) {
    SparseRow r{{5, 1, 3}, {0.1, 0.2, 0.3}};
    r.canonicalize();
    EXPECT_EQ(r.cols, (std::vector<Index>{1, 3, 5}));
    EXPECT_EQ(r.vals, (std::vector<double>{0.2, 0.3, 0.1}));
}

TEST(Rng, DeterministicPerSeedAndStream) {
    Rng a(42, 3), b(42, 3), c(42, 4);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        differs |= x != c.next();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, RangesAndMoments) {
    Rng rng(7);
    double sum = 0, sq = 0, esum = 0;
    const int N = 200000;
    for (int i = 0; i < N; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_LT(rng.below(7), 7u);
        const double z = rng.normal();
        sum += z;
        sq += z * z;
        esum += rng.exponential(4.0);
    }
    EXPECT_NEAR(sum / N, 0.0, 4 / std::sqrt(double(N)));
    EXPECT_NEAR(sq / N, 1.0, 0.02);
    EXPECT_NEAR(esum / N, 0.25, 4 * 0.25 / std::sqrt(double(N)));
}
