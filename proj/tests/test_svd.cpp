#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tntopo/dense_tensor.hpp"
#include "tntopo/errors.hpp"
#include "tntopo/rng.hpp"
#include "tntopo/svd.hpp"

using namespace tntopo;

namespace {

DenseTensor random_matrix(std::int64_t m, std::int64_t n, std::uint64_t seed) {
    DenseTensor t({"row", "col"}, {m, n});
    SplitMix64 rng(seed);
    for (double& v : t.data()) v = rng.next_symmetric();
    return t;
}

// The factors come back labelled (rows|split) and (split|cols); recombining
// yields (rows|cols), which shares a's row-major layout entry for entry.
double recombine_error(const DenseTensor& a, const SvdSplit& s) {
    const DenseTensor approx = contract(s.left, s.right, {s.left.labels()[1]});
    DenseTensor diff = a;
    for (std::size_t i = 0; i < diff.data().size(); ++i) diff.data()[i] -= approx.data()[i];
    return frobenius_norm(diff);
}

} // namespace

TEST_CASE("exact split of the identity keeps full rank and loses nothing") {
    DenseTensor id({"row", "col"}, {4, 4});
    for (std::int64_t i = 0; i < 4; ++i) {
        const std::int64_t ii[] = {i, i};
        id.data()[static_cast<std::size_t>(id.offset_of(ii))] = 1.0;
    }
    const SvdSplit s = svd_split(id, TruncationPolicy::exact());
    CHECK(s.kept_rank == 4);
    CHECK(s.discarded_mass == 0.0);
    CHECK(recombine_error(id, s) < 1e-14);
    for (double sv : s.singular_values) CHECK(sv == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("relative cutoff keeps exactly the numerically meaningful rank") {
    // rank-2 matrix built from two outer products of very different weight
    DenseTensor a({"row", "col"}, {5, 5});
    const std::vector<double> u1 = {1, 2, 3, 4, 5}, v1 = {2, 1, 0, 1, 2};
    const std::vector<double> u2 = {1, -1, 1, -1, 1}, v2 = {1, 1, 1, 1, 1};
    for (std::int64_t i = 0; i < 5; ++i)
        for (std::int64_t j = 0; j < 5; ++j) {
            const std::int64_t ij[] = {i, j};
            a.data()[static_cast<std::size_t>(a.offset_of(ij))] =
                u1[static_cast<std::size_t>(i)] * v1[static_cast<std::size_t>(j)] +
                1e-3 * u2[static_cast<std::size_t>(i)] * v2[static_cast<std::size_t>(j)];
        }
    const SvdSplit tight = svd_split(a, TruncationPolicy::eps(1e-8));
    CHECK(tight.kept_rank == 2);
    const SvdSplit loose = svd_split(a, TruncationPolicy::eps(1e-1));
    CHECK(loose.kept_rank == 1);
    CHECK(recombine_error(a, loose) == doctest::Approx(loose.discarded_mass).epsilon(1e-8));
}

TEST_CASE("rank cap discards exactly the tail singular value mass") {
    const DenseTensor a = random_matrix(6, 6, 21);
    const std::vector<double> sv = oracles::singular_values_oracle(a);
    for (int k = 1; k <= 6; ++k) {
        const SvdSplit s = svd_split(a, TruncationPolicy::cap(k));
        CHECK(s.kept_rank == k);
        double tail = 0.0;
        for (std::size_t i = static_cast<std::size_t>(k); i < sv.size(); ++i) tail += sv[i] * sv[i];
        CHECK(s.discarded_mass == doctest::Approx(std::sqrt(tail)).epsilon(1e-9));
        CHECK(recombine_error(a, s) == doctest::Approx(std::sqrt(tail)).epsilon(1e-7));
    }
}

TEST_CASE("stable_rank_decision on pinned spectra") {
    CHECK(stable_rank_decision({1.0, 1e-15}, TruncationPolicy::eps(1e-8)) == 1);
    CHECK(stable_rank_decision({3.0, 2.0, 1.0}, TruncationPolicy::exact()) == 3);
    CHECK(stable_rank_decision({3.0, 2.0, 1.0}, TruncationPolicy::eps(0.5)) == 2);
    CHECK(stable_rank_decision({5.0}, TruncationPolicy::cap(3)) == 1);
    CHECK(stable_rank_decision({0.0, 0.0}, TruncationPolicy::exact()) == 1);
}

TEST_CASE("discarded mass is the norm of the dropped singular value tail") {
    const DenseTensor a = random_matrix(7, 5, 22);
    const std::vector<double> sv = oracles::singular_values_oracle(a);
    const SvdSplit s = svd_split(a, TruncationPolicy::cap(2));
    double tail = 0.0;
    for (std::size_t i = 2; i < sv.size(); ++i) tail += sv[i] * sv[i];
    CHECK(s.discarded_mass == doctest::Approx(std::sqrt(tail)).epsilon(1e-9));
}

TEST_CASE("truncated split is the best rank-k approximation") {
    // property over random matrices up to 8x8, checked against an
    // alternating-least-squares oracle that knows nothing about SVD
    SplitMix64 dims(77);
    for (int trial = 0; trial < 12; ++trial) {
        const std::int64_t m = 2 + static_cast<std::int64_t>(dims.next_u64() % 7);
        const std::int64_t n = 2 + static_cast<std::int64_t>(dims.next_u64() % 7);
        const DenseTensor a = random_matrix(m, n, 100 + static_cast<std::uint64_t>(trial));
        const int k = 1 + static_cast<int>(dims.next_u64() % static_cast<std::uint64_t>(std::min(m, n)));
        const SvdSplit s = svd_split(a, TruncationPolicy::cap(k));
        const double ours = recombine_error(a, s);
        const double best = oracles::best_rank_k_error(a, k);
        CHECK(ours <= best + 1e-8 * (1.0 + frobenius_norm(a)));
        CHECK(ours >= best - 1e-8 * (1.0 + frobenius_norm(a)));
    }
}

TEST_CASE("left factor has orthonormal columns") {
    const DenseTensor a = random_matrix(6, 4, 23);
    const SvdSplit s = svd_split(a, TruncationPolicy::exact());
    const std::string bond = s.left.labels()[1];
    const DenseTensor copy({"rows", "split2"}, s.left.shape(), s.left.data());
    const DenseTensor gram = contract(s.left, copy, {"rows"});
    REQUIRE(gram.order() == 2);
    for (std::int64_t i = 0; i < s.kept_rank; ++i)
        for (std::int64_t j = 0; j < s.kept_rank; ++j) {
            const std::int64_t ij[] = {i, j};
            CHECK(gram.at(ij) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
        }
    CHECK(bond == s.right.labels()[0]);
}

TEST_CASE("sign convention makes the split deterministic") {
    const DenseTensor a = random_matrix(5, 5, 24);
    const SvdSplit s1 = svd_split(a, TruncationPolicy::exact());
    const SvdSplit s2 = svd_split(a, TruncationPolicy::exact());
    CHECK(s1.left.data() == s2.left.data());
    CHECK(s1.right.data() == s2.right.data());
    for (std::int64_t j = 0; j < s1.kept_rank; ++j) {
        double extreme = 0.0;
        for (std::int64_t i = 0; i < 5; ++i) {
            const std::int64_t ij[] = {i, j};
            if (std::abs(s1.left.at(ij)) > std::abs(extreme)) extreme = s1.left.at(ij);
        }
        CHECK(extreme > 0.0);
    }
}

TEST_CASE("zero matrix keeps rank one and exact zero factors") {
    const DenseTensor z({"row", "col"}, {3, 4});
    const SvdSplit s = svd_split(z, TruncationPolicy::exact());
    CHECK(s.kept_rank == 1);
    CHECK(frobenius_norm(s.right) == 0.0);
    CHECK(s.discarded_mass == 0.0);
}

TEST_CASE("singular values match an eigen-solver oracle") {
    const DenseTensor a = random_matrix(6, 3, 25);
    const SvdSplit s = svd_split(a, TruncationPolicy::exact());
    const std::vector<double> ref = oracles::singular_values_oracle(a);
    REQUIRE(s.singular_values.size() >= 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(s.singular_values[i] == doctest::Approx(ref[i]).epsilon(1e-9));
}

TEST_CASE("policy validation") {
    CHECK_THROWS_AS(stable_rank_decision({1.0}, TruncationPolicy::cap(0)), ArgumentError);
    CHECK_THROWS_AS(stable_rank_decision({}, TruncationPolicy::exact()), ArgumentError);
    CHECK_THROWS_AS(stable_rank_decision({1.0, 2.0}, TruncationPolicy::exact()), ArgumentError);
    CHECK(TruncationPolicy::exact().is_exact());
    CHECK_FALSE(TruncationPolicy::eps(1e-8).is_exact());
    CHECK_FALSE(TruncationPolicy::exact().with_cap(3).is_exact());
    const DenseTensor v({"a"}, {3});
    CHECK_THROWS_AS(svd_split(v, TruncationPolicy::exact()), ArgumentError);
}
