#include "doctest.h"
#include "oracles.hpp"

#include <socialsparse/error.hpp>
#include <socialsparse/grid.hpp>
#include <socialsparse/random.hpp>

using namespace socialsparse;

TEST_CASE("mask indexing examples")
{
    const VolumeGrid full = VolumeGrid::full({2, 2, 2});
    CHECK(full.mask_index(5) == Index{5});

    std::vector<std::uint8_t> single(8, 0);
    single[3] = 1;
    const VolumeGrid one({2, 2, 2}, single);
    CHECK(one.mask_index(3) == Index{0});
    CHECK_FALSE(one.mask_index(0).has_value());

    CHECK_THROWS_AS((void)one.mask_index(8), UsageError);
    CHECK_THROWS_AS((void)one.mask_index(-1), UsageError);
}

TEST_CASE("grid construction rejects bad masks")
{
    CHECK_THROWS_AS(VolumeGrid({2, 1, 1}, {0, 0}), UsageError);
    CHECK_THROWS_AS(VolumeGrid({2, 1, 1}, {1}), UsageError);
    CHECK_THROWS_AS(VolumeGrid({0, 1, 1}, {}), UsageError);
}

TEST_CASE("voxel coordinates are x-fastest")
{
    const VolumeGrid g = VolumeGrid::full({3, 4, 5});
    const Voxel v{2, 1, 3};
    CHECK(g.full_index(v) == 2 + 3 * (1 + 4 * 3));
    CHECK(g.voxel(g.full_index(v)) == v);
}

TEST_CASE("masked and full indices round trip on random masks")
{
    Rng rng(11, Stream::noise);
    for (int trial = 0; trial < 200; ++trial) {
        const Dims d{1 + static_cast<Index>(rng.below(6)), 1 + static_cast<Index>(rng.below(6)),
                     1 + static_cast<Index>(rng.below(6))};
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(d.volume()));
        for (auto& m : mask) m = rng.uniform() < 0.4 ? 1 : 0;
        mask[static_cast<std::size_t>(rng.below(mask.size()))] = 1;
        const VolumeGrid g(d, mask);

        Index trues = 0;
        for (auto m : mask) trues += m;
        REQUIRE(g.voxel_count() == trues);
        Index prev = -1;
        for (Index m = 0; m < g.voxel_count(); ++m) {
            const Index f = g.full_index_of(m);
            CHECK(f > prev);
            prev = f;
            CHECK(g.mask_index(f) == m);
        }
        for (Index f = 0; f < g.volume_size(); ++f) {
            CHECK(g.mask_index(f).has_value() == (mask[static_cast<std::size_t>(f)] == 1));
        }
    }
}

TEST_CASE("weight map expansion")
{
    const auto g = std::make_shared<const VolumeGrid>(VolumeGrid::full({2, 2, 1}));
    const Vector v = (Vector(4) << 1, -2, 3, 4).finished();
    CHECK(expand_to_volume(WeightMap{v, g, 0.0}) == v);
    CHECK(expand_to_volume(WeightMap{Vector::Zero(4), g, 0.0}).isZero());

    std::vector<std::uint8_t> mask(4, 0);
    mask[2] = 1;
    const auto single = std::make_shared<const VolumeGrid>(VolumeGrid({2, 2, 1}, mask));
    const Vector vol = expand_to_volume(WeightMap{Vector::Constant(1, 2.5), single, 0.0});
    CHECK(vol == (Vector(4) << 0, 0, 2.5, 0).finished());
    CHECK(restrict_to_mask(*single, vol) == Vector::Constant(1, 2.5));

    CHECK_THROWS_AS(expand_to_volume(WeightMap{Vector::Zero(3), g, 0.0}), std::logic_error);
}

TEST_CASE("dataset invariants")
{
    const auto g = oracle::line_grid(2);
    const Matrix X = Matrix::Ones(3, 2);
    CHECK_THROWS_AS(Dataset(Matrix::Ones(3, 3), Vector::Ones(3), g, Task::regression), UsageError);
    CHECK_THROWS_AS(Dataset(X, Vector::Ones(2), g, Task::regression), UsageError);
    CHECK_THROWS_AS(Dataset(X, Vector::Ones(3), g, Task::classification), UsageError);
    CHECK_THROWS_AS(Dataset(X, (Vector(3) << 1, -1, 0.5).finished(), g, Task::classification), UsageError);

    const Dataset d(X, (Vector(3) << 1, -1, 1).finished(), g, Task::classification);
    CHECK(d.n_positive() == 2);
    CHECK(d.n_negative() == 1);
}

TEST_CASE("column subsets restrict the grid")
{
    const auto g = std::make_shared<const VolumeGrid>(VolumeGrid::full({4, 1, 1}));
    Matrix X(2, 4);
    X << 1, 2, 3, 4, 5, 6, 7, 8;
    const Dataset d(X, Vector::Zero(2), g, Task::regression);
    const Dataset sub = d.columns({1, 3});
    CHECK(sub.X() == (Matrix(2, 2) << 2, 4, 6, 8).finished());
    CHECK(sub.grid()->voxel_count() == 2);
    CHECK(sub.grid()->full_index_of(0) == 1);
    CHECK(sub.grid()->full_index_of(1) == 3);
    CHECK_THROWS_AS(d.columns({3, 1}), UsageError);
}
