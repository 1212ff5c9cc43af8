#include <socialsparse/shrinkage.hpp>

#include <socialsparse/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>

namespace socialsparse {

namespace {

void check_threshold(double t)
{
    if (!(t >= 0.0)) throw UsageError("shrinkage threshold must be non-negative");
}

// x (1 - t/norm)^+, with zero-norm inputs mapped to 0.
double scale_by_norm(double x, double norm, double t)
{
    if (norm <= t || norm == 0.0) return 0.0;
    return x * ((norm - t) / norm);
}

} // namespace

NeighborhoodStructure::NeighborhoodStructure(std::vector<Index> offsets, std::vector<Index> indices,
                                             std::vector<double> weights)
    : offsets_(std::move(offsets)), indices_(std::move(indices)), weights_(std::move(weights))
{
    if (offsets_.empty() || offsets_.front() != 0 || offsets_.back() != static_cast<Index>(indices_.size())
        || indices_.size() != weights_.size()) {
        throw UsageError("malformed neighborhood structure");
    }
    const Index p = size();
    for (Index i = 0; i < p; ++i) {
        if (offsets_[static_cast<std::size_t>(i) + 1] < offsets_[static_cast<std::size_t>(i)]) {
            throw UsageError("neighborhood offsets must be non-decreasing");
        }
        bool has_self = false;
        const auto m = members(i);
        const auto a = this->weights(i);
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (m[k] < 0 || m[k] >= p) throw UsageError("neighbor index out of range");
            if (!(a[k] >= 0.0)) throw UsageError("neighbor weights must be non-negative");
            for (std::size_t l = 0; l < k; ++l) {
                if (m[l] == m[k]) throw UsageError("duplicate neighbor in neighborhood " + std::to_string(i));
            }
            if (m[k] == i) {
                if (a[k] != 1.0) throw UsageError("center weight must be 1");
                has_self = true;
            }
        }
        if (!has_self) throw UsageError("voxel " + std::to_string(i) + " missing from its own neighborhood");
    }
}

NeighborhoodStructure NeighborhoodStructure::self_only(Index p)
{
    std::vector<Index> offsets(static_cast<std::size_t>(p) + 1);
    std::vector<Index> indices(static_cast<std::size_t>(p));
    for (Index i = 0; i <= p; ++i) offsets[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < p; ++i) indices[static_cast<std::size_t>(i)] = i;
    return NeighborhoodStructure(std::move(offsets), std::move(indices), std::vector<double>(static_cast<std::size_t>(p), 1.0));
}

NeighborhoodStructure build_grid_neighborhoods(const VolumeGrid& grid, double neighbor_weight)
{
    if (!(neighbor_weight >= 0.0)) throw UsageError("neighbor weight must be non-negative");
    static constexpr std::array<std::array<Index, 3>, 6> faces{{
        {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1},
    }};

    const Index p = grid.voxel_count();
    std::vector<Index> offsets{0};
    std::vector<Index> indices;
    std::vector<double> weights;
    offsets.reserve(static_cast<std::size_t>(p) + 1);
    indices.reserve(static_cast<std::size_t>(p) * 7);
    weights.reserve(static_cast<std::size_t>(p) * 7);

    for (Index i = 0; i < p; ++i) {
        const Voxel c = grid.voxel(grid.full_index_of(i));
        indices.push_back(i);
        weights.push_back(1.0);
        for (const auto& d : faces) {
            const Voxel n{c.x + d[0], c.y + d[1], c.z + d[2]};
            if (!grid.contains(n)) continue;
            if (auto m = grid.mask_index(grid.full_index(n))) {
                indices.push_back(*m);
                weights.push_back(neighbor_weight);
            }
        }
        offsets.push_back(static_cast<Index>(indices.size()));
    }
    return NeighborhoodStructure(std::move(offsets), std::move(indices), std::move(weights));
}

GroupPartition::GroupPartition(Index p, std::vector<std::vector<Index>> groups)
    : p_(p), groups_(std::move(groups))
{
    std::vector<char> seen(static_cast<std::size_t>(p), 0);
    Index covered = 0;
    for (const auto& g : groups_) {
        for (auto i : g) {
            if (i < 0 || i >= p) throw UsageError("group member out of range");
            if (seen[static_cast<std::size_t>(i)]) throw UsageError("groups overlap at index " + std::to_string(i));
            seen[static_cast<std::size_t>(i)] = 1;
            ++covered;
        }
    }
    if (covered != p) throw UsageError("groups do not cover every index");
}

GroupPartition GroupPartition::singletons(Index p)
{
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) groups[static_cast<std::size_t>(i)] = {i};
    return GroupPartition(p, std::move(groups));
}

GroupPartition build_block_partition(const VolumeGrid& grid, Index block)
{
    if (block < 1) throw UsageError("block size must be positive");
    const auto& d = grid.dims();
    const Index bx = (d.nx + block - 1) / block;
    const Index by = (d.ny + block - 1) / block;
    std::map<Index, std::vector<Index>> by_block;
    for (Index i = 0; i < grid.voxel_count(); ++i) {
        const Voxel v = grid.voxel(grid.full_index_of(i));
        const Index key = v.x / block + bx * (v.y / block + by * (v.z / block));
        by_block[key].push_back(i);
    }
    std::vector<std::vector<Index>> groups;
    groups.reserve(by_block.size());
    for (auto& [key, members] : by_block) groups.push_back(std::move(members));
    return GroupPartition(grid.voxel_count(), std::move(groups));
}

Vector prox_l1(const Vector& w, double t)
{
    check_threshold(t);
    Vector out(w.size());
    for (Index i = 0; i < w.size(); ++i) {
        const double a = std::abs(w[i]);
        out[i] = a > t ? std::copysign(a - t, w[i]) : 0.0;
    }
    return out;
}

Vector prox_group_l21(const Vector& w, const GroupPartition& partition, double t)
{
    check_threshold(t);
    if (partition.size() != w.size()) throw UsageError("partition size does not match vector length");
    Vector out(w.size());
    for (const auto& g : partition.groups()) {
        double sq = 0.0;
        for (auto j : g) sq += w[j] * w[j];
        const double norm = std::sqrt(sq);
        for (auto i : g) out[i] = scale_by_norm(w[i], norm, t);
    }
    return out;
}

namespace {

Vector neighborhood_norms(const Vector& w, const NeighborhoodStructure& nbhd)
{
    if (nbhd.size() != w.size()) throw UsageError("neighborhoods built for a different number of voxels");
    Vector norms(w.size());
    for (Index i = 0; i < w.size(); ++i) {
        const auto m = nbhd.members(i);
        const auto a = nbhd.weights(i);
        double sq = 0.0;
        for (std::size_t k = 0; k < m.size(); ++k) sq += a[k] * w[m[k]] * w[m[k]];
        norms[i] = std::sqrt(sq);
    }
    return norms;
}

} // namespace

Vector social_shrinkage(const Vector& w, const NeighborhoodStructure& nbhd, double t)
{
    check_threshold(t);
    const Index p = w.size();
    const Vector norms = neighborhood_norms(w, nbhd);

    Vector out(p);
    for (Index i = 0; i < p; ++i) out[i] = scale_by_norm(w[i], norms[i], t);
    return out;
}

PenaltyKind parse_penalty(std::string_view name)
{
    if (name == "social") return PenaltyKind::social;
    if (name == "l1") return PenaltyKind::l1;
    if (name == "group") return PenaltyKind::group;
    throw UsageError("unknown penalty '" + std::string(name) + "' (expected social, l1 or group)");
}

std::string_view penalty_name(PenaltyKind kind)
{
    switch (kind) {
    case PenaltyKind::social: return "social";
    case PenaltyKind::l1: return "l1";
    case PenaltyKind::group: return "group";
    }
    return "unknown";
}

ShrinkageOperator make_l1_operator()
{
    return [](const Vector& w, double t) { return prox_l1(w, t); };
}

ShrinkageOperator make_group_operator(GroupPartition partition)
{
    return [partition = std::move(partition)](const Vector& w, double t) { return prox_group_l21(w, partition, t); };
}

ShrinkageOperator make_social_operator(NeighborhoodStructure nbhd)
{
    return [nbhd = std::move(nbhd)](const Vector& w, double t) { return social_shrinkage(w, nbhd, t); };
}

ShrinkageOperator make_shrinkage(PenaltyKind kind, const VolumeGrid& grid, double neighbor_weight)
{
    switch (kind) {
    case PenaltyKind::social: return make_social_operator(build_grid_neighborhoods(grid, neighbor_weight));
    case PenaltyKind::l1: return make_l1_operator();
    case PenaltyKind::group: return make_group_operator(build_block_partition(grid, 2));
    }
    throw UsageError("unknown penalty");
}

} // namespace socialsparse
