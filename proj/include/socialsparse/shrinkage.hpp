#pragma once
#include <socialsparse/grid.hpp>

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace socialsparse {

/// Per-voxel weighted neighborhoods, stored row-compressed: the members of
/// voxel i are indices[offsets[i] .. offsets[i+1]) with matching weights.
///
/// Every voxel is a member of its own neighborhood with weight 1.
class NeighborhoodStructure {
public:
    NeighborhoodStructure(std::vector<Index> offsets, std::vector<Index> indices, std::vector<double> weights);

    Index size() const { return static_cast<Index>(offsets_.size()) - 1; }

    std::span<const Index> members(Index i) const
    {
        const auto b = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(i)]);
        const auto e = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(i) + 1]);
        return std::span<const Index>(indices_).subspan(b, e - b);
    }
    std::span<const double> weights(Index i) const
    {
        const auto b = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(i)]);
        const auto e = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(i) + 1]);
        return std::span<const double>(weights_).subspan(b, e - b);
    }

    /// Neighborhoods made only of the voxel itself.
    static NeighborhoodStructure self_only(Index p);

private:
    std::vector<Index> offsets_;
    std::vector<Index> indices_;
    std::vector<double> weights_;
};

/// Voxel plus its in-mask 6-connected face neighbors. The center has weight
/// 1, neighbors get `neighbor_weight`. Neighbors outside the mask or volume
/// are dropped, weights are not renormalized.
NeighborhoodStructure build_grid_neighborhoods(const VolumeGrid& grid, double neighbor_weight = 0.7);

/// Disjoint groups covering 0..p-1.
class GroupPartition {
public:
    GroupPartition(Index p, std::vector<std::vector<Index>> groups);

    Index size() const { return p_; }
    const std::vector<std::vector<Index>>& groups() const { return groups_; }

    static GroupPartition singletons(Index p);

private:
    Index p_;
    std::vector<std::vector<Index>> groups_;
};

/// Non-overlapping block x block x block cubes of in-mask voxels.
GroupPartition build_block_partition(const VolumeGrid& grid, Index block = 2);

// w_i <- w_i (1 - t/|w_i|)^+
Vector prox_l1(const Vector& w, double t);

// w_i <- w_i (1 - t/||w_G||)^+ for i in G
Vector prox_group_l21(const Vector& w, const GroupPartition& partition, double t);

/// Windowed group-lasso shrinkage:
///   w_i <- w_i (1 - t / sqrt(sum_{j in N(i)} alpha_j^i w_j^2))^+
/// All neighborhood norms are taken from the input vector, so the result does
/// not depend on the order in which voxels are visited.
Vector social_shrinkage(const Vector& w, const NeighborhoodStructure& nbhd, double t);

/// Shrinkage step used by the solver: maps (point, threshold) to the shrunk point.
using ShrinkageOperator = std::function<Vector(const Vector&, double)>;

enum class PenaltyKind { social, l1, group };

PenaltyKind parse_penalty(std::string_view name);
std::string_view penalty_name(PenaltyKind kind);

ShrinkageOperator make_l1_operator();
ShrinkageOperator make_group_operator(GroupPartition partition);
ShrinkageOperator make_social_operator(NeighborhoodStructure nbhd);

/// Operator for a penalty over the voxels of `grid`: 6-neighborhoods for
/// social, 2x2x2 blocks for group.
ShrinkageOperator make_shrinkage(PenaltyKind kind, const VolumeGrid& grid, double neighbor_weight = 0.7);

} // namespace socialsparse
