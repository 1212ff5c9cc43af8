#pragma once
#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace socialsparse {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Dims {
    Index nx = 0;
    Index ny = 0;
    Index nz = 0;

    Index volume() const { return nx * ny * nz; }
    friend bool operator==(const Dims&, const Dims&) = default;
};

struct Voxel {
    Index x = 0;
    Index y = 0;
    Index z = 0;
    friend bool operator==(const Voxel&, const Voxel&) = default;
};

/// A 3D voxel grid with a boolean mask selecting the in-brain voxels.
///
/// Linear (full-volume) indices are x-fastest: index = x + nx * (y + ny * z).
/// Masked indices number the in-mask voxels 0..p-1 in increasing full index.
class VolumeGrid {
public:
    VolumeGrid(Dims dims, std::vector<std::uint8_t> mask);

    static VolumeGrid full(Dims dims);

    const Dims& dims() const { return dims_; }
    Index volume_size() const { return dims_.volume(); }
    Index voxel_count() const { return static_cast<Index>(masked_to_full_.size()); }
    const std::vector<std::uint8_t>& mask() const { return mask_; }

    Index full_index(Voxel v) const { return v.x + dims_.nx * (v.y + dims_.ny * v.z); }
    Voxel voxel(Index full_index) const;
    bool contains(Voxel v) const;

    /// Masked index of a full-volume index, or nullopt outside the mask.
    /// Throws UsageError when full_index is outside the volume.
    std::optional<Index> mask_index(Index full_index) const;

    Index full_index_of(Index masked_index) const { return masked_to_full_[static_cast<std::size_t>(masked_index)]; }

    /// Grid restricted to a subset of the current in-mask voxels, given as
    /// sorted masked indices.
    VolumeGrid restricted(const std::vector<Index>& kept_masked) const;

    friend bool operator==(const VolumeGrid& a, const VolumeGrid& b)
    {
        return a.dims_ == b.dims_ && a.mask_ == b.mask_;
    }

private:
    Dims dims_;
    std::vector<std::uint8_t> mask_;
    std::vector<Index> masked_to_full_;
    std::vector<Index> full_to_masked_;  // -1 outside mask
};

using GridPtr = std::shared_ptr<const VolumeGrid>;

enum class Task { classification, regression };

/// Design matrix over masked voxels plus targets. Classification targets are
/// stored as -1/+1.
class Dataset {
public:
    Dataset(Matrix X, Vector y, GridPtr grid, Task task);

    const Matrix& X() const { return X_; }
    const Vector& y() const { return y_; }
    const GridPtr& grid() const { return grid_; }
    Task task() const { return task_; }

    Index n_samples() const { return X_.rows(); }
    Index n_features() const { return X_.cols(); }
    Index n_positive() const;
    Index n_negative() const;

    /// Row subset, same grid.
    Dataset rows(const std::vector<Index>& sample_indices) const;

    /// Column subset (sorted masked indices) on the correspondingly restricted grid.
    Dataset columns(const std::vector<Index>& kept_masked) const;

private:
    Matrix X_;
    Vector y_;
    GridPtr grid_;
    Task task_;
};

struct WeightMap {
    Vector w;
    GridPtr grid;
    double intercept = 0.0;

    Index n_nonzero() const;
};

/// Full-volume array with w at the masked positions and zero elsewhere.
Vector expand_to_volume(const WeightMap& wm);

/// Values of a full-volume array at the in-mask voxels.
Vector restrict_to_mask(const VolumeGrid& grid, const Vector& volume);

} // namespace socialsparse
