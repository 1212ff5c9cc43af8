#include <socialsparse/grid.hpp>

#include <socialsparse/error.hpp>

#include <algorithm>
#include <string>

namespace socialsparse {

VolumeGrid::VolumeGrid(Dims dims, std::vector<std::uint8_t> mask)
    : dims_(dims), mask_(std::move(mask))
{
    if (dims_.nx < 1 || dims_.ny < 1 || dims_.nz < 1) {
        throw UsageError("grid dimensions must be positive");
    }
    if (static_cast<Index>(mask_.size()) != dims_.volume()) {
        throw UsageError("mask has " + std::to_string(mask_.size()) + " entries, grid has "
                         + std::to_string(dims_.volume()) + " voxels");
    }
    full_to_masked_.assign(mask_.size(), -1);
    for (std::size_t i = 0; i < mask_.size(); ++i) {
        if (mask_[i] > 1) throw UsageError("mask entries must be 0 or 1");
        if (mask_[i]) {
            full_to_masked_[i] = static_cast<Index>(masked_to_full_.size());
            masked_to_full_.push_back(static_cast<Index>(i));
        }
    }
    if (masked_to_full_.empty()) throw UsageError("mask selects no voxels");
}

VolumeGrid VolumeGrid::full(Dims dims)
{
    const auto n = dims.volume();
    return VolumeGrid(dims, std::vector<std::uint8_t>(static_cast<std::size_t>(n > 0 ? n : 0), 1));
}

Voxel VolumeGrid::voxel(Index full_index) const
{
    const Index x = full_index % dims_.nx;
    const Index rest = full_index / dims_.nx;
    return {x, rest % dims_.ny, rest / dims_.ny};
}

bool VolumeGrid::contains(Voxel v) const
{
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims_.nx && v.y < dims_.ny && v.z < dims_.nz;
}

std::optional<Index> VolumeGrid::mask_index(Index full_index) const
{
    if (full_index < 0 || full_index >= volume_size()) {
        throw UsageError("voxel index " + std::to_string(full_index) + " outside volume of "
                         + std::to_string(volume_size()));
    }
    const auto m = full_to_masked_[static_cast<std::size_t>(full_index)];
    if (m < 0) return std::nullopt;
    return m;
}

VolumeGrid VolumeGrid::restricted(const std::vector<Index>& kept_masked) const
{
    std::vector<std::uint8_t> mask(mask_.size(), 0);
    for (auto m : kept_masked) {
        if (m < 0 || m >= voxel_count()) throw UsageError("kept index out of range");
        mask[static_cast<std::size_t>(full_index_of(m))] = 1;
    }
    return VolumeGrid(dims_, std::move(mask));
}

Dataset::Dataset(Matrix X, Vector y, GridPtr grid, Task task)
    : X_(std::move(X)), y_(std::move(y)), grid_(std::move(grid)), task_(task)
{
    if (!grid_) throw UsageError("dataset requires a grid");
    if (X_.cols() != grid_->voxel_count()) {
        throw UsageError("design matrix has " + std::to_string(X_.cols()) + " columns, mask has "
                         + std::to_string(grid_->voxel_count()) + " voxels");
    }
    if (X_.rows() != y_.size()) {
        throw UsageError("design matrix has " + std::to_string(X_.rows()) + " rows but "
                         + std::to_string(y_.size()) + " targets");
    }
    if (X_.rows() < 1) throw UsageError("dataset has no samples");
    if (task_ == Task::classification) {
        for (Index i = 0; i < y_.size(); ++i) {
            if (y_[i] != 1.0 && y_[i] != -1.0) throw UsageError("classification targets must be -1 or +1");
        }
        if (n_positive() == 0 || n_negative() == 0) {
            throw UsageError("classification data needs both classes");
        }
    }
}

Index Dataset::n_positive() const
{
    return static_cast<Index>((y_.array() > 0).count());
}

Index Dataset::n_negative() const
{
    return static_cast<Index>((y_.array() < 0).count());
}

Dataset Dataset::rows(const std::vector<Index>& sample_indices) const
{
    Matrix X(static_cast<Index>(sample_indices.size()), X_.cols());
    Vector y(X.rows());
    for (Index r = 0; r < X.rows(); ++r) {
        const auto i = sample_indices[static_cast<std::size_t>(r)];
        X.row(r) = X_.row(i);
        y[r] = y_[i];
    }
    return Dataset(std::move(X), std::move(y), grid_, task_);
}

Dataset Dataset::columns(const std::vector<Index>& kept_masked) const
{
    if (!std::is_sorted(kept_masked.begin(), kept_masked.end())) {
        throw UsageError("kept column indices must be sorted");
    }
    auto grid = std::make_shared<const VolumeGrid>(grid_->restricted(kept_masked));
    Matrix X(X_.rows(), static_cast<Index>(kept_masked.size()));
    for (Index c = 0; c < X.cols(); ++c) X.col(c) = X_.col(kept_masked[static_cast<std::size_t>(c)]);
    return Dataset(std::move(X), y_, std::move(grid), task_);
}

Index WeightMap::n_nonzero() const
{
    return static_cast<Index>((w.array() != 0.0).count());
}

Vector expand_to_volume(const WeightMap& wm)
{
    if (!wm.grid || wm.w.size() != wm.grid->voxel_count()) {
        throw std::logic_error("weight map length does not match its grid");
    }
    Vector volume = Vector::Zero(wm.grid->volume_size());
    for (Index m = 0; m < wm.w.size(); ++m) volume[wm.grid->full_index_of(m)] = wm.w[m];
    return volume;
}

Vector restrict_to_mask(const VolumeGrid& grid, const Vector& volume)
{
    if (volume.size() != grid.volume_size()) throw UsageError("volume length does not match grid");
    Vector out(grid.voxel_count());
    for (Index m = 0; m < out.size(); ++m) out[m] = volume[grid.full_index_of(m)];
    return out;
}

} // namespace socialsparse
