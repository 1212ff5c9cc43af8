#pragma once
#include <socialsparse/grid.hpp>

#include <cstdint>
#include <limits>
#include <vector>

namespace socialsparse {

enum class MaskShape { ellipsoid, full };

/// Synthetic spatial decoding problem: spherical blobs of alternating sign
/// carry the signal, samples are spatially smoothed white noise.
struct SyntheticSpec {
    Dims dims{20, 20, 20};
    Index n_samples = 200;
    int n_blobs = 2;
    double blob_radius = 3.0;
    // var(X w_true) / var(noise); infinity gives noiseless targets.
    double snr = 4.0;
    double smoothing_fwhm = 2.0;
    Task task = Task::classification;
    MaskShape mask = MaskShape::ellipsoid;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    GridPtr grid;
    Dataset data;
    WeightMap truth;
    std::vector<Voxel> centers;
    // Noise-free scores X w_true.
    Vector signal;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Separable Gaussian smoothing of a full volume (x-fastest). The kernel is
/// truncated at 3 sigma and renormalized over the taps that fall inside the
/// volume, so constant volumes are left unchanged.
void gaussian_smooth(std::vector<double>& volume, Dims dims, double fwhm);

/// In-mask voxels within `radius` (6-connected steps) of a nonzero entry of `w`.
std::vector<std::uint8_t> dilate_support(const VolumeGrid& grid, const Vector& w, int radius = 1);

} // namespace socialsparse
