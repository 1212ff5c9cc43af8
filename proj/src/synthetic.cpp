#include <socialsparse/synthetic.hpp>

#include <socialsparse/error.hpp>
#include <socialsparse/random.hpp>

#include <cmath>
#include <string>

namespace socialsparse {

void SyntheticSpec::validate() const
{
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw UsageError("dims must be positive");
    if (n_samples < 2) throw UsageError("need at least 2 samples");
    if (n_blobs < 1) throw UsageError("need at least one blob");
    if (!(blob_radius >= 0.0)) throw UsageError("blob radius must be non-negative");
    if (!(snr > 0.0)) throw UsageError("snr must be positive");
    if (!(smoothing_fwhm >= 0.0)) throw UsageError("smoothing fwhm must be non-negative");
}

namespace {

std::vector<std::uint8_t> make_mask(const SyntheticSpec& spec)
{
    const auto& d = spec.dims;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(d.volume()), 1);
    if (spec.mask == MaskShape::full) return mask;
    for (Index z = 0; z < d.nz; ++z) {
        for (Index y = 0; y < d.ny; ++y) {
            for (Index x = 0; x < d.nx; ++x) {
                const double u = (x + 0.5) / static_cast<double>(d.nx) - 0.5;
                const double v = (y + 0.5) / static_cast<double>(d.ny) - 0.5;
                const double w = (z + 0.5) / static_cast<double>(d.nz) - 0.5;
                const bool inside = 4.0 * (u * u + v * v + w * w) <= 1.0;
                mask[static_cast<std::size_t>(x + d.nx * (y + d.ny * z))] = inside ? 1 : 0;
            }
        }
    }
    return mask;
}

std::vector<Voxel> ball_offsets(double radius)
{
    const auto r = static_cast<Index>(std::floor(radius));
    std::vector<Voxel> offsets;
    for (Index dz = -r; dz <= r; ++dz) {
        for (Index dy = -r; dy <= r; ++dy) {
            for (Index dx = -r; dx <= r; ++dx) {
                if (static_cast<double>(dx * dx + dy * dy + dz * dz) <= radius * radius) offsets.push_back({dx, dy, dz});
            }
        }
    }
    return offsets;
}

void smooth_axis(std::vector<double>& volume, Dims dims, int axis, const std::vector<double>& kernel)
{
    const Index radius = static_cast<Index>(kernel.size()) / 2;
    const Index len = axis == 0 ? dims.nx : axis == 1 ? dims.ny : dims.nz;
    const Index stride = axis == 0 ? 1 : axis == 1 ? dims.nx : dims.nx * dims.ny;
    std::vector<double> line(static_cast<std::size_t>(len));

    for (Index base = 0; base < dims.volume(); ++base) {
        // Visit each line once, from the voxel whose coordinate on this axis is 0.
        const Index coord = (base / stride) % len;
        if (coord != 0) continue;
        for (Index i = 0; i < len; ++i) line[static_cast<std::size_t>(i)] = volume[static_cast<std::size_t>(base + i * stride)];
        for (Index i = 0; i < len; ++i) {
            double acc = 0.0, mass = 0.0;
            for (Index k = -radius; k <= radius; ++k) {
                const Index j = i + k;
                if (j < 0 || j >= len) continue;
                const double a = kernel[static_cast<std::size_t>(k + radius)];
                acc += a * line[static_cast<std::size_t>(j)];
                mass += a;
            }
            volume[static_cast<std::size_t>(base + i * stride)] = acc / mass;
        }
    }
}

} // namespace

void gaussian_smooth(std::vector<double>& volume, Dims dims, double fwhm)
{
    if (static_cast<Index>(volume.size()) != dims.volume()) throw UsageError("volume does not match dims");
    if (fwhm <= 0.0) return;
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const auto radius = static_cast<Index>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (Index k = -radius; k <= radius; ++k) {
        const double a = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = a;
        total += a;
    }
    for (auto& a : kernel) a /= total;
    for (int axis = 0; axis < 3; ++axis) smooth_axis(volume, dims, axis, kernel);
}

std::vector<std::uint8_t> dilate_support(const VolumeGrid& grid, const Vector& w, int radius)
{
    if (w.size() != grid.voxel_count()) throw UsageError("weights do not match grid");
    std::vector<std::uint8_t> in(static_cast<std::size_t>(w.size()), 0);
    for (Index i = 0; i < w.size(); ++i) in[static_cast<std::size_t>(i)] = w[i] != 0.0;
    for (int step = 0; step < radius; ++step) {
        std::vector<std::uint8_t> next = in;
        for (Index i = 0; i < w.size(); ++i) {
            if (!in[static_cast<std::size_t>(i)]) continue;
            const Voxel c = grid.voxel(grid.full_index_of(i));
            const Voxel around[6] = {{c.x - 1, c.y, c.z}, {c.x + 1, c.y, c.z}, {c.x, c.y - 1, c.z},
                                     {c.x, c.y + 1, c.z}, {c.x, c.y, c.z - 1}, {c.x, c.y, c.z + 1}};
            for (const auto& n : around) {
                if (!grid.contains(n)) continue;
                if (auto m = grid.mask_index(grid.full_index(n))) next[static_cast<std::size_t>(*m)] = 1;
            }
        }
        in = std::move(next);
    }
    return in;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec)
{
    spec.validate();
    auto grid = std::make_shared<const VolumeGrid>(spec.dims, make_mask(spec));
    const Index p = grid->voxel_count();
    const auto offsets = ball_offsets(spec.blob_radius);
    const double separation = 2.0 * spec.blob_radius + 1.0;

    // Blob centers: the whole ball must sit inside the mask, and blobs must
    // not touch each other.
    Rng blob_rng(spec.seed, Stream::blobs);
    std::vector<Voxel> centers;
    Vector w_true = Vector::Zero(p);
    for (int b = 0; b < spec.n_blobs; ++b) {
        std::vector<Voxel> candidates;
        for (Index m = 0; m < p; ++m) {
            const Voxel c = grid->voxel(grid->full_index_of(m));
            bool ok = true;
            for (const auto& prev : centers) {
                const double dx = static_cast<double>(c.x - prev.x), dy = static_cast<double>(c.y - prev.y),
                             dz = static_cast<double>(c.z - prev.z);
                if (std::sqrt(dx * dx + dy * dy + dz * dz) <= separation) {
                    ok = false;
                    break;
                }
            }
            for (std::size_t k = 0; ok && k < offsets.size(); ++k) {
                const Voxel v{c.x + offsets[k].x, c.y + offsets[k].y, c.z + offsets[k].z};
                ok = grid->contains(v) && grid->mask_index(grid->full_index(v)).has_value();
            }
            if (ok) candidates.push_back(c);
        }
        if (candidates.empty()) {
            throw UsageError("blob " + std::to_string(b + 1) + " of radius " + std::to_string(spec.blob_radius)
                             + " does not fit in the volume");
        }
        const Voxel c = candidates[static_cast<std::size_t>(blob_rng.below(candidates.size()))];
        centers.push_back(c);
        const double sign = (b % 2 == 0) ? 1.0 : -1.0;
        for (const auto& o : offsets) {
            const auto m = grid->mask_index(grid->full_index({c.x + o.x, c.y + o.y, c.z + o.z}));
            w_true[*m] = sign;
        }
    }

    Rng noise_rng(spec.seed, Stream::noise);
    Matrix X(spec.n_samples, p);
    std::vector<double> volume(static_cast<std::size_t>(spec.dims.volume()));
    for (Index s = 0; s < spec.n_samples; ++s) {
        for (auto& v : volume) v = noise_rng.normal();
        gaussian_smooth(volume, spec.dims, spec.smoothing_fwhm);
        for (Index m = 0; m < p; ++m) X(s, m) = volume[static_cast<std::size_t>(grid->full_index_of(m))];
    }

    const Vector signal = X * w_true;
    const double mean = signal.mean();
    const double var = (signal.array() - mean).square().sum() / static_cast<double>(signal.size());
    const double noise_sd = std::isinf(spec.snr) ? 0.0 : std::sqrt(var / spec.snr);
    Rng label_rng(spec.seed, Stream::labels);
    Vector y(spec.n_samples);
    for (Index s = 0; s < spec.n_samples; ++s) {
        const double target = signal[s] + noise_sd * label_rng.normal();
        y[s] = spec.task == Task::classification ? (target >= 0.0 ? 1.0 : -1.0) : target;
    }

    Dataset data(std::move(X), std::move(y), grid, spec.task);
    WeightMap truth{std::move(w_true), grid, 0.0};
    return SyntheticData{grid, std::move(data), std::move(truth), std::move(centers), signal};
}

} // namespace socialsparse
