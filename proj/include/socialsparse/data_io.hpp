#pragma once
#include <socialsparse/grid.hpp>

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace socialsparse {

/// On-disk volume package: `<stem>.ssvol.json` sidecar, `<stem>.ssvol.mask`
/// (one byte per voxel) and `<stem>.ssvol.f32` (little-endian float32,
/// sample-major, x-fastest within each volume).
struct VolumePackage {
    static constexpr int format_version = 1;

    Dims dims;
    Index n_samples = 0;
    std::vector<std::uint8_t> mask;
    std::vector<float> data;  // n_samples * volume, sample-major
    // Optional free-form block, used for weight-map model metadata.
    nlohmann::json metadata;

    friend bool operator==(const VolumePackage&, const VolumePackage&) = default;
};

/// Sidecar path for a package argument: a `.ssvol.json` file is used as is, a
/// directory maps to `<dir>/data.ssvol.json`.
std::filesystem::path resolve_sidecar(const std::filesystem::path& path);

VolumePackage read_package(const std::filesystem::path& sidecar);

/// Writes the sidecar plus its mask and data files next to it. `sidecar`
/// must end in `.ssvol.json`.
void write_package(const VolumePackage& pkg, const std::filesystem::path& sidecar);

/// Two-class label table mapped to -1/+1 (first sorted label is -1), or real
/// targets.
struct Labels {
    Vector values;
    Task task = Task::regression;
    // For classification, the original names of the -1 and +1 classes.
    std::vector<std::string> classes;
};

/// Reads a `sample,label` CSV. With `task` unset, two distinct labels mean
/// classification, anything else regression.
Labels read_labels(const std::filesystem::path& csv, Index expected_samples, std::optional<Task> task = std::nullopt);

void write_labels(const std::filesystem::path& csv, const std::vector<std::string>& labels);

/// Companion label file of a package: `labels.csv` next to the sidecar.
std::filesystem::path companion_labels(const std::filesystem::path& sidecar);

/// Masked design matrix and targets from a package.
Dataset package_to_dataset(const VolumePackage& pkg, const Labels& labels);

GridPtr package_grid(const VolumePackage& pkg);

/// Package from a dataset, zero outside the mask.
VolumePackage dataset_to_package(const Dataset& data);

struct LoadedData {
    GridPtr grid;
    Dataset dataset;
    Labels labels;
};

/// Package plus labels. Labels default to the companion file.
LoadedData load_package(const std::filesystem::path& path, const std::optional<std::filesystem::path>& labels = std::nullopt,
                        std::optional<Task> task = std::nullopt);

/// Weight map as a single-sample package with metadata attached.
VolumePackage weight_map_package(const WeightMap& wm, nlohmann::json metadata);

/// Inverse of weight_map_package: full-volume weights plus intercept from the
/// metadata block.
struct LoadedModel {
    Dims dims;
    Vector volume;
    double intercept = 0.0;
    nlohmann::json metadata;
};

LoadedModel read_weight_map(const std::filesystem::path& sidecar);

// Interop: one row per sample, one column per voxel of the full volume, with
// a `v<index>` header.
void write_flat_csv(const VolumePackage& pkg, const std::filesystem::path& csv);
VolumePackage read_flat_csv(const std::filesystem::path& csv, Dims dims, std::vector<std::uint8_t> mask);

} // namespace socialsparse
