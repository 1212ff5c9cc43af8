#include <socialsparse/data_io.hpp>

#include <socialsparse/error.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace socialsparse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view sidecar_suffix = ".ssvol.json";

std::string stem_of(const fs::path& sidecar)
{
    const std::string name = sidecar.filename().string();
    if (name.size() <= sidecar_suffix.size() || !name.ends_with(sidecar_suffix)) {
        throw UsageError("package sidecar must end in .ssvol.json: " + sidecar.string());
    }
    return name.substr(0, name.size() - sidecar_suffix.size());
}

std::vector<char> read_bytes(const fs::path& path, const char* what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(std::string("cannot open ") + what + " file " + path.string());
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const fs::path& path, const char* bytes, std::size_t size)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(bytes, static_cast<std::streamsize>(size));
    if (!out) throw FormatError("write failed for " + path.string());
}

std::uint32_t load_le32(const char* p)
{
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(p[i]);
    return v;
}

void store_le32(char* p, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(std::string s)
{
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
    return s.substr(b);
}

std::optional<double> parse_number(const std::string& s)
{
    double value = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

json header_json(const VolumePackage& pkg, const std::string& stem)
{
    json h;
    h["version"] = VolumePackage::format_version;
    h["dims"] = {pkg.dims.nx, pkg.dims.ny, pkg.dims.nz};
    h["n_samples"] = pkg.n_samples;
    h["dtype"] = "f32le";
    h["mask_file"] = stem + ".ssvol.mask";
    h["data_file"] = stem + ".ssvol.f32";
    if (!pkg.metadata.is_null()) h["metadata"] = pkg.metadata;
    return h;
}

void check_package_shape(const VolumePackage& pkg)
{
    const auto volume = static_cast<std::size_t>(pkg.dims.volume());
    if (pkg.dims.nx < 1 || pkg.dims.ny < 1 || pkg.dims.nz < 1) throw UsageError("package dims must be positive");
    if (pkg.mask.size() != volume) throw UsageError("package mask does not match dims");
    if (pkg.n_samples < 0 || pkg.data.size() != volume * static_cast<std::size_t>(pkg.n_samples)) {
        throw UsageError("package data does not match dims and n_samples");
    }
}

} // namespace

fs::path resolve_sidecar(const fs::path& path)
{
    if (fs::is_directory(path)) return path / "data.ssvol.json";
    return path;
}

VolumePackage read_package(const fs::path& sidecar_arg)
{
    const fs::path sidecar = resolve_sidecar(sidecar_arg);
    std::ifstream in(sidecar);
    if (!in) throw FormatError("cannot open package sidecar " + sidecar.string());
    json h;
    try {
        in >> h;
    } catch (const json::exception& e) {
        throw FormatError("sidecar " + sidecar.string() + " is not valid JSON: " + e.what());
    }

    VolumePackage pkg;
    try {
        const int version = h.at("version").get<int>();
        if (version != VolumePackage::format_version) {
            throw FormatError("unsupported package version " + std::to_string(version));
        }
        const auto dtype = h.at("dtype").get<std::string>();
        if (dtype != "f32le") throw FormatError("unsupported dtype '" + dtype + "' (expected f32le)");
        const auto dims = h.at("dims").get<std::vector<Index>>();
        if (dims.size() != 3 || dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
            throw FormatError("dims must be three positive integers");
        }
        pkg.dims = {dims[0], dims[1], dims[2]};
        pkg.n_samples = h.at("n_samples").get<Index>();
        if (pkg.n_samples < 0) throw FormatError("n_samples must be non-negative");
        if (h.contains("metadata")) pkg.metadata = h.at("metadata");

        const auto volume = static_cast<std::size_t>(pkg.dims.volume());
        const fs::path dir = sidecar.parent_path();

        if (!h.contains("mask_file")) throw FormatError("sidecar has no mask_file");
        const auto mask_path = dir / h.at("mask_file").get<std::string>();
        if (!fs::exists(mask_path)) throw FormatError("missing mask file " + mask_path.string());
        const auto mask_bytes = read_bytes(mask_path, "mask");
        if (mask_bytes.size() != volume) {
            throw FormatError("mask file " + mask_path.string() + " has " + std::to_string(mask_bytes.size())
                              + " bytes, expected " + std::to_string(volume));
        }
        pkg.mask.resize(volume);
        for (std::size_t i = 0; i < volume; ++i) {
            const auto b = static_cast<std::uint8_t>(mask_bytes[i]);
            if (b > 1) {
                throw FormatError("mask byte at offset " + std::to_string(i) + " is " + std::to_string(b)
                                  + " (expected 0 or 1)");
            }
            pkg.mask[i] = b;
        }

        const auto data_path = dir / h.at("data_file").get<std::string>();
        const auto data_bytes = read_bytes(data_path, "data");
        const auto expected = 4 * volume * static_cast<std::size_t>(pkg.n_samples);
        if (data_bytes.size() != expected) {
            throw FormatError("data file " + data_path.string() + " has " + std::to_string(data_bytes.size())
                              + " bytes, expected " + std::to_string(expected) + " (4 x "
                              + std::to_string(pkg.n_samples) + " samples x " + std::to_string(volume) + " voxels)");
        }
        pkg.data.resize(volume * static_cast<std::size_t>(pkg.n_samples));
        for (std::size_t i = 0; i < pkg.data.size(); ++i) {
            pkg.data[i] = std::bit_cast<float>(load_le32(data_bytes.data() + 4 * i));
        }
    } catch (const json::exception& e) {
        throw FormatError("bad sidecar " + sidecar.string() + ": " + e.what());
    }
    return pkg;
}

void write_package(const VolumePackage& pkg, const fs::path& sidecar)
{
    check_package_shape(pkg);
    const std::string stem = stem_of(sidecar);
    const fs::path dir = sidecar.parent_path();
    if (!dir.empty()) fs::create_directories(dir);

    const std::string header = header_json(pkg, stem).dump(2) + "\n";
    write_bytes(sidecar, header.data(), header.size());

    std::vector<char> mask(pkg.mask.begin(), pkg.mask.end());
    write_bytes(dir / (stem + ".ssvol.mask"), mask.data(), mask.size());

    std::vector<char> bytes(4 * pkg.data.size());
    for (std::size_t i = 0; i < pkg.data.size(); ++i) store_le32(bytes.data() + 4 * i, std::bit_cast<std::uint32_t>(pkg.data[i]));
    write_bytes(dir / (stem + ".ssvol.f32"), bytes.data(), bytes.size());
}

Labels read_labels(const fs::path& csv, Index expected_samples, std::optional<Task> task)
{
    std::ifstream in(csv);
    if (!in) throw FormatError("cannot open label file " + csv.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "sample,label") {
        throw FormatError("label file " + csv.string() + " must start with the header 'sample,label'");
    }

    std::vector<std::optional<std::string>> by_sample(static_cast<std::size_t>(expected_samples));
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(trim(line));
        const auto where = csv.string() + ":" + std::to_string(line_no);
        if (fields.size() != 2) throw FormatError(where + ": expected 2 fields");
        const auto idx = parse_number(trim(fields[0]));
        if (!idx || *idx < 0 || *idx != static_cast<double>(static_cast<Index>(*idx))
            || static_cast<Index>(*idx) >= expected_samples) {
            throw FormatError(where + ": bad sample index '" + fields[0] + "'");
        }
        auto& slot = by_sample[static_cast<std::size_t>(*idx)];
        if (slot) throw FormatError(where + ": duplicate sample " + fields[0]);
        slot = trim(fields[1]);
    }
    std::vector<std::string> raw;
    raw.reserve(by_sample.size());
    for (std::size_t i = 0; i < by_sample.size(); ++i) {
        if (!by_sample[i]) throw FormatError("label file " + csv.string() + " has no label for sample " + std::to_string(i));
        raw.push_back(*by_sample[i]);
    }

    std::vector<std::string> distinct(raw.begin(), raw.end());
    const bool numeric = std::all_of(raw.begin(), raw.end(), [](const std::string& s) { return parse_number(s).has_value(); });
    auto less = [numeric](const std::string& a, const std::string& b) {
        return numeric ? *parse_number(a) < *parse_number(b) : a < b;
    };
    std::sort(distinct.begin(), distinct.end(), less);
    distinct.erase(std::unique(distinct.begin(), distinct.end(),
                               [&](const std::string& a, const std::string& b) { return !less(a, b) && !less(b, a); }),
                   distinct.end());

    Labels out;
    out.task = task.value_or(distinct.size() == 2 ? Task::classification : Task::regression);
    out.values.resize(static_cast<Index>(raw.size()));
    if (out.task == Task::classification) {
        if (distinct.size() != 2) {
            throw FormatError("classification needs exactly 2 distinct labels, found " + std::to_string(distinct.size()));
        }
        out.classes = distinct;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            out.values[static_cast<Index>(i)] = less(raw[i], distinct[1]) ? -1.0 : 1.0;
        }
    } else {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const auto v = parse_number(raw[i]);
            if (!v) throw FormatError("regression label '" + raw[i] + "' for sample " + std::to_string(i) + " is not a number");
            out.values[static_cast<Index>(i)] = *v;
        }
    }
    return out;
}

void write_labels(const fs::path& csv, const std::vector<std::string>& labels)
{
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    std::ofstream out(csv, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + csv.string());
    out << "sample,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

fs::path companion_labels(const fs::path& sidecar)
{
    return resolve_sidecar(sidecar).parent_path() / "labels.csv";
}

GridPtr package_grid(const VolumePackage& pkg)
{
    try {
        return std::make_shared<const VolumeGrid>(pkg.dims, pkg.mask);
    } catch (const UsageError& e) {
        throw FormatError(std::string("invalid package mask: ") + e.what());
    }
}

Dataset package_to_dataset(const VolumePackage& pkg, const Labels& labels)
{
    auto grid = package_grid(pkg);
    if (labels.values.size() != pkg.n_samples) {
        throw FormatError("package has " + std::to_string(pkg.n_samples) + " samples but " + std::to_string(labels.values.size())
                          + " labels");
    }
    const auto volume = static_cast<std::size_t>(pkg.dims.volume());
    Matrix X(pkg.n_samples, grid->voxel_count());
    for (Index s = 0; s < pkg.n_samples; ++s) {
        const float* sample = pkg.data.data() + static_cast<std::size_t>(s) * volume;
        for (Index m = 0; m < X.cols(); ++m) X(s, m) = sample[grid->full_index_of(m)];
    }
    return Dataset(std::move(X), labels.values, std::move(grid), labels.task);
}

VolumePackage dataset_to_package(const Dataset& data)
{
    const auto& grid = *data.grid();
    VolumePackage pkg;
    pkg.dims = grid.dims();
    pkg.n_samples = data.n_samples();
    pkg.mask = grid.mask();
    const auto volume = static_cast<std::size_t>(grid.volume_size());
    pkg.data.assign(volume * static_cast<std::size_t>(pkg.n_samples), 0.0f);
    for (Index s = 0; s < pkg.n_samples; ++s) {
        for (Index m = 0; m < data.n_features(); ++m) {
            pkg.data[static_cast<std::size_t>(s) * volume + static_cast<std::size_t>(grid.full_index_of(m))] =
                static_cast<float>(data.X()(s, m));
        }
    }
    return pkg;
}

LoadedData load_package(const fs::path& path, const std::optional<fs::path>& labels_path, std::optional<Task> task)
{
    const fs::path sidecar = resolve_sidecar(path);
    const VolumePackage pkg = read_package(sidecar);
    Labels labels = read_labels(labels_path.value_or(companion_labels(sidecar)), pkg.n_samples, task);
    Dataset data = package_to_dataset(pkg, labels);
    auto grid = data.grid();
    return LoadedData{std::move(grid), std::move(data), std::move(labels)};
}

VolumePackage weight_map_package(const WeightMap& wm, json metadata)
{
    const Vector volume = expand_to_volume(wm);
    VolumePackage pkg;
    pkg.dims = wm.grid->dims();
    pkg.n_samples = 1;
    pkg.mask = wm.grid->mask();
    pkg.data.resize(static_cast<std::size_t>(volume.size()));
    for (Index i = 0; i < volume.size(); ++i) pkg.data[static_cast<std::size_t>(i)] = static_cast<float>(volume[i]);
    metadata["intercept"] = wm.intercept;
    pkg.metadata = std::move(metadata);
    return pkg;
}

LoadedModel read_weight_map(const fs::path& sidecar)
{
    VolumePackage pkg = read_package(sidecar);
    if (pkg.n_samples != 1) throw FormatError("weight map must hold exactly one volume");
    LoadedModel model;
    model.dims = pkg.dims;
    model.volume.resize(static_cast<Index>(pkg.data.size()));
    for (std::size_t i = 0; i < pkg.data.size(); ++i) model.volume[static_cast<Index>(i)] = pkg.data[i];
    if (pkg.metadata.is_object() && pkg.metadata.contains("intercept")) {
        model.intercept = pkg.metadata.at("intercept").get<double>();
    }
    model.metadata = std::move(pkg.metadata);
    return model;
}

void write_flat_csv(const VolumePackage& pkg, const fs::path& csv)
{
    check_package_shape(pkg);
    std::ofstream out(csv, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + csv.string());
    const auto volume = static_cast<std::size_t>(pkg.dims.volume());
    for (std::size_t v = 0; v < volume; ++v) out << (v ? "," : "") << 'v' << v;
    out << '\n';
    char buf[64];
    for (Index s = 0; s < pkg.n_samples; ++s) {
        for (std::size_t v = 0; v < volume; ++v) {
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, pkg.data[static_cast<std::size_t>(s) * volume + v]);
            if (v) out << ',';
            out.write(buf, end - buf);
        }
        out << '\n';
    }
}

VolumePackage read_flat_csv(const fs::path& csv, Dims dims, std::vector<std::uint8_t> mask)
{
    std::ifstream in(csv);
    if (!in) throw FormatError("cannot open " + csv.string());
    VolumePackage pkg;
    pkg.dims = dims;
    pkg.mask = std::move(mask);
    const auto volume = static_cast<std::size_t>(dims.volume());
    if (pkg.mask.size() != volume) throw UsageError("mask does not match dims");

    std::string line;
    if (!std::getline(in, line) || split_csv_line(trim(line)).size() != volume) {
        throw FormatError(csv.string() + ": header must list " + std::to_string(volume) + " voxel columns");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(trim(line));
        if (fields.size() != volume) {
            throw FormatError(csv.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(volume) + " values");
        }
        for (const auto& f : fields) {
            float value = 0.0f;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
            if (ec != std::errc() || ptr != f.data() + f.size()) {
                throw FormatError(csv.string() + ":" + std::to_string(line_no) + ": bad value '" + f + "'");
            }
            pkg.data.push_back(value);
        }
        ++pkg.n_samples;
    }
    return pkg;
}

} // namespace socialsparse
