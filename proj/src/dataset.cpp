#include "inpaint_gan/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "inpaint_gan/errors.hpp"
#include "inpaint_gan/seeding.hpp"
#include "inpaint_gan/volume_io.hpp"

namespace inpaint_gan {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("manifest " + path.string() + " has no header");
  const auto header = split_csv(line);
  const bool has_synthetic = header.size() == 5 && header[4] == "synthetic";
  if (header.size() < 4 || header[0] != "patch_file" || header[1] != "label" || header[2] != "diameter_mm" ||
      header[3] != "split" || (header.size() == 5 && !has_synthetic) || header.size() > 5) {
    throw FormatError("manifest header must be patch_file,label,diameter_mm,split[,synthetic]");
  }
  std::vector<ManifestRow> rows;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw FormatError("manifest row " + std::to_string(number) + " has wrong field count");
    ManifestRow r;
    r.patch_file = f[0];
    try {
      r.label = parse_domain_label(f[1]);
      r.diameter_mm = std::stod(f[2]);
    } catch (const std::exception& e) {
      throw FormatError("manifest row " + std::to_string(number) + ": " + e.what());
    }
    r.split = f[3];
    if (r.split != "train" && r.split != "val" && r.split != "test") {
      throw FormatError("manifest row " + std::to_string(number) + ": split must be train, val or test");
    }
    r.synthetic = has_synthetic && (f[4] == "1" || f[4] == "true");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_manifest(std::span<const ManifestRow> rows, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out.precision(17);
  out << "patch_file,label,diameter_mm,split,synthetic\n";
  for (const auto& r : rows) {
    out << r.patch_file << ',' << to_string(r.label) << ',' << r.diameter_mm << ',' << r.split << ','
        << (r.synthetic ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

std::vector<PatchSample>& PatchDataset::split(const std::string& name) {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ValidationError("unknown split '" + name + "'");
}

const std::vector<PatchSample>& PatchDataset::split(const std::string& name) const {
  return const_cast<PatchDataset*>(this)->split(name);
}

PatchDataset load_patch_dataset(const fs::path& dir, std::uint64_t noise_seed) {
  PatchDataset data;
  for (const auto& row : read_manifest(dir / "manifest.csv")) {
    const auto volume = load_volume(dir / row.patch_file);
    auto raw = volume.voxels;
    if (raw.min() < -1.0f || raw.max() > 1.0f) {
      throw FormatError("patch " + row.patch_file + " is not intensity-normalised to [-1, 1]");
    }
    auto sample = make_sample(std::move(raw), row.label, row.diameter_mm, volume.spacing,
                              derive_seed(noise_seed, row.patch_file));
    sample.synthetic = row.synthetic;
    data.split(row.split).push_back(std::move(sample));
  }
  return data;
}

void write_patch_dataset(const fs::path& dir, std::span<const PatchSample> samples, std::span<const std::string> splits,
                         const Vec3& spacing, const std::string& prefix) {
  if (splits.size() != samples.size()) throw ValidationError("one split name per sample is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s%05zu.vol", prefix.c_str(), i);
    save_volume(Volume{samples[i].raw, spacing, {0.0, 0.0, 0.0}}, dir / name);
    rows.push_back({name, samples[i].label, samples[i].diameter_mm, splits[i], samples[i].synthetic});
  }
  write_manifest(rows, dir / "manifest.csv");
}

}  // namespace inpaint_gan
