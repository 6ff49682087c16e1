#include "inpaint_gan/volume_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "inpaint_gan/errors.hpp"

namespace inpaint_gan {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "the .vol payload is written as raw little-endian f32");

Vec3 vec3_from_json(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) {
    throw FormatError(std::string("volume header field '") + key + "' must be a 3-element array");
  }
  const auto& a = j[key];
  for (const auto& v : a) {
    if (!v.is_number()) throw FormatError(std::string("volume header field '") + key + "' must be numeric");
  }
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == sep && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(trim(field));
  return out;
}

double parse_double(const std::string& text, const std::string& column) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ValidationError("column " + column + ": '" + text + "' is not a number");
  }
  if (used != text.size() || !std::isfinite(value)) {
    throw ValidationError("column " + column + ": '" + text + "' is not a finite number");
  }
  return value;
}

}  // namespace

void validate_volume(const Volume& volume) {
  const auto& s = volume.voxels.shape();
  if (!s.positive()) throw ValidationError("volume dimensions must each be >= 1, got " + to_string(s));
  if (!(volume.spacing.x > 0 && volume.spacing.y > 0 && volume.spacing.z > 0)) {
    throw ValidationError("volume spacing must be strictly positive");
  }
  if (!std::isfinite(volume.origin.x) || !std::isfinite(volume.origin.y) || !std::isfinite(volume.origin.z) ||
      !std::isfinite(volume.spacing.x) || !std::isfinite(volume.spacing.y) || !std::isfinite(volume.spacing.z)) {
    throw ValidationError("volume spacing and origin must be finite");
  }
  if (!volume.voxels.all_finite()) throw ValidationError("volume contains NaN or infinite voxels");
}

Volume load_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open volume " + path.string());

  std::string header_line;
  if (!std::getline(in, header_line)) throw FormatError("missing volume header in " + path.string());

  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::parse_error& e) {
    throw FormatError("malformed volume header in " + path.string() + ": " + e.what());
  }
  if (!header.is_object()) throw FormatError("volume header must be a JSON object");
  if (header.value("dtype", std::string{}) != "f32le") {
    throw FormatError("unsupported volume dtype in " + path.string() + " (expected f32le)");
  }
  if (!header.contains("dims") || !header["dims"].is_array() || header["dims"].size() != 3) {
    throw FormatError("volume header field 'dims' must be a 3-element array");
  }
  Shape3 dims;
  try {
    dims = {header["dims"][0].get<std::int64_t>(), header["dims"][1].get<std::int64_t>(),
            header["dims"][2].get<std::int64_t>()};
  } catch (const json::exception&) {
    throw FormatError("volume header field 'dims' must hold integers");
  }
  if (!dims.positive()) throw FormatError("volume dims must each be >= 1, got " + to_string(dims));

  Volume volume;
  volume.spacing = vec3_from_json(header, "spacing");
  volume.origin = vec3_from_json(header, "origin");

  const auto expected_bytes = static_cast<std::size_t>(dims.count()) * sizeof(float);
  std::vector<float> payload(static_cast<std::size_t>(dims.count()));
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(expected_bytes));
  const auto got = static_cast<std::size_t>(in.gcount());
  in.peek();
  if (got != expected_bytes || !in.eof()) {
    throw FormatError("payload size mismatch in " + path.string() + ": header declares " + to_string(dims) +
                      " voxels (" + std::to_string(expected_bytes) + " bytes)");
  }
  volume.voxels = Array3f(dims, std::move(payload));
  validate_volume(volume);
  return volume;
}

void save_volume(const Volume& volume, const std::filesystem::path& path) {
  validate_volume(volume);
  const auto& s = volume.voxels.shape();
  json header = {{"dims", {s.x, s.y, s.z}},
                 {"spacing", {volume.spacing.x, volume.spacing.y, volume.spacing.z}},
                 {"origin", {volume.origin.x, volume.origin.y, volume.origin.z}},
                 {"dtype", "f32le"}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write volume " + path.string());
  const std::string line = header.dump() + "\n";
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  const auto values = volume.voxels.values();
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (!out) throw IoError("failed writing volume " + path.string());
}

std::vector<NoduleAnnotation> parse_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotation table " + path.string());

  static const std::vector<std::string> kColumns = {"volume_id", "cx_mm", "cy_mm", "cz_mm", "diameter_mm", "scores"};

  std::string line;
  if (!std::getline(in, line)) throw FormatError("annotation table " + path.string() + " has no header");
  const auto header = split(line, ',');
  std::vector<int> position(kColumns.size(), -1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto it = std::find(kColumns.begin(), kColumns.end(), header[c]);
    if (it == kColumns.end()) throw ValidationError("unknown annotation column '" + header[c] + "'");
    auto& slot = position[static_cast<std::size_t>(it - kColumns.begin())];
    if (slot >= 0) throw ValidationError("duplicate annotation column '" + header[c] + "'");
    slot = static_cast<int>(c);
  }
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    if (position[c] < 0) throw ValidationError("missing annotation column '" + kColumns[c] + "'");
  }

  std::vector<NoduleAnnotation> rows;
  std::string problems;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    try {
      const auto fields = split(line, ',');
      if (fields.size() != header.size()) {
        throw ValidationError("expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
      }
      auto field = [&](std::size_t c) -> const std::string& { return fields[static_cast<std::size_t>(position[c])]; };
      NoduleAnnotation a;
      a.source_volume_id = field(0);
      if (a.source_volume_id.empty()) throw ValidationError("empty volume_id");
      a.center_mm = {parse_double(field(1), "cx_mm"), parse_double(field(2), "cy_mm"), parse_double(field(3), "cz_mm")};
      a.diameter_mm = parse_double(field(4), "diameter_mm");
      if (!(a.diameter_mm > 0)) throw ValidationError("diameter_mm must be > 0");
      for (const auto& token : split(field(5), ';')) {
        std::size_t used = 0;
        int score = 0;
        try {
          score = std::stoi(token, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (token.empty() || used != token.size()) throw ValidationError("score '" + token + "' is not an integer");
        if (score < 1 || score > 5) throw ValidationError("score " + std::to_string(score) + " outside 1..5");
        a.scores.push_back(score);
      }
      rows.push_back(std::move(a));
    } catch (const ValidationError& e) {
      problems += "\n  row " + std::to_string(line_number) + ": " + e.what();
    }
  }
  if (!problems.empty()) throw ValidationError("invalid annotation rows in " + path.string() + ":" + problems);
  return rows;
}

void write_annotations(std::span<const NoduleAnnotation> annotations, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write annotation table " + path.string());
  out.precision(17);
  out << "volume_id,cx_mm,cy_mm,cz_mm,diameter_mm,scores\n";
  for (const auto& a : annotations) {
    out << a.source_volume_id << ',' << a.center_mm.x << ',' << a.center_mm.y << ',' << a.center_mm.z << ','
        << a.diameter_mm << ',';
    for (std::size_t i = 0; i < a.scores.size(); ++i) out << (i ? ";" : "") << a.scores[i];
    out << '\n';
  }
  if (!out) throw IoError("failed writing annotation table " + path.string());
}

Malignancy consensus_malignancy(std::span<const int> scores) {
  if (scores.empty()) throw ValidationError("consensus_malignancy needs at least one score");
  std::size_t high = 0;
  for (int s : scores) {
    if (s < 1 || s > 5) throw ValidationError("malignancy score " + std::to_string(s) + " outside 1..5");
    if (s >= 4) ++high;
  }
  return 2 * high > scores.size() ? Malignancy::malignant : Malignancy::benign;
}

}  // namespace inpaint_gan
