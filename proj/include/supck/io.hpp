#pragma once

// File formats: cloud CSV + JSON sidecar, similarity matrix CSV + JSON
// metadata, evaluation report JSON, projection CSV and transform JSON.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "supck/eval.hpp"
#include "supck/kpca.hpp"
#include "supck/pdb.hpp"

namespace supck {

using json = nlohmann::ordered_json;

/// 12 significant digits, so reruns give byte-identical files;
/// "inf"/"-inf"/"nan" for non-finite values.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double parse_real_token(std::string_view s) {
  const std::string_view t = detail::trim(s);
  if (t == "inf" || t == "Inf" || t == "infinity") return kNoLabels;
  if (t == "-inf") return -kNoLabels;
  if (t == "nan") return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw InputError("malformed number '" + std::string(s) + "'");
  return v;
}

/// JSON value for a real that may be infinite.
inline json real_json(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

inline json real_json(const std::optional<double>& v) { return v ? real_json(*v) : json(nullptr); }

inline double real_from_json(const json& j) {
  if (j.is_string()) return parse_real_token(j.get<std::string>());
  return j.get<double>();
}

namespace detail {

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------- clouds

inline constexpr const char* kCloudHeader = "x,y,z,charge,element,res_name,res_seq,atom_name";

struct CloudSidecar {
  std::string id;
  std::optional<std::string> ligand_class;
  std::string source_file;
  std::optional<double> cutoff_radius;
};

inline std::string cloud_to_csv(const AtomCloud& cloud) {
  std::string s = std::string(kCloudHeader) + "\n";
  for (const Atom& a : cloud.atoms()) {
    s += format_real(a.position.x()) + "," + format_real(a.position.y()) + "," + format_real(a.position.z()) + "," +
         format_real(a.label) + "," + a.element + "," + a.meta.res_name + "," + std::to_string(a.meta.res_seq) + "," +
         a.meta.atom_name + "\n";
  }
  return s;
}

inline AtomCloud cloud_from_csv(const std::string& text, std::string id = {},
                                std::optional<std::string> ligand_class = std::nullopt) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<Atom> atoms;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (!header) {
      std::string joined;
      for (const auto& x : f) joined += (joined.empty() ? "" : ",") + x;
      if (joined != kCloudHeader) throw ParseError(line_no, std::string("cloud header must be '") + kCloudHeader + "'");
      header = true;
      continue;
    }
    if (f.size() != 8) throw ParseError(line_no, "expected 8 fields");
    Atom a;
    try {
      a.position = Vec3(parse_real_token(f[0]), parse_real_token(f[1]), parse_real_token(f[2]));
      a.label = parse_real_token(f[3]);
    } catch (const InputError& e) {
      throw ParseError(line_no, e.what());
    }
    a.element = f[4];
    a.meta.res_name = f[5];
    a.meta.res_seq = f[6].empty() ? 0 : detail::parse_int(f[6], line_no, "res_seq");
    a.meta.atom_name = f[7];
    atoms.push_back(std::move(a));
  }
  if (!header) throw InputError("cloud file is empty");
  return AtomCloud(std::move(atoms), std::move(id), std::move(ligand_class));
}

inline json sidecar_json(const CloudSidecar& s) {
  json j;
  j["id"] = s.id;
  j["ligand_class"] = s.ligand_class ? json(*s.ligand_class) : json(nullptr);
  j["source_file"] = s.source_file;
  j["cutoff_radius"] = real_json(s.cutoff_radius);
  return j;
}

/// Writes `<dir>/<id>.csv` and `<dir>/<id>.json`; returns the CSV path.
inline std::filesystem::path write_cloud(const std::filesystem::path& dir, const AtomCloud& cloud,
                                         const CloudSidecar& sidecar) {
  std::filesystem::create_directories(dir);
  const auto csv = dir / (sidecar.id + ".csv");
  detail::write_text(csv, cloud_to_csv(cloud));
  detail::write_text(dir / (sidecar.id + ".json"), sidecar_json(sidecar).dump(2) + "\n");
  return csv;
}

/// Reads a cloud CSV and, when present, its JSON sidecar (same stem).
inline AtomCloud load_cloud(const std::filesystem::path& csv_path, CloudSidecar* sidecar_out = nullptr) {
  CloudSidecar sc;
  sc.id = csv_path.stem().string();
  auto side = csv_path;
  side.replace_extension(".json");
  if (std::filesystem::exists(side)) {
    const json j = json::parse(detail::read_text(side));
    if (j.contains("id") && j["id"].is_string()) sc.id = j["id"].get<std::string>();
    if (j.contains("ligand_class") && j["ligand_class"].is_string()) sc.ligand_class = j["ligand_class"].get<std::string>();
    if (j.contains("source_file") && j["source_file"].is_string()) sc.source_file = j["source_file"].get<std::string>();
    if (j.contains("cutoff_radius") && !j["cutoff_radius"].is_null()) sc.cutoff_radius = real_from_json(j["cutoff_radius"]);
  }
  AtomCloud c;
  try {
    c = cloud_from_csv(detail::read_text(csv_path), sc.id, sc.ligand_class);
  } catch (const InputError& e) {
    throw InputError(csv_path.string() + ": " + e.what());
  }
  if (sidecar_out) *sidecar_out = sc;
  return c;
}

/// Every `*.csv` cloud in `dir`, sorted by file name.
inline std::vector<AtomCloud> load_cloud_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no cloud files in '" + dir.string() + "'");
  std::vector<AtomCloud> out;
  for (const auto& f : files) out.push_back(load_cloud(f));
  return out;
}

// ---------------------------------------------------------------- matrices

inline std::string matrix_to_csv(const SimilarityMatrix& m) {
  std::string s = "id";
  for (const auto& id : m.ids) s += "," + id;
  s += "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    s += m.ids[i];
    for (std::size_t j = 0; j < m.size(); ++j)
      s += "," + format_real(m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    s += "\n";
  }
  return s;
}

inline SimilarityMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  SimilarityMatrix m;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv(line);
    if (m.ids.empty()) {
      if (f.size() < 2 || f[0] != "id") throw ParseError(line_no, "matrix header must start with 'id'");
      m.ids.assign(f.begin() + 1, f.end());
      continue;
    }
    if (f.size() != m.ids.size() + 1) throw ParseError(line_no, "row length does not match header");
    if (f[0] != m.ids[rows.size()]) throw ParseError(line_no, "row id '" + f[0] + "' does not match column order");
    std::vector<double> row;
    for (std::size_t j = 1; j < f.size(); ++j) {
      try {
        row.push_back(parse_real_token(f[j]));
      } catch (const InputError& e) {
        throw ParseError(line_no, e.what());
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() != m.ids.size()) throw InputError("matrix is not square");
  const auto n = static_cast<Eigen::Index>(rows.size());
  m.scores.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m.scores(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline json align_config_json(const AlignConfig& a) {
  json j;
  j["sigma"] = real_json(a.sigma);
  j["lambda"] = real_json(a.lambda);
  j["max_iterations"] = a.max_iterations;
  j["gradient_tolerance"] = a.gradient_tolerance;
  j["score_tolerance"] = a.score_tolerance;
  j["initial_step"] = a.initial_step;
  j["max_step"] = a.max_step;
  j["axis_similarity_ratio"] = a.axis_similarity_ratio;
  j["extra_random_starts"] = a.extra_random_starts;
  j["seed"] = a.seed;
  return j;
}

inline json measure_config_json(const MeasureConfig& c) {
  json j;
  j["measure"] = std::string(to_string(c.kind));
  j["orientation"] = std::string(to_string(c.orientation()));
  j["align"] = align_config_json(c.effective_align());
  j["overlap_tolerance"] = c.overlap_tolerance;
  j["alpha"] = c.alpha;
  return j;
}

/// Writes `<stem>.csv` and `<stem>.json` (orientation, measure, params, ids, classes).
inline void write_matrix(const std::filesystem::path& csv_path, const SimilarityMatrix& m, const json& params) {
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  detail::write_text(csv_path, matrix_to_csv(m));
  json meta;
  meta["orientation"] = std::string(to_string(m.orientation));
  meta["measure"] = params.contains("measure") ? params["measure"] : json(nullptr);
  meta["params"] = params;
  meta["ids"] = m.ids;
  meta["classes"] = m.classes;
  auto side = csv_path;
  side.replace_extension(".json");
  detail::write_text(side, meta.dump(2) + "\n");
}

inline SimilarityMatrix load_matrix(const std::filesystem::path& csv_path) {
  SimilarityMatrix m;
  try {
    m = matrix_from_csv(detail::read_text(csv_path));
  } catch (const InputError& e) {
    throw InputError(csv_path.string() + ": " + e.what());
  }
  auto side = csv_path;
  side.replace_extension(".json");
  if (!std::filesystem::exists(side)) throw InputError("missing matrix metadata '" + side.string() + "'");
  const json meta = json::parse(detail::read_text(side));
  m.orientation = parse_orientation(meta.at("orientation").get<std::string>());
  if (meta.contains("classes")) m.classes = meta["classes"].get<std::vector<std::string>>();
  if (meta.contains("ids") && meta["ids"].get<std::vector<std::string>>() != m.ids)
    throw InputError("matrix metadata ids do not match the CSV header");
  m.validate();
  return m;
}

// ---------------------------------------------------------------- reports

inline json param_record_json(const ParamRecord& p) {
  json j;
  j["k"] = p.k;
  j["sigma"] = real_json(p.sigma);
  j["lambda"] = real_json(p.lambda);
  j["radius"] = real_json(p.radius);
  j["alpha"] = real_json(p.alpha);
  j["alpha_multiplier"] = real_json(p.alpha_multiplier);
  return j;
}

inline json report_json(const EvalReport& r) {
  json j;
  j["mean_auc"] = real_json(r.mean_auc);
  j["auc_std"] = real_json(r.auc_std);
  j["classification_error"] = r.classification_error;
  json per = json::array();
  for (std::size_t i = 0; i < r.ids.size(); ++i)
    per.push_back({{"id", r.ids[i]}, {"auc", real_json(r.per_query_auc[i])}});
  j["per_query_auc"] = per;
  j["class_names"] = r.class_names;
  j["confusion"] = r.confusion;
  json folds = json::array();
  for (const auto& f : r.chosen_params)
    folds.push_back({{"id", f.id},
                     {"true_class", f.true_class},
                     {"predicted_class", f.predicted_class},
                     {"inner_error", f.inner_error},
                     {"params", param_record_json(f.params)}});
  j["chosen_params"] = folds;
  j["warnings"] = r.warnings;
  j["notes"] = r.notes;
  return j;
}

inline json auc_summary_json(const SimilarityMatrix& m, const AucSummary& s) {
  json j;
  j["mean_auc"] = real_json(s.mean);
  j["auc_std"] = real_json(s.stddev);
  j["defined_queries"] = s.defined;
  json per = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) per.push_back({{"id", m.ids[i]}, {"auc", real_json(s.per_query[i])}});
  j["per_query_auc"] = per;
  return j;
}

inline std::string projection_to_csv(const Projection& p) {
  std::string s = "id,class";
  for (Eigen::Index c = 0; c < p.coordinates.cols(); ++c) s += ",pc" + std::to_string(c + 1);
  s += "\n";
  for (std::size_t i = 0; i < p.ids.size(); ++i) {
    s += p.ids[i] + "," + (i < p.classes.size() ? p.classes[i] : std::string());
    for (Eigen::Index c = 0; c < p.coordinates.cols(); ++c)
      s += "," + format_real(p.coordinates(static_cast<Eigen::Index>(i), c));
    s += "\n";
  }
  return s;
}

inline json transform_json(const RigidTransform& t) {
  json j;
  j["phi"] = t.phi;
  j["theta"] = t.theta;
  j["psi"] = t.psi;
  j["translation"] = {t.translation.x(), t.translation.y(), t.translation.z()};
  const Mat3 r = rotation_matrix(t);
  j["rotation_matrix"] = {{r(0, 0), r(0, 1), r(0, 2)}, {r(1, 0), r(1, 1), r(1, 2)}, {r(2, 0), r(2, 1), r(2, 2)}};
  return j;
}

inline RigidTransform transform_from_json(const json& j) {
  RigidTransform t;
  t.phi = j.at("phi").get<double>();
  t.theta = j.at("theta").get<double>();
  t.psi = j.at("psi").get<double>();
  const auto tr = j.at("translation").get<std::vector<double>>();
  if (tr.size() != 3) throw InputError("translation must have 3 components");
  t.translation = Vec3(tr[0], tr[1], tr[2]);
  return t;
}

}  // namespace supck
