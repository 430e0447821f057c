// Command-line front end: extract, compare, matrix, auc, classify, kpca, sweep.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "supck/supck.hpp"

namespace fs = std::filesystem;
using namespace supck;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitCompute = 2;

// Raised for compute-stage failures that should map to exit code 2.
struct ComputeError : Error {
  using Error::Error;
};

class Stopwatch {
 public:
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    timings_[stage] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : timings_) j[k] = v;
    return j;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::map<std::string, double> timings_;
};

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json config = json::object();
  std::vector<std::string> warnings;
  Stopwatch clock;

  void write(const fs::path& path) {
    json j;
    j["tool"] = "supck";
    j["version"] = kVersion;
    j["command"] = command;
    j["argv"] = argv;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["config"] = config;
    j["seed"] = config.contains("align") ? config["align"]["seed"] : json(0);
    j["timings_seconds"] = clock.to_json();
    j["warnings"] = warnings;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    detail::write_text(path, j.dump(2) + "\n");
  }
};

fs::path manifest_path_for(const fs::path& output) {
  fs::path p = output;
  p.replace_extension(".manifest.json");
  return p;
}

std::vector<double> parse_real_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      out.push_back(parse_real_token(tok));
    } catch (const InputError&) {
      throw ParameterError(std::string("bad value '") + tok + "' in " + what);
    }
  }
  if (out.empty()) throw ParameterError(std::string(what) + " is empty");
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (double v : parse_real_list(s, what)) {
    if (v != std::floor(v)) throw ParameterError(std::string(what) + " must hold integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

// Options shared by every command that scores cloud pairs.
struct MeasureOptions {
  std::string measure = "sup-ck";
  double sigma = 1.0;
  std::string lambda = "inf";
  double alpha = 0.0;
  double tolerance = 1.0;
  std::uint64_t seed = 0;
  int starts = 2;

  void add(CLI::App* app) {
    app->add_option("--measure", measure,
                    "sup-ck | sup-ck-l | vol | princ-axis | sup-pi | sup-ck-vol | sup-ck-l-vol")
        ->capture_default_str();
    app->add_option("--sigma", sigma, "Gaussian width in Angstrom")->capture_default_str();
    app->add_option("--lambda", lambda, "label width; inf ignores labels")->capture_default_str();
    app->add_option("--alpha", alpha, "volume coefficient for the combined measures")->capture_default_str();
    app->add_option("--tolerance", tolerance, "overlap tolerance for sup-pi, Angstrom")->capture_default_str();
    app->add_option("--seed", seed, "seed of the random alignment starts")->capture_default_str();
    app->add_option("--random-starts", starts, "random starts added to the principal-axis starts")
        ->capture_default_str();
  }

  MeasureConfig resolve() const {
    MeasureConfig c;
    c.kind = parse_measure_kind(measure);
    c.align.sigma = sigma;
    c.align.lambda = parse_real_token(lambda);
    c.align.seed = seed;
    c.align.extra_random_starts = starts;
    c.alpha = alpha;
    c.overlap_tolerance = tolerance;
    if (std::isfinite(c.align.lambda) && !uses_labels(c.kind))
      throw ParameterError("--lambda applies only to sup-ck-l and sup-ck-l-vol");
    c.validate();
    return c;
  }
};

bool any_labels(const std::vector<AtomCloud>& clouds) {
  return std::any_of(clouds.begin(), clouds.end(), [](const AtomCloud& c) { return c.has_nonzero_labels(); });
}

void check_labels(const MeasureConfig& cfg, const std::vector<AtomCloud>& clouds) {
  if (uses_labels(cfg.kind) && std::isfinite(cfg.align.lambda) && !any_labels(clouds))
    throw InputError("finite --lambda needs labeled clouds, but every charge is zero");
}

void symmetrize(SimilarityMatrix& m) {
  if (m.orientation == Orientation::Similarity)
    m.scores = m.scores.cwiseMax(m.scores.transpose()).eval();
  else
    m.scores = m.scores.cwiseMin(m.scores.transpose()).eval();
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  std::vector<std::string> files;
  std::string ligand;
  double radius = 5.3;
  std::string charges;
  std::string missing = "zero";
  bool include_het = false;
  bool ligand_cloud = false;
  std::string out_dir = "clouds";
};

int run_extract(const ExtractArgs& a, Manifest& man) {
  ExtractionConfig cfg;
  cfg.cutoff_radius = a.radius;
  cfg.ligand_code = a.ligand;
  cfg.missing_charge_policy = parse_missing_charge_policy(a.missing);
  cfg.include_other_het = a.include_het;
  std::string charges = a.charges;
  if (charges.empty())
    if (const char* env = std::getenv("SUPCK_CHARGES")) charges = env;
  if (!charges.empty()) {
    cfg.charges = load_charge_table(charges);
    man.inputs.push_back(charges);
  } else if (!a.ligand_cloud) {
    man.warnings.push_back("no charge table; every label is set by the missing-charge policy");
  }
  if (!(cfg.cutoff_radius > 0.0)) throw ParameterError("--radius must be positive");

  man.config = {{"ligand", a.ligand},
                {"radius", a.radius},
                {"charges", charges},
                {"missing_charge", a.missing},
                {"include_other_het", a.include_het},
                {"ligand_cloud", a.ligand_cloud},
                {"out_dir", a.out_dir}};
  int ok = 0;
  for (const auto& file : a.files) {
    man.inputs.push_back(file);
    try {
      const Structure s = load_structure(file);
      const std::string id = fs::path(file).stem().string();
      const AtomCloud cloud = a.ligand_cloud ? extract_ligand(s, a.ligand, id) : extract_pocket(s, cfg, id);
      CloudSidecar sc{id, cloud.ligand_class(), file, a.ligand_cloud ? std::nullopt : std::optional(a.radius)};
      const fs::path out = write_cloud(a.out_dir, cloud, sc);
      man.outputs.push_back(out.string());
      std::cout << file << ": " << s.protein_atoms.size() << " protein atoms, "
                << (a.ligand_cloud ? "ligand " : "pocket ") << cloud.size() << " atoms -> " << out.string() << "\n";
      ++ok;
    } catch (const Error& e) {
      std::cerr << "supck extract: " << file << ": " << e.what() << "\n";
      man.warnings.push_back(file + ": " + e.what());
    }
  }
  man.clock.lap("extract");
  man.write(fs::path(a.out_dir) / "manifest.json");
  return ok == 0 ? kExitInput : 0;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::string a, b;
  MeasureOptions m;
  bool symmetrize = false;
  bool no_align = false;
  std::string transform;
  std::string dump;
  std::string out;
};

json outcome_json(const MeasureOutcome& o) {
  json j;
  j["score"] = real_json(o.score);
  j["transform"] = o.transform ? transform_json(*o.transform) : json(nullptr);
  return j;
}

// Scores at a fixed superposition instead of optimizing one.
MeasureOutcome fixed_outcome(const AtomCloud& p1, const AtomCloud& p2, const MeasureConfig& cfg,
                             const RigidTransform& t) {
  switch (cfg.kind) {
    case MeasureKind::Vol:
    case MeasureKind::PrincAxis: return evaluate_measure(p1, p2, cfg);
    case MeasureKind::SupPi: {
      const std::size_t l = overlap_count(p1, p2, t, cfg.overlap_tolerance);
      return {poisson_index(l, p1.size(), p2.size()), t};
    }
    default: {
      const AlignConfig a = cfg.effective_align();
      double s = kernel_ck(p1, p2, t, a.sigma, a.lambda);
      if (uses_volume(cfg.kind)) s -= cfg.alpha * vol_score(p1, p2);
      return {s, t};
    }
  }
}

int run_compare(const CompareArgs& a, Manifest& man) {
  const MeasureConfig cfg = a.m.resolve();
  man.inputs = {a.a, a.b};
  man.config = measure_config_json(cfg);
  man.config["symmetrize"] = a.symmetrize;
  man.config["no_align"] = a.no_align;
  const AtomCloud p1 = load_cloud(a.a);
  const AtomCloud p2 = load_cloud(a.b);
  check_labels(cfg, {p1, p2});
  if (!a.transform.empty() && !a.no_align) throw ParameterError("--transform requires --no-align");
  man.clock.lap("load");

  RigidTransform fixed;
  if (!a.transform.empty()) {
    man.inputs.push_back(a.transform);
    fixed = transform_from_json(json::parse(detail::read_text(a.transform)));
  }
  const MeasureOutcome forward = a.no_align ? fixed_outcome(p1, p2, cfg, fixed) : evaluate_measure(p1, p2, cfg);
  json result;
  result["a"] = p1.id();
  result["b"] = p2.id();
  result["measure"] = std::string(to_string(cfg.kind));
  result["orientation"] = std::string(to_string(cfg.orientation()));
  result["forward"] = outcome_json(forward);
  double score = forward.score;
  if (a.symmetrize) {
    const MeasureOutcome reverse = a.no_align ? fixed_outcome(p2, p1, cfg, fixed) : evaluate_measure(p2, p1, cfg);
    result["reverse"] = outcome_json(reverse);
    score = cfg.orientation() == Orientation::Similarity ? std::max(score, reverse.score)
                                                         : std::min(score, reverse.score);
  }
  result["score"] = real_json(score);
  man.clock.lap("compare");
  std::cout << format_real(score) << "\n";

  std::optional<fs::path> primary;
  if (!a.dump.empty()) {
    if (!forward.transform) throw ParameterError("--dump-transform needs an alignment-based measure");
    const fs::path json_path = a.dump + ".json";
    if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());
    detail::write_text(json_path, transform_json(*forward.transform).dump(2) + "\n");
    AtomCloud moved = apply_transform(*forward.transform, p2);
    moved.set_id(p2.id() + "_aligned");
    const fs::path csv_path = a.dump + ".csv";
    detail::write_text(csv_path, cloud_to_csv(moved));
    man.outputs.push_back(json_path.string());
    man.outputs.push_back(csv_path.string());
    primary = json_path;
  }
  if (!a.out.empty()) {
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    detail::write_text(out, result.dump(2) + "\n");
    man.outputs.push_back(out.string());
    primary = out;
  }
  if (primary) man.write(manifest_path_for(*primary));
  return 0;
}

// ---------------------------------------------------------------- matrix

struct MatrixArgs {
  std::string dir;
  MeasureOptions m;
  bool symmetrize = false;
  std::string out = "matrix.csv";
  int jobs = default_jobs();
};

int run_matrix(const MatrixArgs& a, Manifest& man) {
  const MeasureConfig cfg = a.m.resolve();
  const auto clouds = load_cloud_dir(a.dir);
  man.inputs = {a.dir};
  man.config = measure_config_json(cfg);
  man.config["symmetrize"] = a.symmetrize;
  man.config["jobs"] = a.jobs;
  check_labels(cfg, clouds);
  if (std::any_of(clouds.begin(), clouds.end(), [](const AtomCloud& c) { return !c.ligand_class(); }))
    man.warnings.push_back("some clouds have no ligand class; auc and classify will reject this matrix");
  man.clock.lap("load");
  SimilarityMatrix m = similarity_matrix(clouds, cfg, a.jobs);
  if (a.symmetrize) symmetrize(m);
  man.clock.lap("matrix");
  json params = measure_config_json(cfg);
  params["symmetrized"] = a.symmetrize;
  write_matrix(a.out, m, params);
  auto side = fs::path(a.out);
  side.replace_extension(".json");
  man.outputs = {a.out, side.string()};
  std::cout << m.size() << "x" << m.size() << " matrix -> " << a.out << "\n";
  man.write(manifest_path_for(a.out));
  return 0;
}

// ---------------------------------------------------------------- auc

struct AucArgs {
  std::string matrix;
  std::string out = "auc.json";
};

int run_auc(const AucArgs& a, Manifest& man) {
  const SimilarityMatrix m = load_matrix(a.matrix);
  man.inputs = {a.matrix};
  if (m.classes.size() != m.size() ||
      std::any_of(m.classes.begin(), m.classes.end(), [](const std::string& c) { return c.empty(); }))
    throw InputError("every matrix item needs a ligand class");
  man.clock.lap("load");
  const AucSummary s = auc_all(m);
  man.clock.lap("auc");
  if (s.defined < m.size()) {
    const std::string w = std::to_string(m.size() - s.defined) + " queries have no positives or no negatives";
    man.warnings.push_back(w);
    std::cerr << "supck auc: " << w << "\n";
  }
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  detail::write_text(out, auc_summary_json(m, s).dump(2) + "\n");
  man.outputs = {a.out};
  std::cout << "mean AUC " << format_real(s.mean) << " +- " << format_real(s.stddev) << " over " << s.defined
            << " queries\n";
  man.write(manifest_path_for(out));
  return 0;
}

// ---------------------------------------------------------------- classify / sweep

struct GridOptions {
  std::string k = "1,3,5,7";
  std::string sigmas = "0.5,1,2,4";
  std::string lambdas = "0.25,1,4,inf";
  std::string alphas = "0,0.01,0.1,1,10";

  void add(CLI::App* app) {
    app->add_option("--k", k, "comma-separated k values")->capture_default_str();
    app->add_option("--sigma-grid", sigmas, "comma-separated sigma values")->capture_default_str();
    app->add_option("--lambda-grid", lambdas, "comma-separated lambda values (labeled measures)")
        ->capture_default_str();
    app->add_option("--alpha-grid", alphas, "multipliers of median(sup-CK)/median(Vol) (combined measures)")
        ->capture_default_str();
  }

  HyperGrid resolve(const std::vector<double>& radii) const {
    HyperGrid g;
    g.k_values = parse_int_list(k, "--k");
    g.sigma_values = parse_real_list(sigmas, "--sigma-grid");
    g.lambda_values = parse_real_list(lambdas, "--lambda-grid");
    g.alpha_values = parse_real_list(alphas, "--alpha-grid");
    g.radius_values = radii;
    g.validate();
    return g;
  }
};

json grid_json(const HyperGrid& g, MeasureKind kind) {
  json j;
  j["k"] = g.k_values;
  json s = json::array(), l = json::array(), r = json::array(), al = json::array();
  for (double v : g.sigma_values) s.push_back(real_json(v));
  for (double v : g.lambda_values) l.push_back(real_json(v));
  for (double v : g.radius_values) r.push_back(real_json(v));
  for (double v : g.alpha_values) al.push_back(real_json(v));
  j["sigma"] = uses_alignment(kind) ? s : json(nullptr);
  j["lambda"] = uses_labels(kind) ? l : json(nullptr);
  j["radius"] = r;
  j["alpha_multiplier"] = uses_volume(kind) ? al : json(nullptr);
  return j;
}

// One directory per extraction radius; every directory holds the same ids.
std::map<double, std::vector<AtomCloud>> load_by_radius(const std::vector<std::string>& dirs) {
  std::map<double, std::vector<AtomCloud>> out;
  std::vector<std::string> ref_ids;
  for (const auto& dir : dirs) {
    std::vector<AtomCloud> clouds;
    std::set<double> radii;
    for (const auto& c : load_cloud_dir(dir)) clouds.push_back(c);
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".csv") continue;
      CloudSidecar sc;
      load_cloud(e.path(), &sc);
      radii.insert(sc.cutoff_radius.value_or(std::nan("")));
    }
    if (radii.size() != 1) throw InputError("'" + dir + "' mixes clouds from different extraction radii");
    double r = *radii.begin();
    if (std::isnan(r)) {
      if (dirs.size() > 1) throw InputError("'" + dir + "' has no cutoff_radius in its sidecars");
      r = 0.0;
    }
    std::vector<std::string> ids;
    for (const auto& c : clouds) ids.push_back(c.id());
    if (ref_ids.empty()) ref_ids = ids;
    else if (ids != ref_ids) throw InputError("'" + dir + "' does not hold the same cloud ids as '" + dirs[0] + "'");
    if (out.count(r)) throw InputError("two directories share extraction radius " + format_real(r));
    require_classes(clouds);
    out.emplace(r, std::move(clouds));
  }
  return out;
}

std::vector<double> radii_of(const std::map<double, std::vector<AtomCloud>>& by_radius) {
  std::vector<double> r;
  for (const auto& [k, v] : by_radius) r.push_back(k > 0.0 ? k : 5.3);
  return r;
}

struct ClassifyArgs {
  std::vector<std::string> dirs;
  MeasureOptions m;
  GridOptions grid;
  std::string out = "classify.json";
  int jobs = default_jobs();
};

int run_classify(const ClassifyArgs& a, Manifest& man) {
  const MeasureConfig base = a.m.resolve();
  const auto by_radius = load_by_radius(a.dirs);
  const HyperGrid grid = a.grid.resolve(radii_of(by_radius));
  man.inputs = a.dirs;
  man.config = measure_config_json(base);
  man.config["grid"] = grid_json(grid, base.kind);
  man.config["jobs"] = a.jobs;
  for (const auto& [r, clouds] : by_radius) check_labels(base, clouds);
  man.clock.lap("load");

  MatrixCache cache;
  const auto candidates = build_candidates(by_radius, base.kind, grid, base, a.jobs, &cache);
  man.clock.lap("matrices");
  const EvalReport report = loo_double_cv(candidates, grid.k_values);
  man.clock.lap("double_cv");
  for (const auto& w : report.warnings) man.warnings.push_back(w);

  json j = report_json(report);
  j["measure"] = std::string(to_string(base.kind));
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  detail::write_text(out, j.dump(2) + "\n");
  man.outputs = {a.out};
  std::cout << "classification error " << format_real(report.classification_error) << ", mean AUC "
            << format_real(report.mean_auc) << " (" << report.ids.size() << " items, " << candidates.size()
            << " grid matrices)\n";
  man.write(manifest_path_for(out));
  return 0;
}

struct SweepArgs {
  std::string dir;
  MeasureOptions m;
  GridOptions grid;
  std::string out = "sweep.csv";
  int jobs = default_jobs();
};

int run_sweep(const SweepArgs& a, Manifest& man) {
  const MeasureConfig base = a.m.resolve();
  if (!uses_alignment(base.kind)) throw ParameterError("sweep needs a measure with a sigma parameter");
  const auto by_radius = load_by_radius({a.dir});
  const auto& clouds = by_radius.begin()->second;
  const HyperGrid grid = a.grid.resolve(radii_of(by_radius));
  man.inputs = {a.dir};
  man.config = measure_config_json(base);
  man.config["grid"] = grid_json(grid, base.kind);
  man.config["jobs"] = a.jobs;
  check_labels(base, clouds);
  man.clock.lap("load");

  const std::vector<double> lambdas = uses_labels(base.kind) ? grid.lambda_values : std::vector<double>{kNoLabels};
  std::string csv = "sigma,lambda,mean_auc,auc_std,classification_error\n";
  for (double lambda : lambdas) {
    for (double sigma : grid.sigma_values) {
      MeasureConfig cfg = base;
      cfg.align.sigma = sigma;
      cfg.align.lambda = lambda;
      cfg.validate();
      const SimilarityMatrix m = similarity_matrix(clouds, cfg, a.jobs);
      const AucSummary auc = auc_all(m);
      ParamRecord p;
      p.sigma = sigma;
      if (uses_labels(base.kind)) p.lambda = lambda;
      const EvalReport r = loo_double_cv({CandidateMatrix{p, m}}, grid.k_values);
      csv += format_real(sigma) + "," + format_real(lambda) + "," + format_real(auc.mean) + "," +
             format_real(auc.stddev) + "," + format_real(r.classification_error) + "\n";
      std::cerr << "sigma " << format_real(sigma) << " lambda " << format_real(lambda) << ": AUC "
                << format_real(auc.mean) << ", CE " << format_real(r.classification_error) << "\n";
    }
  }
  man.clock.lap("sweep");
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  detail::write_text(out, csv);
  man.outputs = {a.out};
  man.write(manifest_path_for(out));
  return 0;
}

// ---------------------------------------------------------------- kpca

struct KpcaArgs {
  std::string matrix;
  int dims = 2;
  std::string out = "projection.csv";
};

int run_kpca(const KpcaArgs& a, Manifest& man) {
  const SimilarityMatrix m = load_matrix(a.matrix);
  man.inputs = {a.matrix};
  man.config = {{"dims", a.dims}, {"symmetrized", true}, {"centered", true}};
  man.clock.lap("load");
  const Projection p = kpca_project(m, a.dims);
  man.clock.lap("kpca");
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  detail::write_text(out, projection_to_csv(p));
  json meta;
  json ev = json::array();
  for (double v : p.eigenvalues) ev.push_back(v);
  meta["eigenvalues"] = ev;
  meta["discarded_negative_mass"] = p.discarded_negative_mass;
  meta["fewer_components"] = p.fewer_components;
  meta["symmetrized"] = p.symmetrized;
  meta["centered"] = p.centered;
  auto side = out;
  side.replace_extension(".json");
  detail::write_text(side, meta.dump(2) + "\n");
  man.outputs = {out.string(), side.string()};
  if (p.fewer_components) {
    man.warnings.push_back("fewer positive eigenvalues than requested dimensions");
    std::cerr << "supck kpca: only " << p.coordinates.cols() << " positive components\n";
  }
  std::cout << p.coordinates.cols() << " components, discarded negative mass "
            << format_real(p.discarded_negative_mass) << " -> " << out.string() << "\n";
  man.write(manifest_path_for(out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binding-pocket comparison by convolution-kernel superposition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Manifest man;
  for (int i = 0; i < argc; ++i) man.argv.emplace_back(argv[i]);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "cut binding pockets (or ligands) out of structure files");
  extract->add_option("files", ex.files, "structure files")->required()->check(CLI::ExistingFile);
  extract->add_option("--ligand", ex.ligand, "het code, CODE:CHAIN or CODE:CHAIN:RESSEQ")->required();
  extract->add_option("--radius", ex.radius, "cutoff radius R in Angstrom")->capture_default_str();
  extract->add_option("--charges", ex.charges, "charge table CSV (default: $SUPCK_CHARGES)");
  extract->add_option("--missing-charge", ex.missing, "zero | skip | error")->capture_default_str();
  extract->add_flag("--include-het", ex.include_het, "also take atoms of other non-water het groups");
  extract->add_flag("--ligand-cloud", ex.ligand_cloud, "write the ligand atoms instead of the pocket");
  extract->add_option("--out-dir", ex.out_dir, "output directory")->capture_default_str();

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "score one pair of clouds");
  compare->add_option("a", cmp.a, "first cloud CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("b", cmp.b, "second cloud CSV")->required()->check(CLI::ExistingFile);
  cmp.m.add(compare);
  compare->add_flag("--symmetrize", cmp.symmetrize, "score both directions and keep the better one");
  compare->add_flag("--no-align", cmp.no_align, "score at the identity (or --transform) without optimizing");
  compare->add_option("--transform", cmp.transform, "transform JSON used with --no-align")
      ->check(CLI::ExistingFile);
  compare->add_option("--dump-transform", cmp.dump, "write PREFIX.json (transform) and PREFIX.csv (moved B)");
  compare->add_option("--out", cmp.out, "result JSON");

  MatrixArgs mx;
  auto* matrix = app.add_subcommand("matrix", "all-pairs score matrix of a cloud directory");
  matrix->add_option("dir", mx.dir, "cloud directory")->required()->check(CLI::ExistingDirectory);
  mx.m.add(matrix);
  matrix->add_flag("--symmetrize", mx.symmetrize, "replace M by the better of M and its transpose");
  matrix->add_option("--out", mx.out, "matrix CSV")->capture_default_str();
  matrix->add_option("--jobs", mx.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  AucArgs au;
  auto* auc = app.add_subcommand("auc", "per-query ROC AUC of a saved matrix");
  auc->add_option("matrix", au.matrix, "matrix CSV with its JSON metadata")->required()->check(CLI::ExistingFile);
  auc->add_option("--out", au.out, "report JSON")->capture_default_str();

  ClassifyArgs cl;
  auto* classify = app.add_subcommand("classify", "leave-one-out double cross-validated k-NN ligand prediction");
  classify->add_option("dirs", cl.dirs, "cloud directories, one per extraction radius")
      ->required()
      ->check(CLI::ExistingDirectory);
  cl.m.add(classify);
  cl.grid.add(classify);
  classify->add_option("--out", cl.out, "report JSON")->capture_default_str();
  classify->add_option("--jobs", cl.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "mean AUC and classification error over sigma (and lambda)");
  sweep->add_option("dir", sw.dir, "cloud directory")->required()->check(CLI::ExistingDirectory);
  sw.m.add(sweep);
  sw.grid.add(sweep);
  sweep->add_option("--out", sw.out, "sweep CSV")->capture_default_str();
  sweep->add_option("--jobs", sw.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  KpcaArgs kp;
  auto* kpca = app.add_subcommand("kpca", "kernel PCA projection of a saved similarity matrix");
  kpca->add_option("matrix", kp.matrix, "matrix CSV with its JSON metadata")->required()->check(CLI::ExistingFile);
  kpca->add_option("--dims", kp.dims, "number of components")->capture_default_str()->check(CLI::PositiveNumber);
  kpca->add_option("--out", kp.out, "projection CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*extract) {
      man.command = "extract";
      return run_extract(ex, man);
    }
    if (*compare) {
      man.command = "compare";
      return run_compare(cmp, man);
    }
    if (*matrix) {
      man.command = "matrix";
      return run_matrix(mx, man);
    }
    if (*auc) {
      man.command = "auc";
      return run_auc(au, man);
    }
    if (*classify) {
      man.command = "classify";
      return run_classify(cl, man);
    }
    if (*sweep) {
      man.command = "sweep";
      return run_sweep(sw, man);
    }
    if (*kpca) {
      man.command = "kpca";
      return run_kpca(kp, man);
    }
  } catch (const InputError& e) {
    std::cerr << "supck " << man.command << ": input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParameterError& e) {
    std::cerr << "supck " << man.command << ": invalid parameter: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    std::cerr << "supck " << man.command << ": malformed JSON: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "supck " << man.command << ": computation failed: " << e.what() << "\n";
    return kExitCompute;
  }
  return kExitInput;
}
