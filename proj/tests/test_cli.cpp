#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "supck/supck.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace supck;

namespace {

struct CliRun {
  int code;
  std::string out;
};

CliRun run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "supck_cli_stdout.txt";
  const std::string cmd = std::string(SUPCK_CLI) + " " + args + " > " + log.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(status), ss.str()};
}

std::string pdb_line(const char* record, int serial, const char* name, const char* res, int seq, const Vec3& p,
                     const char* element) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-6s%5d %-4s %3s A%4d    %8.3f%8.3f%8.3f  1.00 20.00          %2s\n", record, serial,
                name, res, seq, p.x(), p.y(), p.z(), element);
  return buf;
}

// Protein atoms on a coarse grid plus a three-atom ligand in the middle.
std::string synthetic_pdb(std::mt19937_64& rng, bool with_ligand) {
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  std::string s;
  int serial = 1, seq = 1;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      for (int k = -2; k <= 2; ++k) {
        const Vec3 p(3.0 * i + u(rng), 3.0 * j + u(rng), 3.0 * k + u(rng));
        s += pdb_line("ATOM", serial++, "CA", "GLY", seq++, p, "C");
      }
  if (with_ligand) {
    s += pdb_line("HETATM", serial++, "C1", "LIG", 900, Vec3(0.2, 0.1, 0.0), "C");
    s += pdb_line("HETATM", serial++, "O1", "LIG", 900, Vec3(1.4, 0.1, 0.0), "O");
    s += pdb_line("HETATM", serial++, "N1", "LIG", 900, Vec3(-1.0, 0.3, 0.2), "N");
    s += pdb_line("HETATM", serial++, "O", "HOH", 901, Vec3(1.0, 1.0, 1.0), "O");
  }
  return s + "END\n";
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("supck_cli_" + std::string(
                                             ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  // 3 classes x 4 members of 8 atoms, with sidecars.
  fs::path planted_dir() {
    std::mt19937_64 rng(5);
    const fs::path dir = root_ / "clouds";
    for (const auto& c : supck::testing::planted_classes(rng, 3, 4, 8, 0.1))
      write_cloud(dir, c, CloudSidecar{c.id(), c.ligand_class(), "synthetic", 5.3});
    return dir;
  }

  std::string p(const std::string& rel) const { return (root_ / rel).string(); }

  fs::path root_;
};

json read_json(const fs::path& path) { return json::parse(detail::read_text(path)); }

}  // namespace

TEST_F(Cli, ExtractWritesCloudsAndManifest) {
  std::mt19937_64 rng(1);
  detail::write_text(root_ / "a.pdb", synthetic_pdb(rng, true));
  detail::write_text(root_ / "b.pdb", synthetic_pdb(rng, true));
  detail::write_text(root_ / "apo.pdb", synthetic_pdb(rng, false));
  const CliRun r = run("extract " + p("a.pdb") + " " + p("b.pdb") + " " + p("apo.pdb") +
                    " --ligand LIG --radius 4 --out-dir " + p("out"));
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(root_ / "out/a.csv"));
  EXPECT_TRUE(fs::exists(root_ / "out/b.csv"));
  EXPECT_FALSE(fs::exists(root_ / "out/apo.csv"));
  CloudSidecar sc;
  const AtomCloud pocket = load_cloud(root_ / "out/a.csv", &sc);
  EXPECT_GT(pocket.size(), 0u);
  ASSERT_TRUE(sc.cutoff_radius);
  EXPECT_EQ(*sc.cutoff_radius, 4.0);
  const json m = read_json(root_ / "out/manifest.json");
  EXPECT_EQ(m["command"], "extract");
  EXPECT_EQ(m["config"]["radius"], 4.0);
  EXPECT_EQ(m["warnings"].size(), 2u);  // apo file + no charge table

  // every file failing is an input error
  EXPECT_EQ(run("extract " + p("apo.pdb") + " --ligand LIG --out-dir " + p("out2")).code, 1);
}

TEST_F(Cli, CompareDumpsTransformAndRejectsBadParameters) {
  const fs::path dir = planted_dir();
  const std::string a = (dir / "c0_0.csv").string(), b = (dir / "c0_1.csv").string();
  CliRun r = run("compare " + a + " " + b + " --dump-transform " + p("t/ab") + " --out " + p("t/ab_result.json"));
  ASSERT_EQ(r.code, 0);
  const double score = parse_real_token(detail::trim(r.out));
  EXPECT_GT(score, 0.0);
  EXPECT_TRUE(fs::exists(root_ / "t/ab.json"));
  EXPECT_TRUE(fs::exists(root_ / "t/ab_result.manifest.json"));
  const RigidTransform t = transform_from_json(read_json(root_ / "t/ab.json"));
  const AtomCloud moved = load_cloud(root_ / "t/ab.csv");
  // the dumped cloud scores at identity what B scores under the transform
  const double at_identity = kernel_ck(load_cloud(a), moved, {}, 1.0);
  EXPECT_NEAR(at_identity, score, 1e-6 * score);
  EXPECT_NEAR(kernel_ck(load_cloud(a), load_cloud(b), t, 1.0), score, 1e-9 * score);

  // --no-align with the dumped transform reproduces the score
  r = run("compare " + a + " " + b + " --no-align --transform " + p("t/ab.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(parse_real_token(detail::trim(r.out)), score, 1e-9 * score);

  EXPECT_EQ(run("compare " + a + " " + b + " --lambda 1").code, 1);
  EXPECT_EQ(run("compare " + a + " " + b + " --measure sup-ck-l --lambda 1").code, 1);  // unlabeled clouds
  EXPECT_EQ(run("compare " + a + " " + b + " --measure nope").code, 1);
  EXPECT_EQ(run("compare " + a + " " + b + " --sigma -1").code, 1);
  EXPECT_EQ(run("compare " + a + " " + p("missing.csv")).code, 1);
}

TEST_F(Cli, MatrixAucKpcaPipeline) {
  const fs::path dir = planted_dir();
  ASSERT_EQ(run("matrix " + dir.string() + " --symmetrize --jobs 1 --out " + p("m/M.csv")).code, 0);
  const SimilarityMatrix m = load_matrix(root_ / "m/M.csv");
  ASSERT_EQ(m.size(), 12u);
  EXPECT_TRUE(m.scores.isApprox(m.scores.transpose()));
  const json man = read_json(root_ / "m/M.manifest.json");
  EXPECT_EQ(man["command"], "matrix");
  EXPECT_EQ(man["version"], kVersion);
  EXPECT_TRUE(man["timings_seconds"].contains("matrix"));
  EXPECT_EQ(man["config"]["symmetrize"], true);

  ASSERT_EQ(run("auc " + p("m/M.csv") + " --out " + p("m/auc.json")).code, 0);
  EXPECT_EQ(read_json(root_ / "m/auc.json")["mean_auc"], 1.0);

  ASSERT_EQ(run("kpca " + p("m/M.csv") + " --dims 2 --out " + p("m/proj.csv")).code, 0);
  const json meta = read_json(root_ / "m/proj.json");
  EXPECT_EQ(meta["eigenvalues"].size(), 2u);
  EXPECT_TRUE(fs::exists(root_ / "m/proj.manifest.json"));
}

TEST_F(Cli, ClassifyAndSweep) {
  const fs::path dir = planted_dir();
  ASSERT_EQ(run("classify " + dir.string() + " --k 1,3 --sigma-grid 1,2 --out " + p("c/report.json")).code, 0);
  const json rep = read_json(root_ / "c/report.json");
  EXPECT_EQ(rep["classification_error"], 0.0);
  EXPECT_TRUE(fs::exists(root_ / "c/report.manifest.json"));

  ASSERT_EQ(run("sweep " + dir.string() + " --k 1 --sigma-grid 0.5,1,2 --out " + p("c/sweep.csv")).code, 0);
  const std::string csv = detail::read_text(root_ / "c/sweep.csv");
  EXPECT_EQ(csv.rfind("sigma,lambda,mean_auc,auc_std,classification_error\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST_F(Cli, MissingClassesFailFast) {
  std::mt19937_64 rng(9);
  const fs::path dir = root_ / "bare";
  fs::create_directories(dir);
  for (int i = 0; i < 4; ++i)
    detail::write_text(dir / ("x" + std::to_string(i) + ".csv"), cloud_to_csv(supck::testing::random_cloud(rng, 30, 0, 10)));
  EXPECT_EQ(run("classify " + dir.string()).code, 1);
  EXPECT_EQ(run("sweep " + dir.string()).code, 1);
  // matrix has no class requirement; auc on its output does
  ASSERT_EQ(run("matrix " + dir.string() + " --measure vol --out " + p("bare_m.csv")).code, 0);
  EXPECT_EQ(run("auc " + p("bare_m.csv")).code, 1);
}

TEST_F(Cli, ExampleChargeTableLabelsBackbone) {
  std::mt19937_64 rng(3);
  detail::write_text(root_ / "a.pdb", synthetic_pdb(rng, true));
  const std::string table = std::string(SUPCK_TEST_DATA_DIR) + "/../../data/charges_example.csv";
  ASSERT_EQ(run("extract " + p("a.pdb") + " --ligand LIG --charges " + table + " --ligand-cloud --out-dir " + p("lig"))
                .code,
            0);
  // GLY CA is listed at 0 through the wildcard; C/O would be +-0.38
  ASSERT_EQ(run("extract " + p("a.pdb") + " --ligand LIG --charges " + table + " --missing-charge error --out-dir " +
                p("out"))
                .code,
            0);
  for (const Atom& a : load_cloud(root_ / "out/a.csv").atoms()) EXPECT_EQ(a.label, 0.0);
  EXPECT_EQ(run("extract " + p("a.pdb") + " --ligand LIG --missing-charge maybe --out-dir " + p("x")).code, 1);
}
