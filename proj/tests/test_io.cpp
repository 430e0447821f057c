#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "supck/io.hpp"
#include "test_util.hpp"

using namespace supck;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("supck_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Io, RealFormattingRoundTrips) {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<double>(i % 20 - 10));
    EXPECT_NEAR(parse_real_token(format_real(v)), v, 1e-11 * std::abs(v));
  }
  // three-decimal coordinates, as in structure files, survive unchanged
  for (double v : {11.104, -16.902, 100.125, 0.001, -999.999}) EXPECT_EQ(parse_real_token(format_real(v)), v);
  EXPECT_EQ(format_real(1.0 / 3.0), "0.333333333333");
  EXPECT_TRUE(std::isinf(parse_real_token(format_real(kNoLabels))));
  EXPECT_TRUE(std::isnan(parse_real_token("nan")));
  EXPECT_THROW(parse_real_token("1.2.3"), InputError);
  EXPECT_TRUE(std::isinf(real_from_json(real_json(kNoLabels))));
}

TEST(Io, CloudRoundTrip) {
  std::mt19937_64 rng(82);
  const fs::path dir = scratch("cloud");
  for (int trial = 0; trial < 20; ++trial) {
    AtomCloud c = supck::testing::random_cloud(rng, 5 + trial, -30, 30, true, "cloud" + std::to_string(trial));
    std::vector<Atom> atoms = c.atoms();
    atoms[0].element = "N";
    atoms[0].meta = {"LYS", 42, "NZ", "B"};
    c = AtomCloud(atoms, c.id(), "ATP");
    const CloudSidecar sc{c.id(), c.ligand_class(), "x.pdb", 5.3};
    const fs::path csv = write_cloud(dir, c, sc);
    CloudSidecar back_sc;
    const AtomCloud back = load_cloud(csv, &back_sc);
    EXPECT_TRUE(back.positions().isApprox(c.positions(), 1e-11));
    EXPECT_TRUE(back.labels().isApprox(c.labels(), 1e-11));
    // writing the reloaded cloud gives the same bytes
    EXPECT_EQ(cloud_to_csv(back), cloud_to_csv(c));
    EXPECT_EQ(back.id(), c.id());
    EXPECT_EQ(back.ligand_class(), c.ligand_class());
    EXPECT_EQ(back.atoms()[0].meta.res_name, "LYS");
    EXPECT_EQ(back.atoms()[0].meta.res_seq, 42);
    EXPECT_EQ(back.atoms()[0].meta.atom_name, "NZ");
    EXPECT_EQ(back_sc.cutoff_radius, std::optional<double>(5.3));
    EXPECT_EQ(back_sc.source_file, "x.pdb");
  }
  const auto all = load_cloud_dir(dir);
  EXPECT_EQ(all.size(), 20u);
  EXPECT_TRUE(std::is_sorted(all.begin(), all.end(),
                             [](const AtomCloud& a, const AtomCloud& b) { return a.id() < b.id(); }));
  fs::remove_all(dir);
}

TEST(Io, CloudParseErrors) {
  EXPECT_THROW(cloud_from_csv("a,b,c\n1,2,3\n"), ParseError);
  try {
    cloud_from_csv(std::string(kCloudHeader) + "\n1,2,3,0,C,ALA,1,CA\n1,x,3,0,C,ALA,1,CA\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(cloud_from_csv(std::string(kCloudHeader) + "\n"), InputError);
}

TEST(Io, MatrixRoundTrip) {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> g(0.0, 100.0);
  const fs::path dir = scratch("matrix");
  SimilarityMatrix m;
  m.ids = {"a", "b", "c", "d"};
  m.classes = {"ATP", "ATP", "HEM", ""};
  m.orientation = Orientation::Dissimilarity;
  m.scores.resize(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) m.scores(i, j) = g(rng);
  MeasureConfig cfg;
  cfg.kind = MeasureKind::Vol;
  write_matrix(dir / "m.csv", m, measure_config_json(cfg));
  const SimilarityMatrix back = load_matrix(dir / "m.csv");
  EXPECT_EQ(back.ids, m.ids);
  EXPECT_EQ(back.classes, m.classes);
  EXPECT_EQ(back.orientation, m.orientation);
  EXPECT_TRUE(back.scores.isApprox(m.scores, 1e-11));
  EXPECT_EQ(matrix_to_csv(back), matrix_to_csv(m));
  const json meta = json::parse(detail::read_text(dir / "m.json"));
  EXPECT_EQ(meta["measure"], "vol");
  EXPECT_TRUE(std::isinf(real_from_json(meta["params"]["align"]["lambda"])));
  // evaluation from the saved matrix is reproducible
  const AucSummary a = auc_all(back), b = auc_all(load_matrix(dir / "m.csv"));
  EXPECT_EQ(a.per_query, b.per_query);
  fs::remove(dir / "m.json");
  EXPECT_THROW(load_matrix(dir / "m.csv"), InputError);
  fs::remove_all(dir);
}

TEST(Io, MatrixParseErrors) {
  EXPECT_THROW(matrix_from_csv("x,a\na,1\n"), ParseError);
  EXPECT_THROW(matrix_from_csv("id,a,b\na,1,2\n"), InputError);
  EXPECT_THROW(matrix_from_csv("id,a,b\nb,1,2\na,3,4\n"), ParseError);
}

TEST(Io, TransformJsonRoundTrip) {
  std::mt19937_64 rng(84);
  for (int i = 0; i < 20; ++i) {
    const RigidTransform t = supck::testing::random_transform(rng, 10.0);
    const json j = json::parse(transform_json(t).dump());
    const RigidTransform back = transform_from_json(j);
    EXPECT_EQ(back.phi, t.phi);
    EXPECT_EQ(back.theta, t.theta);
    EXPECT_EQ(back.psi, t.psi);
    EXPECT_EQ(back.translation, t.translation);
    const Mat3 r = rotation_matrix(t);
    EXPECT_EQ(j["rotation_matrix"][1][2].get<double>(), r(1, 2));
  }
}

TEST(Io, ProjectionCsvHeader) {
  Projection p;
  p.ids = {"a", "b"};
  p.classes = {"X", "Y"};
  p.coordinates = Eigen::MatrixXd::Ones(2, 3);
  const std::string csv = projection_to_csv(p);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,class,pc1,pc2,pc3");
}
