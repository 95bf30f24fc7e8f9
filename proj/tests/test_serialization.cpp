#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "stacked/serialization.hpp"

using namespace stacked;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "stacked_serialization_test";
  fs::create_directories(dir);
  return dir;
}

SurfaceMesh square_pair() {
  SurfaceMesh m;
  m.vertices = {{0, 0, 0}, {0.5, 0, 0}, {0.5, 0.5, 0.1}, {0, 0.5, 0.1}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  m.tags = {{VertexTag::Layer, 0, 0, 0}, {VertexTag::Layer, 0, 0, 1}, {VertexTag::Neck, 0, 1, 0},
            {VertexTag::Neck, 0, -1, 1}};
  m.frames = {{0, cplx(0.1, 0.2), Eigen::Vector3d(0.0, 0.0, 0.0)}};
  m.t = 0.01;
  m.period_beta = cplx(0.25, 1.1);
  return m;
}

}  // namespace

TEST(Json, ComplexRoundTrip) {
  const cplx z(0.1, -1.0 / 3.0);
  EXPECT_EQ(complex_from_json(parse_json(to_json(z).dump())), z);
  EXPECT_THROW(complex_from_json(Json::array({1.0})), SchemaError);
  EXPECT_THROW(complex_from_json(Json("x")), SchemaError);
}

TEST(Json, DoublesRoundTripExactly) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    double x = 0.0;
    do {
      const std::uint64_t bits = rng();
      std::memcpy(&x, &bits, sizeof x);
    } while (!std::isfinite(x));
    EXPECT_EQ(parse_json(Json(x).dump()).get<double>(), x);
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_LE(format_double(1.0 / 3.0).size(), 19u);
}

TEST(Json, CatalogConfigurationsRoundTrip) {
  CatalogParams p;
  p.K = 3;
  for (const auto& name : catalog_names()) {
    const auto cfg = catalog(name, p);
    const auto back = configuration_from_json(parse_json(to_json(cfg).dump()));
    EXPECT_EQ(back.tau(), cfg.tau()) << name;
    EXPECT_EQ(back.K(), cfg.K());
    for (int k = -10; k <= 10; ++k) EXPECT_EQ(back.q(k), cfg.q(k)) << name << ' ' << k;
  }
}

TEST(Json, ConfigurationSchemaErrors) {
  EXPECT_THROW(configuration_from_json(parse_json(R"({"tau": [0, 1], "window": [[0.5, 0]]})")), SchemaError);
  EXPECT_THROW(configuration_from_json(parse_json(R"({"tau": 1, "window": [], "left_tail": [], "right_tail": []})")),
               SchemaError);
  EXPECT_THROW(parse_json("{\"tau\": [0, "), SchemaError);
}

TEST(Json, GluingStateRoundTrip) {
  CatalogParams p;
  p.K = 2;
  const auto st = GluingState::central(catalog("twin-rPD", p), 0.01);
  const std::string text = to_json(st).dump();
  const auto back = gluing_state_from_json(parse_json(text));
  EXPECT_EQ(back.t, st.t);
  EXPECT_EQ(back.epsilon, st.epsilon);
  EXPECT_EQ(back.rho, st.rho);
  EXPECT_EQ(back.K, st.K);
  EXPECT_EQ(back.tau0, st.tau0);
  EXPECT_EQ(back.hecke_q0, st.hecke_q0);
  EXPECT_EQ(back.period, st.period);
  for (int s = 0; s < st.slot_count(); ++s) EXPECT_TRUE(back.slot(s) == st.slot(s)) << s;
  EXPECT_EQ(to_json(back).dump(), text);
  // A solve document wraps the state.
  const Json doc{{"state", to_json(st)}, {"report", Json::object()}};
  EXPECT_EQ(gluing_state_from_json(doc).K, st.K);
}

TEST(Json, GluingStateSchemaErrors) {
  CatalogParams p;
  p.K = 2;
  Json j = to_json(GluingState::central(catalog("rPD", p), 0.0));
  Json missing = j;
  missing.erase("rho");
  EXPECT_THROW(gluing_state_from_json(missing), SchemaError);
  Json short_window = j;
  short_window["window"].erase(0);
  EXPECT_THROW(gluing_state_from_json(short_window), SchemaError);
  Json bad_record = j;
  bad_record["window"][0].erase("v");
  EXPECT_THROW(gluing_state_from_json(bad_record), SchemaError);
}

TEST(Json, DecayReportAndCsv) {
  DecayReport rep;
  rep.k = {0, 1};
  rep.d = {1.5, 0.25};
  rep.w = {2.0, 0.5};
  rep.fit_first = 1;
  rep.fit_last = 1;
  rep.w_rate = std::nan("");
  const Json j = to_json(rep);
  EXPECT_TRUE(j["w_rate"].is_null());
  EXPECT_EQ(j["d"][1].get<double>(), 0.25);
  EXPECT_EQ(decay_csv(rep), "k,d,w\n0,1.5,2\n1,0.25,0.5\n");
}

TEST(Obj, CopiesTranslateByLattice) {
  const auto mesh = square_pair();
  const std::string obj = mesh_obj(mesh, 2);
  std::istringstream in(obj);
  std::string line;
  std::vector<Eigen::Vector3d> vs;
  std::vector<std::array<int, 3>> fs;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Eigen::Vector3d v;
      ls >> v[0] >> v[1] >> v[2];
      vs.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f;
      ls >> f[0] >> f[1] >> f[2];
      fs.push_back(f);
    }
  }
  ASSERT_EQ(vs.size(), 16u);
  ASSERT_EQ(fs.size(), 8u);
  // Copy (i, j) = (1, 1) is the fourth block.
  const Eigen::Vector3d shift(1.0 + 0.25, 1.1, 0.0);
  for (int v = 0; v < 4; ++v) EXPECT_TRUE(vs[12 + v].isApprox(mesh.vertices[v] + shift));
  EXPECT_EQ(fs[6], (std::array<int, 3>{13, 14, 15}));
  for (const auto& f : fs) {
    for (int i : f) {
      EXPECT_GE(i, 1);
      EXPECT_LE(i, 16);
    }
  }
  EXPECT_THROW(mesh_obj(mesh, 0), InputError);
}

TEST(Obj, SidecarListsFramesAndTags) {
  const auto mesh = square_pair();
  const Json side = mesh_sidecar(mesh, 3, {}, EmbeddednessReport{});
  EXPECT_EQ(side["copies"], 3);
  EXPECT_EQ(side["frames"].size(), 1u);
  EXPECT_EQ(side["vertex_tags"].size(), 4u);
  EXPECT_EQ(side["vertex_tags"][2][0], "neck");
  EXPECT_EQ(side["vertex_tags"][3][2], -1);
  EXPECT_EQ(side["diagnostics"]["ok"], false);
}

TEST(Files, AtomicWriteReplacesContent) {
  const fs::path dir = scratch_dir();
  const fs::path file = dir / "out.json";
  write_text_atomic(file, "first");
  write_text_atomic(file, "second");
  EXPECT_EQ(read_text(file), "second");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) entries += e.path().filename() == "out.json" ? 0 : 1;
  EXPECT_EQ(entries, 0);
  EXPECT_THROW(write_text_atomic(dir / "missing" / "x.json", "x"), InputError);
  EXPECT_THROW(read_text(dir / "missing.json"), InputError);
  fs::remove_all(dir);
}
