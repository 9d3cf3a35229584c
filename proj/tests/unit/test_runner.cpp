#include <doctest.h>

#include "tfprop/record_io.hpp"
#include "tfprop/runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

using namespace tfprop;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("tfprop_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

const char* kFlowYaml = R"(kind: flow
hamiltonian: harmonic
t: [pi/4]
flow:
  points: [[1, 0], [0, 1]]
)";

int cli(const std::string& args) {
  const std::string cmd = std::string(TFPROP_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("config dump and parse round trip") {
  auto c = parse_config(kFlowYaml);
  c.seed = 17;
  c.deltas = {0.05, 0.3};
  c.regions = {"cone(dir=(1,2),angle=0.2)"};
  c.tolerances["symplectic"] = 1e-9;
  const auto text = dump_config(c);
  const auto back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(back.kind == "flow");
  CHECK(back.t.size() == 1);
  CHECK(back.t[0] == doctest::Approx(M_PI / 4).epsilon(1e-15));
  CHECK(back.seed == 17);
  CHECK(tolerance(back, "symplectic", 1.0) == 1e-9);
  CHECK(tolerance(back, "missing", 0.5) == 0.5);
}

TEST_CASE("invalid configs are usage errors") {
  SUBCASE("delta outside (0,1)") {
    const std::string y = "kind: singularity\nsingularity:\n  regions: [\"ray(dir=(1,0))\"]\n  deltas: [1.5]\n";
    try {
      validate(parse_config(y));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("1.5") != std::string::npos);
      CHECK(msg.find("0 < delta < 1") != std::string::npos);
    }
  }
  SUBCASE("unknown key") { CHECK_THROWS_AS(parse_config("kind: flow\nbogus: 1\n"), ConfigError); }
  SUBCASE("unknown kind") { CHECK_THROWS_AS(validate(parse_config("kind: nonsense\n")), ConfigError); }
  SUBCASE("dimension") { CHECK_THROWS_AS(validate(parse_config("kind: flow\nd: 3\n")), ConfigError); }
  SUBCASE("criterion number") {
    CHECK_THROWS_AS(validate(parse_config("kind: acceptance\nacceptance:\n  criteria: [14]\n")), ConfigError);
  }
}

TEST_CASE("record round trips are bit exact") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const auto grid = SpatialGrid::centered(1, 64, 0.125);
  VectorXcd v(grid.size());
  for (Index i = 0; i < v.size(); ++i) v(i) = Complex(nd(rng), nd(rng));
  const SampledSignal f(grid, v);
  const auto fb = decode_signal_record(encode_signal_record(f));
  CHECK(fb.grid == grid);
  CHECK((fb.values.array() == v.array()).all());

  StftArray F;
  F.lattice = PhaseLattice::box(1, -2, 2, 0.5, -1, 1, 0.25);
  F.values = StftValues(F.lattice.x_count(), F.lattice.eta_count());
  for (Index i = 0; i < F.values.size(); ++i) F.values.data()[i] = Complex(nd(rng), nd(rng));
  F.window_id = "gaussian";
  const auto Fb = decode_stft_record(encode_stft_record(F));
  CHECK(Fb.lattice == F.lattice);
  CHECK(Fb.window_id == F.window_id);
  CHECK((Fb.values.array() == F.values.array()).all());

  GaborMatrixSample k;
  k.t = 0.3;
  k.w_lattice = PhaseLattice::box(1, -1, 1, 1, -1, 1, 1);
  k.z_lattice = F.lattice;
  k.values = StftValues(k.w_lattice.size(), k.z_lattice.size());
  for (Index i = 0; i < k.values.size(); ++i) k.values.data()[i] = Complex(nd(rng), nd(rng));
  k.window_id = "gaussian";
  k.descriptor = "harmonic";
  const auto kb = decode_matrix_record(encode_matrix_record(k));
  CHECK(kb.t == k.t);
  CHECK(kb.w_lattice == k.w_lattice);
  CHECK(kb.z_lattice == k.z_lattice);
  CHECK(kb.descriptor == k.descriptor);
  CHECK((kb.values.array() == k.values.array()).all());

  CHECK_THROWS_AS(decode_signal_record("TFPSIG01garbage"), Error);
}

TEST_CASE("flow run: harmonic quarter period and manifest determinism") {
  const auto c = parse_config(kFlowYaml);
  const auto d1 = scratch("flow1"), d2 = scratch("flow2");
  const auto r1 = run(c, d1);
  const auto r2 = run(c, d2);
  CHECK(r1.status == 0);
  CHECK(r1.manifest_hash == r2.manifest_hash);
  CHECK(r1.manifest_hash == sha256_hex(read_file(d1 / "manifest.json")));

  const auto rows = read_csv(read_file(d1 / "flow.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"t", "y", "eta", "x", "xi", "detJ", "sympl_defect"});
  // (1, 0) is carried to (0, 1/(2 pi)).
  CHECK(std::abs(std::stod(rows[1][3])) < 1e-10);
  CHECK(std::stod(rows[1][4]) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-10));
  CHECK(std::stod(rows[1][5]) == doctest::Approx(1.0).epsilon(1e-12));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("sha256 known vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("plot tables are long format") {
  std::vector<Artifact> in;
  in.push_back({"modnorm.csv",
                "t,signal_id,p,q,r,norm_in,norm_out,ratio\n"
                "0.5,a,2,2,0,1,1.5,1.5\n"
                "0.5,b,2,2,0,1,2.5,2.5\n"});
  const auto out = plot_tables(in);
  REQUIRE(out.size() == 1);
  CHECK(out[0].name == "plot_modnorm.csv");
  const auto rows = read_csv(out[0].bytes);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"source", "t", "p", "r", "ratio"});
  // One row per (t, p, r): the maximum over signals.
  CHECK(std::stod(rows[1][4]) == 2.5);
}

TEST_CASE("artifact set replaces by name and sorts the manifest") {
  ArtifactSet a, b;
  a.add("z.csv", "1");
  a.add("a.csv", "2");
  a.add("z.csv", "3");
  b.add("a.csv", "2");
  b.add("z.csv", "3");
  CHECK(a.files().size() == 2);
  CHECK(a.manifest_hash() == b.manifest_hash());
  CHECK(a.manifest().find("a.csv") < a.manifest().find("z.csv"));
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  write_file_atomic(dir / "flow.yaml", kFlowYaml);
  write_file_atomic(dir / "bad.yaml",
                    "kind: singularity\nsingularity:\n  regions: [\"ray(dir=(1,0))\"]\n  deltas: [1.5]\n");
  CHECK(cli("flow --config " + (dir / "flow.yaml").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(cli("singularity --config " + (dir / "bad.yaml").string() + " --out " + (dir / "bad").string()) == 2);
  CHECK(cli("flow --config " + (dir / "bad.yaml").string()) == 2);
  CHECK(cli("nosuchcommand") == 2);
  CHECK(cli("plot " + (dir / "out").string()) == 0);
  fs::remove_all(dir);
}
