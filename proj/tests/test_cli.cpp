#include "cli.hpp"

#include "locpoly/estimators.hpp"
#include "locpoly/sample.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace locpoly;

namespace {

struct Outcome
{
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "locpoly");
  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / ("locpoly_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p)
{
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path write_data(const fs::path& dir, const std::vector<double>& xs, double (*g)(double))
{
  const fs::path p = dir / "data.csv";
  std::ofstream f(p);
  f.precision(17);
  f << "x,y\n";
  for (double x : xs)
    f << x << ',' << g(x) << '\n';
  return p;
}

std::vector<double> jittered(std::size_t n)
{
  std::vector<double> xs;
  for (std::size_t i = 0; i < n; ++i)
    xs.push_back((static_cast<double>(i) + 0.5 + 0.3 * std::sin(7.0 * i)) / static_cast<double>(n));
  return xs;
}

} // namespace

TEST_CASE("moments prints the uniform Gram matrix")
{
  const Outcome o = run_cli({ "moments", "--kernel", "uniform", "--p", "1" });
  CHECK(o.code == cli::kExitOk);
  CHECK(o.out.find("gram: [[1,0],[0,0.08333333333333333]]") != std::string::npos);
  CHECK(o.out.find("min_eigenvalue: 0.08333333333333") != std::string::npos);

  const fs::path dir = scratch("moments");
  CHECK(run_cli({ "moments", "--kernel", "epanechnikov", "--p", "2", "--output-dir", dir.string() }).code == 0);
  const auto rows = csv_rows(dir / "moments.csv");
  REQUIRE(rows.size() == 6);
  CHECK(std::stod(rows[3][1]) == doctest::Approx(0.05));
}

TEST_CASE("fit reproduces a line and p = 0 matches Nadaraya-Watson")
{
  const fs::path dir = scratch("fit");
  const auto xs = jittered(300);
  const fs::path data = write_data(dir, xs, [](double x) { return 2.0 * x + 1.0; });
  const Outcome o = run_cli({ "fit", "--input", data.string(), "--h", "0.1", "--p", "1", "--xgrid", "0.2,0.8,7",
                              "--output-dir", dir.string() });
  CHECK(o.code == cli::kExitOk);
  auto rows = csv_rows(dir / "fit.csv");
  REQUIRE(rows.size() == 8);
  CHECK(rows[0] == std::vector<std::string>{ "x0", "h", "p", "beta0", "beta1", "cond_A", "n_in_window", "status" });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][4]) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(rows[i][7] == "ok");
  }

  const fs::path data2 = write_data(dir, xs, [](double x) { return std::sin(5.0 * x); });
  CHECK(run_cli({ "fit", "--input", data2.string(), "--h", "0.15", "--p", "0", "--kernel", "epanechnikov", "--xgrid",
                  "0.3,0.7,5", "--output-dir", dir.string() })
          .code == 0);
  rows = csv_rows(dir / "fit.csv");
  const PairedSample s = read_sample_csv(data2.string());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double x0 = std::stod(rows[i][0]);
    CHECK(std::stod(rows[i][3]) == doctest::Approx(nadaraya_watson(s, Kernel::epanechnikov(), 0.15, x0)).epsilon(1e-12));
  }
}

TEST_CASE("fit with no fittable point exits with the degenerate code")
{
  const fs::path dir = scratch("fit_gap");
  const fs::path data = write_data(dir, { 0.0, 0.01, 0.02, 0.98, 0.99, 1.0 }, [](double x) { return x; });
  const Outcome o = run_cli({ "fit", "--input", data.string(), "--h", "0.1", "--p", "1", "--xgrid", "0.3,0.7,3",
                              "--output-dir", dir.string() });
  CHECK(o.code == cli::kExitDegenerate);
  const auto rows = csv_rows(dir / "fit.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[1][3] == "nan");
  CHECK(rows[1][6] == "0");
}

TEST_CASE("bad input row is reported by number")
{
  const fs::path dir = scratch("badrow");
  const fs::path p = dir / "bad.csv";
  {
    std::ofstream f(p);
    f << "x,y\n";
    for (int i = 2; i <= 16; ++i)
      f << i / 20.0 << ",1\n";
    f << "0.9,oops\n";
  }
  const Outcome o = run_cli({ "fit", "--input", p.string(), "--h", "0.2" });
  CHECK(o.code == cli::kExitUsage);
  CHECK(o.err.find("17") != std::string::npos);
}

TEST_CASE("configuration handling")
{
  const fs::path dir = scratch("config");
  const fs::path cfg = dir / "cfg.json";
  {
    std::ofstream f(cfg);
    f << R"({"kernel":"triangular","p":2})";
  }
  Outcome o = run_cli({ "moments", "--config", cfg.string() });
  CHECK(o.code == 0);
  CHECK(o.out.find("kernel: triangular") != std::string::npos);
  CHECK(o.out.find("gram: [[1,0,") != std::string::npos);

  // Flags beat --set, which beats the file.
  o = run_cli({ "moments", "--config", cfg.string(), "--set", "kernel=uniform" });
  CHECK(o.out.find("kernel: uniform") != std::string::npos);
  o = run_cli({ "moments", "--config", cfg.string(), "--set", "kernel=uniform", "--kernel", "epanechnikov" });
  CHECK(o.out.find("kernel: epanechnikov") != std::string::npos);

  {
    std::ofstream f(cfg);
    f << R"({"kernal":"uniform"})";
  }
  CHECK(run_cli({ "moments", "--config", cfg.string() }).code == cli::kExitUsage);
  {
    std::ofstream f(cfg);
    f << "{not json";
  }
  CHECK(run_cli({ "moments", "--config", cfg.string() }).code == cli::kExitUsage);
  CHECK(run_cli({ "moments", "--set", "p=one" }).code == cli::kExitUsage);
  CHECK(run_cli({ "moments", "--kernel", "gaussian" }).code == cli::kExitUsage);
  CHECK(run_cli({ "frobnicate" }).code == cli::kExitUsage);
}

TEST_CASE("help lists config keys")
{
  const Outcome o = run_cli({ "study", "--help" });
  CHECK(o.code == 0);
  const std::string text = o.out + o.err;
  for (const char* key : { "[config: master_seed]", "[config: sample_sizes]", "[config: upper_scale]" })
    CHECK(text.find(key) != std::string::npos);
}

TEST_CASE("study reruns are byte-identical")
{
  const fs::path a = scratch("study_a");
  const fs::path b = scratch("study_b");
  const std::vector<std::string> common{ "study", "--scenario", "S1", "--replicates", "2", "--sample-sizes", "256,512",
                                         "--xgrid-points", "41", "--master-seed", "9" };
  auto args_a = common;
  args_a.insert(args_a.end(), { "--output-dir", a.string() });
  auto args_b = common;
  args_b.insert(args_b.end(), { "--output-dir", b.string() });
  REQUIRE(run_cli(args_a).code == 0);
  REQUIRE(run_cli(args_b).code == 0);
  for (const char* f : { "study_reports.csv", "study_summary.csv", "study_meta.csv", "rate_vs_h.svg" }) {
    CAPTURE(f);
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(csv_rows(a / "study_summary.csv").size() == 3);
}

TEST_CASE("scan on a drawn sample and on a file")
{
  const fs::path dir = scratch("scan");
  Outcome o = run_cli({ "scan", "--scenario", "S1", "--n", "512", "--seed", "3", "--xgrid-points", "41", "--output-dir",
                        dir.string() });
  CHECK(o.code == 0);
  auto rows = csv_rows(dir / "rate_report.csv");
  REQUIRE(rows.size() > 2);
  CHECK(rows[0][0] == "n");
  CHECK(rows[1][0] == "512");

  const fs::path data = write_data(dir, jittered(400), [](double x) { return std::sin(6.0 * x); });
  o = run_cli({ "scan", "--input", data.string(), "--targets", "kde,ftilde:1", "--hs", "0.05,0.1,0.2", "--xgrid-points",
                "21", "--output-dir", dir.string() });
  CHECK(o.code == 0);
  rows = csv_rows(dir / "rate_report.csv");
  CHECK(rows.size() == 1 + 2 * 3);
}

TEST_CASE("empproc covering counts are monotone")
{
  const fs::path dir = scratch("empproc");
  const Outcome o = run_cli({ "empproc", "--class", "indicator-windows", "--hs", "0.1,0.2,0.4", "--x-points", "101",
                              "--checks", "covering", "--covering-sample", "1000", "--eps", "0.4,0.2,0.1,0.05",
                              "--output-dir", dir.string() });
  CHECK(o.code == 0);
  const auto rows = csv_rows(dir / "covering.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][0] == "class");
  long prev = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const long count = std::stol(rows[i][2]);
    CHECK(count >= prev);
    prev = count;
  }
  CHECK(run_cli({ "empproc", "--class", "circles" }).code == cli::kExitUsage);
  CHECK(run_cli({ "empproc", "--checks", "tail", "--replicates", "10", "--output-dir", dir.string() }).code ==
        cli::kExitUsage);
}
