#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "app.hpp"
#include "io.hpp"

namespace qtl::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int status = 0;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "qtl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

const std::string kSampled =
    R"({"kind":"discrete","points":[[0,0],[0.2,0.04],[0.4,0.16],[0.5,0.25],[0.6,0.36],[0.8,0.64],[1,1]]})";
const std::string kLinear = R"({"kind":"power","domain":[0,1],"exponent":1})";
const std::string kSquare = R"({"kind":"power","domain":[0,1],"exponent":2})";

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("qtl_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                  ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& body) const {
    std::ofstream(file(name)) << body;
    return file(name);
  }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

TEST(Cli, EnvelopeSampledValues) {
  const auto r = call({"envelope", "--function", kSampled, "--at", "0.39,0.4,0.41"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(r.out);
  ASSERT_EQ(j["values"].size(), 3u);
  EXPECT_NEAR(j["values"][0]["value"].get<double>(), 0.154, 1e-9);
  EXPECT_NEAR(j["values"][1]["value"].get<double>(), 0.160, 1e-9);
  EXPECT_NEAR(j["values"][2]["value"].get<double>(), 0.169, 1e-9);
  EXPECT_EQ(j["values"][0]["case"]["family"], "MC2-2");
  EXPECT_EQ(j["values"][1]["case"]["family"], "MC2-3");
  EXPECT_EQ(j["corners"].size(), 7u);
}

TEST(Cli, MalformedManifestExitsTwo) {
  TempDir d;
  const auto r = call({"run", d.write("m.json", R"({"mode": "envelope", oops)")});
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "parse");
}

TEST(Cli, SchemaErrorsExitTwo) {
  auto r = call({"feasibility", "--cost", kSquare, "--utility", kLinear, "--c-c", "0.2"});
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "schema");
  r = call({"feasibility", "--cost", kSquare, "--utility", kLinear, "--c-c", "x", "--u-c", "0.4"});
  EXPECT_EQ(r.status, 2);
  r = call({"envelope", "--function", R"({"kind":"spline","points":[]})"});
  EXPECT_EQ(r.status, 2);
  r = call({"nosuchcommand"});
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "usage");
  TempDir d;
  r = call({"run", d.write("m.json", R"({"mode": "teleport"})")});
  EXPECT_EQ(r.status, 2);
}

TEST(Cli, DomainErrorsExitOne) {
  const auto r = call({"eval", "--policy", R"({"lambda":1.0,"mu":0.5})", "--cost", kSquare, "--utility", kLinear});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "unstable");
}

TEST(Cli, Feasibility) {
  const auto r = call({"feasibility", "--cost", kSquare, "--utility", kLinear, "--c-c", "0.2", "--u-c", "0.4"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["status"], "feasible");
  EXPECT_NEAR(j["min_cost"].get<double>(), 0.16, 1e-12);
}

TEST(Cli, EvalMM1) {
  const auto r = call({"eval", "--policy", R"({"lambda":0.4,"mu":1})", "--cost", kSquare, "--utility", kLinear});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["metrics"]["Qbar"].get<double>(), 2.0 / 3.0, 1e-11);
  EXPECT_NEAR(j["metrics"]["Dbar"].get<double>(), 5.0 / 3.0, 1e-11);
  EXPECT_GE(j["qlength_bound"]["bound"].get<double>(), 2.0 / 3.0);
}

TEST(Cli, TraceCsvIsDeterministic) {
  TempDir d;
  const std::string manifest = R"({"mode":"trace","cost":)" + kSampled + R"(,"utility":)" + kLinear +
                               R"(,"beta1":{"log":[0.1,1000,6]},"service_actions":[0,0.2,0.4,0.5,0.6,0.8,1],)"
                               R"("arrival_actions":[0.4],"state_cap":400,"output":")" + d.file("t.csv") + R"("})";
  const auto path = d.write("m.json", manifest);
  auto r = call({"run", path});
  ASSERT_EQ(r.status, 0) << r.err;
  const std::string first = slurp(d.file("t.csv"));
  r = call({"run", path});
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(first, slurp(d.file("t.csv")));

  std::istringstream lines(first);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("# qtl ", 0), 0u);
  EXPECT_NE(line.find("manifest="), std::string::npos);
  std::getline(lines, line);
  EXPECT_EQ(line, "beta1,beta2,c_c,u_c,q_star");
  int rows = 0;
  while (std::getline(lines, line)) rows += line.empty() || line[0] == '#' ? 0 : 1;
  EXPECT_EQ(rows, 6);
}

TEST(Cli, FlagsAndManifestAgree) {
  TempDir d;
  const std::string manifest = R"({"mode":"sweep","family":{"name":"mc23","lambda":0.4,"K":0.1},"cost":)" + kSampled +
                               R"(,"utility":)" + kLinear + "}";
  const auto a = call({"run", d.write("m.json", manifest)});
  const auto b = call({"sweep", "--family", R"({"name":"mc23","lambda":0.4,"K":0.1})", "--cost", kSampled, "--utility",
                       kLinear});
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto c = call({"sweep", "--manifest", d.file("m.json"), "--grid", "0.01,0.001"});
  ASSERT_EQ(c.status, 0) << c.err;
  EXPECT_NE(c.out.substr(0, c.out.find('\n')), a.out.substr(0, a.out.find('\n')));  // different manifest hash
}

TEST(Cli, ClassifyFromSweepCsv) {
  TempDir d;
  auto r = call({"sweep", "--family", R"({"name":"mc22","lambda":0.39})", "--cost", kSampled, "--utility", kLinear, "-o",
                 d.file("s.csv")});
  ASSERT_EQ(r.status, 0) << r.err;
  r = call({"classify", "--samples", d.file("s.csv"), "--predicted", "log"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["model"], "log-inv");
  EXPECT_EQ(j["matches"], true);
  EXPECT_EQ(j["samples"], 11);
}

TEST(Cli, ConstructRoundTrips) {
  const auto r = call({"construct", "--family", R"({"name":"lmu","u_inv":0.4})", "-U", "0.01"});
  ASSERT_EQ(r.status, 0) << r.err;
  const Policy p = policy_from_json(json::parse(r.out));
  EXPECT_TRUE(p.is_admissible());
  EXPECT_EQ(policy_to_json(p)["mu"], json::parse(r.out)["mu"]);
}

TEST(Cli, AuditReport) {
  const auto r = call({"audit", "--family", R"({"name":"mc1","lambda":0.5,"K":0.5})", "-U", "0.01", "--cost", kSquare,
                       "--utility", kLinear});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["all_strict"], true);
  EXPECT_EQ(j["checks"].size(), 3u);
  EXPECT_EQ(j["case"]["family"], "MC1");
}

TEST(Cli, SimulateReplays) {
  const std::vector<std::string> args{"simulate", "--policy", R"({"lambda":0.4,"mu":1})", "--cost", kSquare,
                                      "--utility", kLinear, "--horizon", "2000", "--replications", "4", "--seed", "9"};
  const auto a = call(args), b = call(args);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(json::parse(a.out)["replications"], 4);
}

TEST(Cli, SolveReportsPolicy) {
  const auto r = call({"solve", "--cost", kSampled, "--utility", kLinear, "--beta1", "50", "--service-actions",
                       "0,0.2,0.4,0.5,0.6,0.8,1", "--arrival-actions", "0.4", "--state-cap", "400"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["converged"], true);
  EXPECT_TRUE(policy_from_json(j["policy"]).is_admissible());
}

TEST(Cli, HelpAndVersion) {
  auto r = call({"--help"});
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("trace"), std::string::npos);
  r = call({"trace", "--help"});
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("beta1,beta2,c_c,u_c,q_star"), std::string::npos);
  r = call({"--version"});
  EXPECT_EQ(r.status, 0);
}

}  // namespace
}  // namespace qtl::cli
