#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "spc/cli.hpp"

using namespace spc;
using namespace spc::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spc_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

int run_quiet(const RunConfig& c) {
  std::ostringstream log;
  return run(c, log);
}

int spc_exit(const std::string& args) {
  const std::string cmd = std::string(SPC_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ParseNumber, Forms) {
  EXPECT_EQ(parse_number("0.025"), 0.025);
  EXPECT_EQ(parse_number("1/40"), 1.0 / 40);
  EXPECT_EQ(parse_number(" 2.5e-2 "), 0.025);
  EXPECT_EQ(parse_number("-0.1"), -0.1);
  EXPECT_THROW(parse_number("abc"), ConfigError);
  EXPECT_THROW(parse_number("1/0"), ConfigError);
  EXPECT_THROW(parse_number("1/4x"), ConfigError);
  EXPECT_THROW(parse_number(""), ConfigError);
}

TEST(SplitList, Forms) {
  EXPECT_EQ(split_list("1/40,1/45, 1/50"), (std::vector<std::string>{"1/40", "1/45", "1/50"}));
  EXPECT_THROW(split_list("1,,2"), ConfigError);
}

TEST(TableScientific, Format) {
  EXPECT_EQ(table_scientific(0.199913), "1.99913E-1");
  EXPECT_EQ(table_scientific(1.0), "1.00000E-0");
  EXPECT_EQ(table_scientific(0.2), "2.00000E-1");
  EXPECT_EQ(table_scientific(-0.1), "-1.00000E-1");
  EXPECT_EQ(table_scientific(0.5), "5.00000E-1");
  EXPECT_EQ(table_scientific(12345.0), "1.23450E+4");
  EXPECT_EQ(table_scientific(3.2e-12), "3.20000E-12");
}

TEST(Shortest, RoundTrips) {
  for (double v : {0.1, 1.0 / 3, 1e-300, 123456.789, -2.5, std::numbers::pi}) EXPECT_EQ(std::stod(shortest(v)), v);
  EXPECT_EQ(shortest(0.1), "0.1");
  EXPECT_EQ(shortest(2.0), "2");
}

TEST(ConfigFromJson, KeysAndTypes) {
  const RunConfig c = config_from_json(
      R"({"command":"constraint-table","problem":"example2","delta":[1,"0.5"],"h":"1/10,1/20","paths":"300",)"
      R"("seed":11,"max-iter":50,"estimator":"monte-carlo","unit_auxiliary_diffusion":true,"gamma":"1/5"})");
  EXPECT_EQ(c.command, Command::constraint_table);
  EXPECT_EQ(c.problem, "example2");
  EXPECT_EQ(c.deltas, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(c.h, (std::vector<std::string>{"1/10", "1/20"}));
  EXPECT_EQ(c.paths, 300);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.max_iter, 50);
  EXPECT_EQ(c.estimator, MeanEstimator::monte_carlo);
  EXPECT_TRUE(c.unit_auxiliary_diffusion);
  EXPECT_EQ(*c.params.gamma, 0.2);
}

TEST(ConfigFromJson, Rejects) {
  EXPECT_THROW(config_from_json(R"({"bogus":1})"), ConfigError);
  EXPECT_THROW(config_from_json(R"([1,2])"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"paths":2.5})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"seed":-1})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"command":"plot"})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"estimator":"quasi"})"), ConfigError);
  EXPECT_THROW(config_from_json("{"), ConfigError);
}

TEST(Finalize, Defaults) {
  RunConfig a;
  a.command = Command::constraint_table;
  finalize(a);
  EXPECT_EQ(a.rule, "tau=h");
  EXPECT_EQ(a.h.size(), 5u);
  EXPECT_EQ(a.deltas, (std::vector<double>{0.2, 0.1, -0.1, -0.2}));

  RunConfig b;
  b.command = Command::constraint_table;
  b.problem = "example2";
  finalize(b);
  EXPECT_EQ(b.rule, "tau=h/sqrt2");
  EXPECT_EQ(b.deltas, (std::vector<double>{1, 0.5, -0.5, -1}));

  RunConfig s;
  finalize(s);
  EXPECT_EQ(s.h, (std::vector<std::string>{"1/40"}));
}

TEST(Finalize, Rejects) {
  auto bad = [](auto edit) {
    RunConfig c;
    edit(c);
    EXPECT_THROW(finalize(c), ConfigError);
  };
  bad([](RunConfig& c) { c.problem = "example9"; });
  bad([](RunConfig& c) { c.rule = "tau=h^3"; });
  bad([](RunConfig& c) { c.paths = 0; });
  bad([](RunConfig& c) { c.eps0 = 0; });
  bad([](RunConfig& c) { c.max_iter = 0; });
  bad([](RunConfig& c) { c.rho = -1; });
  bad([](RunConfig& c) { c.h = {"1/10", "1/20"}; });
  bad([](RunConfig& c) { c.deltas = {0.1, 0.2}; });
  bad([](RunConfig& c) {
    c.command = Command::convergence;
    c.deltas = {0.1};
  });
  bad([](RunConfig& c) {
    c.command = Command::convergence;
    c.paths = 1;
  });
  bad([](RunConfig& c) {
    c.command = Command::convergence;
    c.h = {"1/10", "1/20", "1/30"};
    c.tau = {"0.1", "0.05"};
  });
}

TEST(Resolutions, Rules) {
  const ManufacturedProblem p1 = example1();
  RunConfig c;
  c.command = Command::convergence;
  c.h = {"1/40", "1/45", "1/50", "1/60", "1/70"};
  finalize(c);
  const auto r = make_resolutions(c, p1);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r[0].cells, 40);
  EXPECT_EQ(r[0].steps, 40);
  EXPECT_EQ(r[4].steps, 70);
  EXPECT_DOUBLE_EQ(r[1].h, 1.0 / 45);

  c.rule = "tau=h^2";
  c.h = {"1/10", "1/30"};
  EXPECT_EQ(make_resolutions(c, p1)[1].steps, 900);

  c.rule = "tau=h/sqrt2";
  c.h = {"1/40"};
  const auto r2 = make_resolutions(c, example2());
  EXPECT_EQ(r2[0].cells, 40);
  EXPECT_NEAR(r2[0].h, std::sqrt(2.0) / 40, 1e-15);
  EXPECT_EQ(r2[0].steps, 40);

  c.rule = "tau=h^2/2";
  c.h = {"1/10"};
  EXPECT_EQ(make_resolutions(c, example2())[0].steps, 100);

  c.tau = {"1/7"};
  EXPECT_EQ(make_resolutions(c, p1)[0].steps, 7);
}

TEST(Resolutions, Rejects) {
  RunConfig c;
  c.command = Command::convergence;
  c.h = {"0.3"};
  finalize(c);
  EXPECT_THROW(make_resolutions(c, example1()), ConfigError);
  c.h = {"1/1"};
  EXPECT_THROW(make_resolutions(c, example1()), ConfigError);
  c.h = {"1/10"};
  c.tau = {"0.3"};
  EXPECT_THROW(make_resolutions(c, example1()), ConfigError);
  c.tau.clear();
  c.rule = "tau=h";
  EXPECT_THROW(make_resolutions(c, example2()), ConfigError);  // sqrt2/10 does not divide T
}

TEST(Run, SolveWritesArtifactsAndIsReproducible) {
  RunConfig c;
  c.h = {"1/20"};
  c.output = scratch("solve_a").string();
  ASSERT_EQ(run_quiet(c), exit_ok);
  RunConfig d = c;
  d.output = scratch("solve_b").string();
  d.threads = 2;
  ASSERT_EQ(run_quiet(d), exit_ok);
  for (const char* f : {"iterations.csv", "fields.csv", "summary.json"}) {
    EXPECT_FALSE(slurp(fs::path(c.output) / f).empty()) << f;
    EXPECT_EQ(slurp(fs::path(c.output) / f), slurp(fs::path(d.output) / f)) << f;
  }
  const auto it = lines(fs::path(c.output) / "iterations.csv");
  EXPECT_EQ(it.front(), "iter,mu,step_error,constraint_integral,cost_J");
  EXPECT_EQ(lines(fs::path(c.output) / "fields.csv").front(),
            "level,t,node,x,y,control,state_mean,adjoint_mean");
  EXPECT_EQ(lines(fs::path(c.output) / "fields.csv").size(), 1u + 21u * 19u);
  const auto summary = nlohmann::json::parse(slurp(fs::path(c.output) / "summary.json"));
  EXPECT_TRUE(summary["converged"].get<bool>());
  EXPECT_EQ(summary["problem"]["target_reading"], "beta_scaled");
  // At this width the unconstrained discrete optimum is already feasible.
  const double integral = summary["constraint_integral"].get<double>();
  const double delta = summary["problem"]["delta"].get<double>();
  EXPECT_NEAR(delta, 1 / std::numbers::pi, 1e-15);
  if (summary["mu"].get<double>() > 0)
    EXPECT_NEAR(integral, delta, 1e-8);
  else
    EXPECT_LE(integral, delta + 1e-8);
}

TEST(Run, SlackDeltaGivesZeroMultiplierColumn) {
  RunConfig c;
  c.h = {"1/20"};
  c.deltas = {10};
  c.output = scratch("slack").string();
  ASSERT_EQ(run_quiet(c), exit_ok);
  const auto it = lines(fs::path(c.output) / "iterations.csv");
  ASSERT_GT(it.size(), 1u);
  for (std::size_t i = 1; i < it.size(); ++i) EXPECT_EQ(fields(it[i])[1], "0");
}

TEST(Run, ConvergenceOutputs) {
  RunConfig c;
  c.command = Command::convergence;
  c.h = {"1/10", "1/20"};
  c.paths = 20;
  c.output = scratch("conv").string();
  ASSERT_EQ(run_quiet(c), exit_ok);
  const auto rows = lines(fs::path(c.output) / "errors.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0],
            "h,tau,paths,seed,strong_l2_state,strong_l2_adjoint,strong_l2_control,h1_state,h1_adjoint,mu_error,mu,"
            "iterations,converged");
  const auto orders = nlohmann::json::parse(slurp(fs::path(c.output) / "orders.json"));
  EXPECT_TRUE(orders["vs_tau"]["strong_l2_control"].contains("slope"));
  EXPECT_TRUE(orders["vs_h"]["mu_error"].contains("r_squared"));
  EXPECT_EQ(orders["rule"], "tau=h");
}

TEST(Run, ConstraintTableShape) {
  RunConfig c;
  c.command = Command::constraint_table;
  c.h = {"1/10", "1/12", "1/14", "1/16", "1/18"};
  c.output = scratch("table").string();
  ASSERT_EQ(run_quiet(c), exit_ok);
  const auto rows = lines(fs::path(c.output) / "table.csv");
  EXPECT_EQ(rows.size(), 1u + 4u * 5u);
  EXPECT_EQ(rows[0], "delta,h,tau,cells,steps,integral,integral_sci,mu,iterations,converged");
  const auto wide = lines(fs::path(c.output) / "table_wide.csv");
  ASSERT_EQ(wide.size(), 5u);
  EXPECT_EQ(fields(wide[1]), (std::vector<std::string>{"0.2", "2.00000E-1", "2.00000E-1", "2.00000E-1",
                                                       "2.00000E-1", "2.00000E-1"}));
  EXPECT_EQ(fields(wide[3])[0], "-0.1");
  EXPECT_EQ(fields(wide[3])[1], "-1.00000E-1");
}

TEST(Run, VerifyPasses) {
  for (const char* name : {"example1", "example2"}) {
    RunConfig c;
    c.command = Command::verify;
    c.problem = name;
    c.output = scratch(std::string("verify_") + name).string();
    EXPECT_EQ(run_quiet(c), exit_ok);
    const auto rows = lines(fs::path(c.output) / "residuals.csv");
    EXPECT_EQ(rows.size(), std::string(name) == "example1" ? 4u : 3u);
    EXPECT_EQ(fields(rows[1])[10], "true");
    EXPECT_EQ(fields(rows.back())[10], "false");
  }
}

TEST(Run, ExitCodes) {
  RunConfig bad;
  bad.problem = "nope";
  bad.output = scratch("bad").string();
  EXPECT_EQ(run_quiet(bad), exit_config);

  const fs::path file = scratch("a_file");
  fs::create_directories(file.parent_path());
  std::ofstream(file) << "x";
  RunConfig blocked;
  blocked.output = (file / "sub").string();
  EXPECT_EQ(run_quiet(blocked), exit_config);

  RunConfig diverge;
  diverge.h = {"1/10"};
  diverge.rho = 1e200;
  diverge.output = scratch("diverge").string();
  EXPECT_EQ(run_quiet(diverge), exit_numerical);
}

TEST(Binary, FlagsConfigFileAndExitCodes) {
  const fs::path out = scratch("bin");
  EXPECT_EQ(spc_exit("verify --problem example2 --output " + out.string()), 0);
  EXPECT_EQ(spc_exit("solve --h 1/7x --output " + out.string()), 2);
  EXPECT_EQ(spc_exit("solve --no-such-flag"), 2);
  EXPECT_EQ(spc_exit(""), 2);
  EXPECT_EQ(spc_exit("solve --h 1/10 --rho 1e200 --output " + out.string()), 3);

  const fs::path cfg = out / "cfg.json";
  std::ofstream(cfg) << R"({"h": "1/10", "delta": 0.1, "max-iter": 2})";
  EXPECT_EQ(spc_exit("solve --config " + cfg.string() + " --max-iter 4 --output " + out.string()), 0);
  EXPECT_EQ(lines(out / "iterations.csv").size(), 5u);
  std::ofstream(cfg) << R"({"unknown": 1})";
  EXPECT_EQ(spc_exit("solve --config " + cfg.string()), 2);
}

TEST(Binary, ThreadEnvDoesNotChangeOutput) {
  const fs::path a = scratch("env_a"), b = scratch("env_b");
  const std::string args = "constraint-table --h 1/10,1/12 --estimator monte-carlo --paths 100 --output ";
  ASSERT_EQ(std::system(("SPC_NUM_THREADS=1 " + std::string(SPC_BINARY) + " " + args + a.string() + " >/dev/null").c_str()),
            0);
  ASSERT_EQ(std::system(("SPC_NUM_THREADS=3 " + std::string(SPC_BINARY) + " " + args + b.string() + " >/dev/null").c_str()),
            0);
  EXPECT_EQ(slurp(a / "table.csv"), slurp(b / "table.csv"));
  EXPECT_EQ(slurp(a / "table_iterations.csv"), slurp(b / "table_iterations.csv"));
}
