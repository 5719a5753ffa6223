#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "stinv/config.hpp"

using namespace stinv;

namespace {

const char* kBase =
    "# sample\n"
    "domain.a = 0\n"
    "domain.b = 1\n"
    "domain.T = 1   # end time\n"
    "kappa.1 = 1.0\n"
    "kappa.2 = 2\n"
    "motion.gamma0 = 0.3\n"
    "motion.v = 0.1\n"
    "\n"
    "omega.left = 0.6\n"
    "omega.right = 0.8\n";

template <class Fn>
ConfigError config_error(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError";
  return ConfigError(ErrorCode::Incomplete, "", "");
}

}  // namespace

TEST(Expression, GrammarAndPrecedence) {
  EXPECT_EQ(Expression::parse("1 + 2 * 3")(0, 0), 7.0);
  EXPECT_EQ(Expression::parse("-x^2")(3, 0), -9.0);
  EXPECT_EQ(Expression::parse("2^3^2")(0, 0), 512.0);
  EXPECT_EQ(Expression::parse("(1+2)*3")(0, 0), 9.0);
  EXPECT_EQ(Expression::parse("8/2/2")(0, 0), 2.0);
  EXPECT_EQ(Expression::parse("2*-t")(0, 1.5), -3.0);
  EXPECT_NEAR(Expression::parse("sin(x)*cos(t)+exp(1e-1*t)")(0.4, 0.7), std::sin(0.4) * std::cos(0.7) + std::exp(0.07), 1e-15);
  EXPECT_EQ(Expression::parse("1.5E2")(0, 0), 150.0);
  EXPECT_EQ(Expression::parse(" x ").text(), " x ");
}

TEST(Expression, ErrorsCarryColumn) {
  for (const char* bad : {"sin(", "x +", "foo(x)", "1..2", "(x", "x y", "sqrt(x)"}) {
    try {
      Expression::parse(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
      EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
    }
  }
}

TEST(Config, ExampleValues) {
  const RunConfig c = parse_config_text(kBase);
  EXPECT_EQ(c.kappa1, 1.0);
  EXPECT_EQ(c.v, std::vector<double>{0.1});
  for (double t : {0.0, 0.5, 1.0}) EXPECT_NEAR(c.motion().position(t), 0.3 + 0.1 * t, 1e-15);
  EXPECT_EQ(c.lambda, 1e-2);
}

TEST(Config, LambdaRuleArithmetic) {
  const RunConfig c = parse_config_text(std::string(kBase) + "inverse.lambda_rule = var45\ninverse.lambda_c = 1\n");
  EXPECT_FALSE(c.lambda);
  EXPECT_NEAR(c.lambda_for(0.1, 0.01), 0.18361, 5e-6);
  const ConfigError e = config_error(
      [] { parse_config_text(std::string(kBase) + "inverse.lambda_rule = var45\ninverse.lambda = 0.1\n"); });
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
}

TEST(Config, PolynomialVelocityAndStationary) {
  const RunConfig c = parse_config_text(kBase, {"motion.v=0.1 0.2"});
  EXPECT_NEAR(c.motion().position(1.0), 0.3 + 0.1 + 0.1, 1e-15);
  EXPECT_TRUE(parse_config_text(kBase, {"motion.v = 0"}).motion().is_stationary());
}

TEST(Config, OverridesApplyInOrder) {
  const RunConfig c = parse_config_text(kBase, {"kappa.1 = 3", "kappa.1=4", "mesh.levels = 2"});
  EXPECT_EQ(c.kappa1, 4.0);
  EXPECT_EQ(c.levels, 2);
}

TEST(Config, RejectsUnknownKeysAndBadLines) {
  ConfigError e = config_error([] { parse_config_text(std::string(kBase) + "kappa.3 = 1\n"); });
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  EXPECT_EQ(e.where(), "kappa.3");

  e = config_error([] { parse_config_text(std::string(kBase) + "mesh.n_time 4\n"); });
  EXPECT_EQ(e.code(), ErrorCode::ParseError);
  EXPECT_NE(e.where().find("line 12"), std::string::npos);

  e = config_error([] { parse_config_text(std::string(kBase) + "kappa.1 = 2\n"); });
  EXPECT_EQ(e.code(), ErrorCode::ParseError);

  e = config_error([] { parse_config_text(kBase, {"kappa.2"}); });
  EXPECT_EQ(e.code(), ErrorCode::ParseError);
}

TEST(Config, ValidatesEveryField) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"kappa.1 = -1", "kappa.1"},
      {"domain.T = 0", "domain.T"},          {"omega.right = 0.5", "omega.right"},
      {"motion.gamma0 = 0.7", "motion.gamma0"}, {"motion.v = 1", "motion.v"},
      {"mesh.n_time = 1", "mesh.n_time"},
      {"inverse.strategy = newton", "inverse.strategy"}, {"inverse.lambda = 0", "inverse.lambda"},
      {"inverse.lambda_rule = var99", "inverse.lambda_rule"}, {"noise.eps = -1", "noise.eps"},
      {"noise.seed = -3", "noise.seed"},     {"out.dir =", "out.dir"}};
  for (const auto& [line, key] : cases) {
    const ConfigError e = config_error([&] { parse_config_text(kBase, {line}); });
    EXPECT_EQ(e.code(), ErrorCode::ValidationError) << line;
    EXPECT_EQ(e.where(), key) << line;
  }
  // malformed values are syntax errors located at their line
  for (const char* line : {"kappa.2 = abc", "mesh.levels = 2.5", "ell.expr = 1 +", "noise.eps = 1e"}) {
    const ConfigError e = config_error([&] { parse_config_text(std::string(kBase) + line + "\n"); });
    EXPECT_EQ(e.code(), ErrorCode::ParseError) << line;
    EXPECT_EQ(e.where(), "config line 12") << line;
  }
}

TEST(Config, ResolvedConfigRoundTrips) {
  const RunConfig c = parse_config_text(kBase, {"ell.expr = 1 + x*t", "inverse.lambda_rule = post310", "noise.eps = 0.125"});
  std::ostringstream os;
  write_resolved_config(c, os);
  const RunConfig d = parse_config_text(os.str());
  std::ostringstream os2;
  write_resolved_config(d, os2);
  EXPECT_EQ(os.str(), os2.str());
  EXPECT_EQ(d.gamma0, c.gamma0);
  EXPECT_EQ(d.eps, 0.125);
  EXPECT_EQ(*d.lambda_rule, LambdaRule::Post310);
}
