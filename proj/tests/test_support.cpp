#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "sheafcx/cache.hpp"
#include "sheafcx/io.hpp"
#include "sheafcx/parser.hpp"
#include "sheafcx/run_config.hpp"

using namespace sheafcx;

namespace {

std::filesystem::path scratch_dir(const char* name) {
  auto d = std::filesystem::temp_directory_path() / ("sheafcx_test_" + std::string(name) + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(RunConfig, TextOverridesDefaultsAndRejectsUnknownKeys) {
  RunConfig c;
  c.load_text("# comment\nseed = 42\n  tolerance=1e-9  # trailing\n\nformat = text\n");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_DOUBLE_EQ(c.tolerance, 1e-9);
  EXPECT_EQ(c.format, OutputFormat::Text);
  EXPECT_DOUBLE_EQ(c.max_evaluations, 1e8);

  RunConfig bad;
  EXPECT_THROW(bad.load_text("colour = blue\n"), Error);
  EXPECT_THROW(bad.load_text("seed\n"), Error);
  EXPECT_THROW(bad.set("threads", "many"), Error);
  EXPECT_THROW(bad.set("format", "xml"), Error);
}

TEST(RunConfig, HashIgnoresCacheDirAndThreads) {
  RunConfig a, b;
  b.cache_dir = "/somewhere";
  b.threads = 8;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.seed = 1;
  EXPECT_NE(a.hash(), b.hash());
}

TEST(RunConfig, ValidateCatchesNonsense) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gap = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = RunConfig{};
  c.threads = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(RunConfig, EnvironmentLayer) {
  ::setenv("SHEAFCX_CACHE_DIR", "/tmp/from-env", 1);
  ::setenv("SHEAFCX_THREADS", "3", 1);
  RunConfig c;
  c.load_env();
  EXPECT_EQ(c.cache_dir, "/tmp/from-env");
  EXPECT_EQ(c.threads, 3u);
  ::unsetenv("SHEAFCX_CACHE_DIR");
  ::unsetenv("SHEAFCX_THREADS");
}

TEST(PowerSumCache, WarmReadIsBitIdentical) {
  const auto dir = scratch_dir("cache");
  const Expr e = parse_expr("AS(psi, x^3 + x)");
  SumOptions opts;
  std::vector<cplx> cold;
  {
    PowerSumCache cache(dir.string());
    cold = cache.power_sums(e, 7, 5, opts);
    EXPECT_EQ(cache.misses(), 5u);
  }
  PowerSumCache warm(dir.string());
  const auto again = warm.power_sums(e, 7, 5, opts);
  EXPECT_EQ(warm.hits(), 5u);
  EXPECT_EQ(warm.misses(), 0u);
  ASSERT_EQ(again.size(), cold.size());
  for (std::size_t i = 0; i < cold.size(); ++i) {
    EXPECT_EQ(again[i].real(), cold[i].real());
    EXPECT_EQ(again[i].imag(), cold[i].imag());
  }
  // Extending M computes only the tail.
  const auto longer = warm.power_sums(e, 7, 7, opts);
  EXPECT_EQ(longer.size(), 7u);
  EXPECT_EQ(warm.misses(), 2u);
  const auto direct = power_sums(e, 7, 7, opts);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(std::abs(longer[i] - direct[i]), 0.0, 1e-9);
  std::filesystem::remove_all(dir);
}

TEST(PowerSumCache, KeysSeparateAmbientAndExpression) {
  const Expr e = parse_expr("AS(psi, x^2)");
  EXPECT_NE(cache_hash(e, 1), cache_hash(e, 2));
  EXPECT_NE(cache_hash(e, 1), cache_hash(parse_expr("AS(psi, x^3)"), 1));
  EXPECT_EQ(cache_hash(e, 1), cache_hash(parse_expr("AS(psi,x^2)"), 1));
}

TEST(PowerSumCache, ForeignHeaderIsIgnored) {
  const auto dir = scratch_dir("header");
  const Expr e = parse_expr("AS(psi, x^2)");
  {
    PowerSumCache cache(dir.string());
    cache.power_sums(e, 5, 2, SumOptions{});
  }
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    std::ofstream out(f.path(), std::ios::trunc);
    out << "sheafcx-cache 0 old\n1 0x1p+0 0x0p+0\n";
  }
  PowerSumCache cache(dir.string());
  EXPECT_FALSE(cache.get({5, 1, cache_hash(e, 1)}).has_value());
  std::filesystem::remove_all(dir);
}

TEST(JsonViews, StableFieldNames) {
  const auto r = complete_sum(parse_expr("AS(psi, x^2)"), 7);
  const auto j = io::to_json(r);
  EXPECT_EQ(j["npoints"], 7);
  EXPECT_NEAR(j["value"]["im"].get<double>(), std::sqrt(7.0), 1e-12);

  const auto b = propagate(parse_expr("AS(psi, x^2) (*) K(chi[2], x)"));
  const auto jb = io::to_json(b);
  EXPECT_TRUE(jb["numeric"].get<bool>());
  EXPECT_EQ(jb["trail"]["rule"], b.trail.rule);
  EXPECT_EQ(jb["trail"]["children"].size(), 2u);
  EXPECT_EQ(jb["value"], rational_string(b.value));
}
