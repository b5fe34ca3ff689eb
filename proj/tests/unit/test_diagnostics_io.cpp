#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include <unistd.h>

#include "indscale/diagnostics.hpp"
#include "indscale/io.hpp"
#include "indscale/rng.hpp"

using namespace indscale;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("indscale_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto path = scratch_dir() / name;
  std::ofstream(path) << text;
  return path;
}

std::vector<double> ar1(double rho, std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  std::vector<double> x(n);
  double prev = std_normal(rng) / std::sqrt(1 - rho * rho);
  for (auto& v : x) v = prev = rho * prev + std_normal(rng);
  return x;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Ess, IndependentDraws) {
  const auto r = effective_sample_size(ar1(0.0, 100'000, 1));
  EXPECT_GE(r.ess / r.n, 0.9);
  EXPECT_LE(r.ess / r.n, 1.1);
  EXPECT_LE(r.ess, 1.05 * r.n);
}

TEST(Ess, AutoregressiveCalibration) {
  const auto r = effective_sample_size(ar1(0.9, 100'000, 2));
  const double exact = (1 + 0.9) / (1 - 0.9);
  EXPECT_NEAR(r.iact, exact, 0.2 * exact);
  EXPECT_DOUBLE_EQ(r.ess, r.n / r.iact);
}

TEST(Ess, AlternatingSequenceIsFloored) {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 ? 1.0 : -1.0;
  const auto r = effective_sample_size(x);
  EXPECT_EQ(r.iact, 1.0);
  EXPECT_EQ(r.ess, 1000.0);
}

TEST(Ess, Errors) {
  EXPECT_NE(message_of([] { effective_sample_size(std::vector<double>(500, 3.0)); }).find("zero variance"),
            std::string::npos);
  EXPECT_THROW(effective_sample_size(std::vector<double>(99, 1.0)), std::invalid_argument);
  auto x = ar1(0.5, 200, 3);
  x[10] = NAN;
  EXPECT_THROW(effective_sample_size(x), std::invalid_argument);
}

TEST(Ess, AffineInvariance) {
  const auto x = ar1(0.7, 20'000, 4);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = -3.5 * x[i] + 1e3;
  EXPECT_NEAR(effective_sample_size(x).ess, effective_sample_size(y).ess, 1e-6 * effective_sample_size(x).ess);
}

TEST(TuningSummary, Normalization) {
  const auto one = tuning_summary({{4, 0.5, 2.0, 0.0, 0.01}});
  EXPECT_EQ(one.rows[0].normalized_efficiency, 1.0);
  const auto t = tuning_summary({{4, 1.0, 4.0, 0, 0}, {1, 1.0, 1.0, 0, 0}, {2, 1.0, 2.0, 0, 0}}, "x");
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0].k, 1u);
  EXPECT_DOUBLE_EQ(t.rows[0].normalized_efficiency, 0.25);
  EXPECT_DOUBLE_EQ(t.rows[1].normalized_efficiency, 0.5);
  EXPECT_DOUBLE_EQ(t.rows[2].normalized_efficiency, 1.0);
  EXPECT_EQ(t.best().k, 4u);
  EXPECT_THROW(tuning_summary({}), std::invalid_argument);
}

TEST(Csv, TuningRoundTrip) {
  const auto t = tuning_summary({{3, 0.383123456789012, 3 * 0.383123456789012, 0, 0.00123},
                                 {1, 0.9876543210987, 0.9876543210987, 0, 0.0004},
                                 {10, 0.0, 0.0, 0, 0.0}});
  const auto path = scratch_dir() / "tuning.csv";
  write_tuning_csv(t, path);
  const auto back = read_tuning_csv(path);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].k, t.rows[i].k);
    EXPECT_NEAR(back.rows[i].acceptance, t.rows[i].acceptance, 1e-12 * std::abs(t.rows[i].acceptance));
    EXPECT_NEAR(back.rows[i].mean_moved, t.rows[i].mean_moved, 1e-12 * std::abs(t.rows[i].mean_moved));
    EXPECT_NEAR(back.rows[i].normalized_efficiency, t.rows[i].normalized_efficiency, 1e-12);
    EXPECT_NEAR(back.rows[i].mc_se, t.rows[i].mc_se, 1e-12 * t.rows[i].mc_se);
  }
  EXPECT_EQ(back.argmax, t.argmax);
  EXPECT_EQ(tuning_csv(back), tuning_csv(t));
}

TEST(Csv, Schemas) {
  const auto t = tuning_summary({{2, 0.5, 1.0, 0, 0.01}});
  const auto csv = tuning_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "k,acceptance,acceptance_se,mean_moved,normalized_efficiency,theoretical_efficiency");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  Trace a{{1.0, 2.0, 3.0, 4.0}, "a"}, d{{5.0, 6.0, 7.0, 8.0}, "d"};
  EXPECT_EQ(trace_csv({a, d}, 2), "iteration,a,d\n0,1,5\n2,2,6\n4,3,7\n6,4,8\n");
  EXPECT_EQ(ess_csv({{"k=1:a", EssReport{50.0, 2.0, 100}}}), "label,n,iact,ess\nk=1:a,100,2,50\n");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(INFINITY), "inf");
}

TEST(Loaders, RemovalTimes) {
  const auto path = write_file("removals.txt", "# comment\n5\n1.5\n\n3  # trailing\n");
  const auto d = load_removal_times(path, 10);
  EXPECT_EQ(d.removal_times, (std::vector<double>{1.5, 3.0, 5.0}));
  EXPECT_EQ(d.original_index, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(d.population, 10u);
}

TEST(Loaders, RemovalTimeErrorsCarryLineNumbers) {
  const auto neg = write_file("neg.txt", "1\n2\n-4\n");
  const auto msg = message_of([&] { load_removal_times(neg, 10); });
  EXPECT_NE(msg.find("neg.txt:3"), std::string::npos) << msg;
  const auto bad = write_file("bad.txt", "1\nabc\n");
  EXPECT_NE(message_of([&] { load_removal_times(bad, 10); }).find("bad.txt:2"), std::string::npos);
  EXPECT_THROW(load_removal_times(bad, 10), DataError);
  const auto missing = scratch_dir() / "nope.txt";
  EXPECT_NE(message_of([&] { load_removal_times(missing, 10); }).find("nope.txt"), std::string::npos);
  const auto crowded = write_file("crowded.txt", "1\n2\n3\n");
  EXPECT_THROW(load_removal_times(crowded, 2), DataError);
}

TEST(Loaders, Clusters) {
  const auto path = write_file("clusters.txt", "# size,count\n2,3\n1, 10\n");
  const auto d = load_clusters(path);
  EXPECT_EQ(d.sample_size(), 16u);
  const auto bad = write_file("clusters_bad.txt", "1,2\n3\n");
  EXPECT_NE(message_of([&] { load_clusters(bad); }).find("clusters_bad.txt:2"), std::string::npos);
  const auto dup = write_file("clusters_dup.txt", "1,2\n1,3\n");
  EXPECT_THROW(load_clusters(dup), DataError);
}

TEST(Loaders, BundledAbakaliki) {
  const auto d = load_removal_times(std::string(INDSCALE_DATA_DIR) + "/abakaliki_removals.txt", 120);
  EXPECT_EQ(d.size(), 30u);
  EXPECT_EQ(d.removal_times.front(), 0.0);
  EXPECT_EQ(d.removal_times.back(), 76.0);
}
