#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "tabprobe/dataset.hpp"
#include "tabprobe/trial.hpp"

namespace fixtures {

/// Census-style table: 15 columns, '?' for missing workclass/occupation/country,
/// an integer education-num that mirrors education, and hours-per-week
/// correlated with age.
std::string adult_like_csv(std::size_t rows, std::uint64_t seed);
tabprobe::Dataset adult_like(std::size_t rows, std::uint64_t seed, std::string id = "adult");

/// Small all-numeric table with a few columns (no categoricals).
std::string numeric_csv(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// P[X >= k], X ~ Binomial(n, num/den), summed exactly in big integers and
/// rounded to double at the end.
double exact_binomial_tail(std::uint64_t n, std::uint64_t k, std::uint64_t num, std::uint64_t den);
/// Exact tails for every k in [0, n] at once.
std::vector<double> exact_binomial_tails(std::uint64_t n, std::uint64_t num, std::uint64_t den);

/// Textbook two-pass sample variance (n - 1 denominator).
double two_pass_variance(const std::vector<double>& xs);
double shannon_entropy_bits(const std::map<std::string, double>& counts);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Numeric values of a column (missing cells skipped).
std::vector<double> numeric_column(const tabprobe::Dataset& ds, std::size_t column);
/// Total variation distance between the empirical distributions of column
/// `column` in `a` and `b`, missing counted as its own value.
double tv_distance(const tabprobe::Dataset& a, const tabprobe::Dataset& b, std::size_t column);
/// Same, after bucketing numeric values into `bins` quantile bins of `a`'s column.
double binned_tv_distance(const tabprobe::Dataset& a, const tabprobe::Dataset& b, std::size_t column, std::size_t bins = 20);
/// binned_tv_distance for numerical columns, tv_distance otherwise.
double marginal_tv(const tabprobe::Dataset& a, const tabprobe::Dataset& b, std::size_t column);

struct GroupTally {
  std::uint64_t n = 0;
  std::uint64_t correct = 0;
};
using GroupKey = std::tuple<std::string, std::string, std::string, std::string>;  // dataset, variant, task, model
/// Straightforward group-by over trial records.
std::map<GroupKey, GroupTally> tally(const std::vector<tabprobe::TrialRecord>& trials);

std::string run_command(const std::string& command, int* exit_code);

}  // namespace fixtures
