#include "fixtures.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

#include "tabprobe/rng.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using boost::multiprecision::cpp_int;

namespace {

double gaussian(tabprobe::Rng& rng) {
  double u = rng.unit();
  while (u <= 0.0) u = rng.unit();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * rng.unit());
}

template <std::size_t N>
const char* pick(tabprobe::Rng& rng, const std::array<const char*, N>& items, const std::array<double, N>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.unit() * total;
  for (std::size_t i = 0; i < N; ++i) {
    if (u < weights[i]) return items[i];
    u -= weights[i];
  }
  return items[N - 1];
}

long clamp_round(double x, long lo, long hi) { return std::clamp(static_cast<long>(std::lround(x)), lo, hi); }

double ratio_to_double(cpp_int num, cpp_int den) {
  if (num == 0) return 0.0;
  const long shift = static_cast<long>(boost::multiprecision::msb(den)) - static_cast<long>(boost::multiprecision::msb(num)) + 62;
  if (shift > 0) {
    num <<= shift;
  } else {
    den <<= -shift;
  }
  const cpp_int q = num / den;
  return std::ldexp(q.convert_to<double>(), static_cast<int>(-shift));
}

}  // namespace

std::string adult_like_csv(std::size_t rows, std::uint64_t seed) {
  static const std::array<const char*, 8> workclass{"Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
                                                     "Local-gov", "State-gov", "Without-pay", "?"};
  static const std::array<double, 8> workclass_w{70, 8, 3.5, 3, 6.4, 4, 0.1, 5};
  static const std::array<const char*, 16> education{"Preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th",
                                                      "11th", "12th", "HS-grad", "Some-college", "Assoc-voc",
                                                      "Assoc-acdm", "Bachelors", "Masters", "Prof-school", "Doctorate"};
  static const std::array<double, 16> education_w{0.2, 0.5, 1, 2, 1.6, 2.9, 3.6, 1.3, 32, 22, 4.2, 3.3, 16.4, 5.4, 1.7, 1.3};
  static const std::array<const char*, 7> marital{"Married-civ-spouse", "Never-married", "Divorced", "Separated",
                                                   "Widowed", "Married-spouse-absent", "Married-AF-spouse"};
  static const std::array<double, 7> marital_w{46, 33, 13.6, 3.1, 3, 1.3, 0.1};
  static const std::array<const char*, 15> occupation{
      "Prof-specialty", "Craft-repair",    "Exec-managerial",   "Adm-clerical", "Sales",
      "Other-service",  "Machine-op-inspct", "Transport-moving", "Handlers-cleaners", "Farming-fishing",
      "Tech-support",   "Protective-serv", "Priv-house-serv",   "Armed-Forces", "?"};
  static const std::array<double, 15> occupation_w{12.7, 12.6, 12.5, 11.6, 11.2, 10.1, 6.1, 4.9, 4.2, 3, 2.9, 2, 0.5, 0.1, 5.7};
  static const std::array<const char*, 6> relationship{"Husband", "Not-in-family", "Own-child", "Unmarried", "Wife",
                                                        "Other-relative"};
  static const std::array<double, 6> relationship_w{40.5, 25.5, 15.6, 10.6, 4.8, 3};
  static const std::array<const char*, 5> race{"White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"};
  static const std::array<double, 5> race_w{85.4, 9.6, 3.2, 1, 0.8};
  static const std::array<const char*, 2> sex{"Male", "Female"};
  static const std::array<double, 2> sex_w{66.9, 33.1};
  static const std::array<const char*, 10> country{"United-States", "Mexico", "?", "Philippines", "Germany",
                                                    "Canada", "Puerto-Rico", "El-Salvador", "India", "Cuba"};
  static const std::array<double, 10> country_w{89.6, 2, 1.8, 0.6, 0.4, 0.4, 0.35, 0.33, 0.3, 0.3};

  tabprobe::Rng rng(seed);
  std::ostringstream out;
  out << "age,workclass,fnlwgt,education,education-num,marital-status,occupation,relationship,race,sex,"
         "capital-gain,capital-loss,hours-per-week,native-country,income\n";
  for (std::size_t r = 0; r < rows; ++r) {
    const long age = clamp_round(38.6 + 13.6 * gaussian(rng), 17, 90);
    const char* edu = pick(rng, education, education_w);
    long edu_num = 1;
    for (std::size_t i = 0; i < education.size(); ++i) {
      if (education[i] == edu) edu_num = static_cast<long>(i) + 1;
    }
    const long fnlwgt = clamp_round(std::exp(12.0 + 0.5 * gaussian(rng)), 12285, 1484705);
    const long gain = rng.unit() < 0.08 ? clamp_round(std::exp(8.5 + 1.0 * gaussian(rng)), 114, 99999) : 0;
    const long loss = rng.unit() < 0.05 ? clamp_round(1870 + 380 * gaussian(rng), 155, 4356) : 0;
    const long hours = clamp_round(10.0 + 0.75 * static_cast<double>(age) + 0.8 * static_cast<double>(edu_num) +
                                       8.0 * gaussian(rng),
                                   1, 99);
    const double score = 0.04 * static_cast<double>(age) + 0.3 * static_cast<double>(edu_num) + 0.03 * static_cast<double>(hours) +
                         (gain > 5000 ? 3.0 : 0.0) + gaussian(rng);
    out << age << ',' << pick(rng, workclass, workclass_w) << ',' << fnlwgt << ',' << edu << ',' << edu_num << ','
        << pick(rng, marital, marital_w) << ',' << pick(rng, occupation, occupation_w) << ','
        << pick(rng, relationship, relationship_w) << ',' << pick(rng, race, race_w) << ',' << pick(rng, sex, sex_w)
        << ',' << gain << ',' << loss << ',' << hours << ',' << pick(rng, country, country_w) << ','
        << (score > 7.5 ? ">50K" : "<=50K") << '\n';
  }
  return out.str();
}

tabprobe::Dataset adult_like(std::size_t rows, std::uint64_t seed, std::string id) {
  return tabprobe::parse_csv(adult_like_csv(rows, seed), {}, std::move(id));
}

std::string numeric_csv(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  tabprobe::Rng rng(seed);
  std::ostringstream out;
  for (std::size_t c = 0; c < cols; ++c) out << (c ? "," : "") << "x" << c;
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out << (c ? "," : "") << std::lround(1000.0 * gaussian(rng)) / 100.0;
    out << '\n';
  }
  return out.str();
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("tabprobe-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<double> exact_binomial_tails(std::uint64_t n, std::uint64_t num, std::uint64_t den) {
  // term(i) = C(n, i) num^i (den - num)^(n - i); tail(k) = sum_{i >= k} term(i) / den^n
  std::vector<cpp_int> terms(n + 1);
  cpp_int binom = 1;
  std::vector<cpp_int> num_pow(n + 1), rest_pow(n + 1);
  num_pow[0] = 1;
  rest_pow[0] = 1;
  for (std::uint64_t i = 1; i <= n; ++i) {
    num_pow[i] = num_pow[i - 1] * num;
    rest_pow[i] = rest_pow[i - 1] * (den - num);
  }
  for (std::uint64_t i = 0; i <= n; ++i) {
    terms[i] = binom * num_pow[i] * rest_pow[n - i];
    binom = binom * (n - i) / (i + 1);
  }
  cpp_int total = 1;
  for (std::uint64_t i = 0; i < n; ++i) total *= den;
  std::vector<double> tails(n + 1);
  cpp_int acc = 0;
  for (std::uint64_t k = n + 1; k-- > 0;) {
    acc += terms[k];
    tails[k] = ratio_to_double(acc, total);
  }
  return tails;
}

double exact_binomial_tail(std::uint64_t n, std::uint64_t k, std::uint64_t num, std::uint64_t den) {
  if (k == 0) return 1.0;
  // Sum only i >= k; powers built on the fly.
  cpp_int total = 1;
  for (std::uint64_t i = 0; i < n; ++i) total *= den;
  cpp_int binom = 1;  // C(n, i)
  for (std::uint64_t i = 0; i < k; ++i) binom = binom * (n - i) / (i + 1);
  cpp_int a = 1, b = 1;
  for (std::uint64_t i = 0; i < k; ++i) a *= num;
  for (std::uint64_t i = 0; i < n - k; ++i) b *= (den - num);
  cpp_int acc = 0;
  for (std::uint64_t i = k; i <= n; ++i) {
    acc += binom * a * b;
    if (i == n) break;
    binom = binom * (n - i) / (i + 1);
    a *= num;
    b /= (den - num);
  }
  return ratio_to_double(acc, total);
}

double two_pass_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("need two values");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

double shannon_entropy_bits(const std::map<std::string, double>& counts) {
  double total = 0.0;
  for (const auto& [k, c] : counts) total += c;
  double h = 0.0;
  for (const auto& [k, c] : counts) {
    if (c > 0) h -= (c / total) * std::log2(c / total);
  }
  return h;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: bad sizes");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> numeric_column(const tabprobe::Dataset& ds, std::size_t column) {
  std::vector<double> out;
  for (const auto& row : ds.rows) {
    if (row[column].is_numerical()) out.push_back(row[column].number());
  }
  return out;
}

double tv_distance(const tabprobe::Dataset& a, const tabprobe::Dataset& b, std::size_t column) {
  std::map<std::string, std::pair<double, double>> counts;
  for (const auto& row : a.rows) counts[row[column].is_missing() ? std::string("\x01missing") : row[column].text()].first += 1;
  for (const auto& row : b.rows) counts[row[column].is_missing() ? std::string("\x01missing") : row[column].text()].second += 1;
  double tv = 0.0;
  for (const auto& [k, c] : counts) {
    tv += std::abs(c.first / static_cast<double>(a.rows.size()) - c.second / static_cast<double>(b.rows.size()));
  }
  return tv / 2.0;
}

double binned_tv_distance(const tabprobe::Dataset& a, const tabprobe::Dataset& b, std::size_t column, std::size_t bins) {
  auto sorted = numeric_column(a, column);
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) throw std::invalid_argument("binned_tv_distance: no numeric values");
  std::vector<double> edges;
  for (std::size_t i = 1; i < bins; ++i) edges.push_back(sorted[i * sorted.size() / bins]);
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  auto bucket = [&](const tabprobe::CellValue& c) -> long {
    if (c.is_missing()) return -1;
    return std::upper_bound(edges.begin(), edges.end(), c.number()) - edges.begin();
  };
  std::map<long, std::pair<double, double>> counts;
  for (const auto& row : a.rows) counts[bucket(row[column])].first += 1;
  for (const auto& row : b.rows) counts[bucket(row[column])].second += 1;
  double tv = 0.0;
  for (const auto& [k, c] : counts) {
    tv += std::abs(c.first / static_cast<double>(a.rows.size()) - c.second / static_cast<double>(b.rows.size()));
  }
  return tv / 2.0;
}

double marginal_tv(const tabprobe::Dataset& a, const tabprobe::Dataset& b, std::size_t column) {
  return a.schema[column].kind == tabprobe::ColumnKind::Numerical ? binned_tv_distance(a, b, column)
                                                                 : tv_distance(a, b, column);
}

std::map<GroupKey, GroupTally> tally(const std::vector<tabprobe::TrialRecord>& trials) {
  std::map<GroupKey, GroupTally> out;
  for (const auto& t : trials) {
    auto& g = out[{t.dataset_id, std::string(tabprobe::to_string(t.variant)), std::string(tabprobe::to_string(t.task)),
                   t.model_name}];
    ++g.n;
    if (t.status == tabprobe::TrialStatus::Answered && t.answer_index && *t.answer_index == t.truth_index) ++g.correct;
  }
  return out;
}

std::string run_command(const std::string& command, int* exit_code) {
  std::string output;
  FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::array<char, 4096> buf{};
  while (const auto n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  if (exit_code) *exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return output;
}

}  // namespace fixtures
