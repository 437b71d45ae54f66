#include "med/permutation.hpp"

#include <string>
#include <utility>

#include "med/errors.hpp"
#include "med/parallel.hpp"
#include "med/rng.hpp"

namespace med {

namespace {
constexpr std::uint64_t kPermutationTag = 0x7065726dull;  // stream label
}

void TestConfig::validate() const {
  smoother.validate();
  if (permutations < 2) throw DataError("permutation budget must be at least 2");
  if (!(alpha > 0.0) || !(alpha <= 1.0)) throw DataError("alpha must lie in (0,1]");
}

TwoSampleDataset apply_permutation(const TwoSampleDataset& ds,
                                   const std::vector<std::size_t>& perm) {
  const std::size_t n = ds.x.size(), m = ds.y.size();
  const std::size_t total = n + m;
  if (perm.size() != total) throw DataError("permutation size must equal n + m");
  std::vector<char> used(total, 0);
  for (std::size_t v : perm) {
    if (v >= total) throw DataError("permutation entry out of range");
    if (used[v]) throw DataError("permutation repeats an entry");
    used[v] = 1;
  }
  auto subject_at = [&](std::size_t pos) -> const SubjectRecord& {
    return pos < n ? ds.x[pos] : ds.y[pos - n];
  };
  TwoSampleDataset out;
  out.x.reserve(n);
  out.y.reserve(m);
  for (std::size_t k = 0; k < total; ++k) {
    (k < n ? out.x : out.y).push_back(subject_at(perm[k]));
  }
  return out;
}

double p_value_from_counts(std::size_t count_ge, int total) {
  return (1.0 + static_cast<double>(count_ge)) / static_cast<double>(total);
}

TestResult permutation_test(const TwoSampleDataset& ds, const TestConfig& config,
                            const StatisticFn& statistic) {
  config.validate();
  TestResult result;
  result.seed = config.seed;
  result.statistic = statistic(ds);

  const std::size_t total = ds.x.size() + ds.y.size();
  const std::size_t replicates = static_cast<std::size_t>(config.permutations - 1);
  std::vector<double> permuted(replicates);
  parallel_for(replicates, config.threads, [&](std::size_t r) {
    const std::size_t l = r + 1;  // replicate labels run 1..S-1
    Rng rng(derive_seed(config.seed, kPermutationTag, l));
    const auto perm = random_permutation(total, rng);
    try {
      permuted[r] = statistic(apply_permutation(ds, perm));
    } catch (const std::exception& e) {
      throw NumericError("permutation replicate " + std::to_string(l) + ": " + e.what());
    }
  });

  std::size_t count_ge = 0;
  for (double v : permuted)
    if (v >= result.statistic) ++count_ge;
  result.p_value = p_value_from_counts(count_ge, config.permutations);
  result.reject = result.p_value <= config.alpha;
  if (config.keep_permuted) result.permuted_statistics = std::move(permuted);
  return result;
}

}  // namespace med
