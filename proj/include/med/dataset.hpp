#ifndef MED_DATASET_HPP
#define MED_DATASET_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace med {

struct ObservationPoint {
  double time = 0.0;   // in [0,1] for a valid dataset
  double value = 0.0;
};

// One subject's sparse observation schedule, kept in file order.
struct SubjectRecord {
  std::string id;
  std::vector<ObservationPoint> obs;
};

// Two independent samples of sparsely observed curves. Subjects are whole
// units: permutations and augmentation move or edit entire records.
struct TwoSampleDataset {
  std::vector<SubjectRecord> x;
  std::vector<SubjectRecord> y;

  std::size_t n() const { return x.size(); }
  std::size_t m() const { return y.size(); }
  std::size_t total_points() const;
};

struct Violation {
  std::string subject_id;  // empty for dataset-level rules
  std::string message;
};

// Long-format CSV with header "subject_id,group,time,value".
// Group labels are case-insensitive x/y. Rows may appear in any order;
// subject and observation order is preserved as first seen.
// Throws DataError with a line number for malformed rows, unknown group
// labels, non-finite numbers, times outside [0,1], or an empty group.
TwoSampleDataset parse_long_csv(std::string_view text);

// Same format but with no restriction on the time domain; callers are
// expected to follow up with rescale_time.
TwoSampleDataset parse_long_csv_raw_times(std::string_view text);

// Canonical long CSV: x subjects then y subjects, observations in stored
// order, doubles printed in shortest round-trip form. parse_long_csv of the
// output reproduces the dataset exactly.
std::string serialize_long_csv(const TwoSampleDataset& ds);

// Affine map of every time from [lo,hi] onto [0,1]. Requires lo < hi and all
// times within [lo,hi].
TwoSampleDataset rescale_time(TwoSampleDataset ds, double lo, double hi);

// Structural rule check; empty result means the dataset is usable.
// Rules: both groups need >= 2 subjects, every subject >= 1 observation,
// times finite in [0,1], values finite, subject ids unique across the
// whole dataset.
std::vector<Violation> validate_dataset(const TwoSampleDataset& ds);

// Throws DataError listing every violation.
void require_valid(const TwoSampleDataset& ds);

// FNV-1a hash of the canonical serialization, as fixed-width hex.
std::string dataset_digest(const TwoSampleDataset& ds);

}  // namespace med

#endif
