#ifndef MED_ERRORS_HPP
#define MED_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace med {

// Bad input: malformed files, invalid datasets, inconsistent shapes.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure while evaluating an estimator.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A smoothing window stayed empty after all allowed bandwidth expansions.
class DegenerateWindow : public NumericError {
 public:
  DegenerateWindow(double t, const std::string& what)
      : NumericError(what), t_(t) {}
  double grid_point() const { return t_; }

 private:
  double t_;
};

// No subject carries enough observations for within-subject products.
class InsufficientPairs : public NumericError {
 public:
  explicit InsufficientPairs(const std::string& what) : NumericError(what) {}
};

// Asked to export curves from a report that retained none.
class NoCurves : public DataError {
 public:
  explicit NoCurves(const std::string& what) : DataError(what) {}
};

}  // namespace med

#endif
