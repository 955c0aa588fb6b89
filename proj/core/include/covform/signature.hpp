#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace covform {

using cplx = std::complex<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FactorKind {
  internal_vector,
  internal_covector,
  endomorphism,
  tangent,
  cotangent,
  spinor,
  cospinor,
};

struct Factor {
  FactorKind kind = FactorKind::internal_vector;
  int n = 1;  // internal dimension; ignored by tangent/cotangent (chart m) and spinors (4)

  int dim(int m) const;
  Factor dual() const;
  bool operator==(const Factor&) const = default;
};

enum class Rep { standard, complementary };

// Fiber factors plus form degree. `degree` is always the form degree; a
// complementary field of degree m-r stores r upper indices.
struct FiberSignature {
  std::vector<Factor> factors;
  int degree = 0;
  Rep rep = Rep::standard;

  int fiber_dim(int m) const;
  int slots(int m) const { return rep == Rep::standard ? degree : m - degree; }
  bool has_spinor() const;
  FiberSignature dual() const;
  FiberSignature with_degree(int d, Rep r) const;
  std::string describe() const;
  bool operator==(const FiberSignature&) const = default;

  static FiberSignature scalar(int degree = 0, Rep rep = Rep::standard);
  static FiberSignature internal(int n, int degree = 0, Rep rep = Rep::standard);
  static FiberSignature endo(int n, int degree = 0, Rep rep = Rep::standard);
};

Factor vec(int n);
Factor covec(int n);
Factor endo(int n);
Factor tangent();
Factor cotangent();
Factor spinor();
Factor cospinor();

// Sorted k-subsets of {0..m-1} in lexicographic order, stored as bitmasks.
struct IndexSet {
  int m = 0;
  int k = 0;
  std::vector<std::uint32_t> masks;
  std::vector<int> position;  // mask -> position, -1 when popcount != k

  int size() const { return static_cast<int>(masks.size()); }
  std::vector<int> indices(int pos) const;
};

const IndexSet& index_set(int m, int k);

// Sign of the permutation sorting `idx`; 0 on repeats.
int permutation_sign(const std::vector<int>& idx);

// Position and sign of an unsorted index tuple inside index_set(m, size).
// Returns sign 0 when the tuple has repeats.
struct SignedSlot {
  int pos = -1;
  int sign = 0;
};
SignedSlot locate(int m, const int* idx, int count);

int binomial(int n, int k);

}  // namespace covform
