#include "covform/signature.hpp"

#include <array>
#include <bit>
#include <memory>

namespace covform {

int Factor::dim(int m) const {
  switch (kind) {
    case FactorKind::internal_vector:
    case FactorKind::internal_covector:
      return n;
    case FactorKind::endomorphism:
      return n * n;
    case FactorKind::tangent:
    case FactorKind::cotangent:
      return m;
    case FactorKind::spinor:
    case FactorKind::cospinor:
      return 4;
  }
  return 0;
}

Factor Factor::dual() const {
  Factor f = *this;
  switch (kind) {
    case FactorKind::internal_vector: f.kind = FactorKind::internal_covector; break;
    case FactorKind::internal_covector: f.kind = FactorKind::internal_vector; break;
    case FactorKind::endomorphism: break;  // End E* pairs with End E through the trace
    case FactorKind::tangent: f.kind = FactorKind::cotangent; break;
    case FactorKind::cotangent: f.kind = FactorKind::tangent; break;
    case FactorKind::spinor: f.kind = FactorKind::cospinor; break;
    case FactorKind::cospinor: f.kind = FactorKind::spinor; break;
  }
  return f;
}

int FiberSignature::fiber_dim(int m) const {
  int d = 1;
  for (const auto& f : factors) d *= f.dim(m);
  return d;
}

bool FiberSignature::has_spinor() const {
  for (const auto& f : factors)
    if (f.kind == FactorKind::spinor || f.kind == FactorKind::cospinor) return true;
  return false;
}

FiberSignature FiberSignature::dual() const {
  FiberSignature s = *this;
  for (auto& f : s.factors) f = f.dual();
  return s;
}

FiberSignature FiberSignature::with_degree(int d, Rep r) const {
  FiberSignature s = *this;
  s.degree = d;
  s.rep = r;
  return s;
}

std::string FiberSignature::describe() const {
  std::string out = rep == Rep::standard ? "std" : "comp";
  out += ":" + std::to_string(degree) + ":[";
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) out += ",";
    const auto& f = factors[i];
    switch (f.kind) {
      case FactorKind::internal_vector: out += "E" + std::to_string(f.n); break;
      case FactorKind::internal_covector: out += "E*" + std::to_string(f.n); break;
      case FactorKind::endomorphism: out += "End" + std::to_string(f.n); break;
      case FactorKind::tangent: out += "TM"; break;
      case FactorKind::cotangent: out += "T*M"; break;
      case FactorKind::spinor: out += "W"; break;
      case FactorKind::cospinor: out += "W*"; break;
    }
  }
  return out + "]";
}

FiberSignature FiberSignature::scalar(int degree, Rep rep) { return {{}, degree, rep}; }
FiberSignature FiberSignature::internal(int n, int degree, Rep rep) { return {{vec(n)}, degree, rep}; }
FiberSignature FiberSignature::endo(int n, int degree, Rep rep) { return {{covform::endo(n)}, degree, rep}; }

Factor vec(int n) { return {FactorKind::internal_vector, n}; }
Factor covec(int n) { return {FactorKind::internal_covector, n}; }
Factor endo(int n) { return {FactorKind::endomorphism, n}; }
Factor tangent() { return {FactorKind::tangent, 0}; }
Factor cotangent() { return {FactorKind::cotangent, 0}; }
Factor spinor() { return {FactorKind::spinor, 4}; }
Factor cospinor() { return {FactorKind::cospinor, 4}; }

std::vector<int> IndexSet::indices(int pos) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  const std::uint32_t mask = masks[static_cast<std::size_t>(pos)];
  for (int a = 0; a < m; ++a)
    if (mask & (1u << a)) out.push_back(a);
  return out;
}

namespace {

std::unique_ptr<IndexSet> build_index_set(int m, int k) {
  auto s = std::make_unique<IndexSet>();
  s->m = m;
  s->k = k;
  s->position.assign(std::size_t{1} << m, -1);
  // lexicographic combinations
  std::vector<int> c(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) c[static_cast<std::size_t>(i)] = i;
  while (true) {
    std::uint32_t mask = 0;
    for (int v : c) mask |= 1u << v;
    s->position[mask] = static_cast<int>(s->masks.size());
    s->masks.push_back(mask);
    int i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) break;
    ++c[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
  return s;
}

}  // namespace

const IndexSet& index_set(int m, int k) {
  if (m < 1 || m > 8 || k < 0 || k > m) throw Error("index_set: need 1 <= m <= 8 and 0 <= k <= m");
  static const auto table = [] {
    std::array<std::array<std::unique_ptr<IndexSet>, 9>, 9> t;
    for (int mm = 1; mm <= 8; ++mm)
      for (int kk = 0; kk <= mm; ++kk) t[static_cast<std::size_t>(mm)][static_cast<std::size_t>(kk)] = build_index_set(mm, kk);
    return t;
  }();
  return *table[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
}

int permutation_sign(const std::vector<int>& idx) {
  int sign = 1;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      if (idx[i] == idx[j]) return 0;
      if (idx[i] > idx[j]) sign = -sign;
    }
  return sign;
}

SignedSlot locate(int m, const int* idx, int count) {
  std::uint32_t mask = 0;
  int sign = 1;
  for (int i = 0; i < count; ++i) {
    const std::uint32_t bit = 1u << idx[i];
    if (mask & bit) return {};
    // inversions contributed by idx[i] against earlier, larger entries
    if (std::popcount(mask >> idx[i]) & 1) sign = -sign;
    mask |= bit;
  }
  return {index_set(m, count).position[mask], sign};
}

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace covform
