#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace slam {

// A K-dimensional binary attribute profile. Bits are packed so that the first
// attribute occupies the most significant position of the K-bit word; value()
// is then the canonical integer used for ordering and deduplication.
class AttributePattern {
 public:
  AttributePattern(int k, std::uint64_t bits) : k_(k), bits_(bits) {
    if (k < 1 || k > 64)
      throw std::invalid_argument("AttributePattern: K must be in [1,64]");
    if (k < 64 && (bits >> k) != 0)
      throw std::invalid_argument("AttributePattern: bits exceed K");
  }

  static AttributePattern zeros(int k) { return AttributePattern(k, 0); }
  static AttributePattern ones(int k) {
    return AttributePattern(k, k == 64 ? ~0ULL : ((1ULL << k) - 1));
  }

  static AttributePattern from_string(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("pattern string is empty");
    std::uint64_t bits = 0;
    for (char c : s) {
      if (c != '0' && c != '1')
        throw std::invalid_argument("pattern string has non-binary character");
      bits = (bits << 1) | static_cast<std::uint64_t>(c - '0');
    }
    return AttributePattern(static_cast<int>(s.size()), bits);
  }

  int K() const { return k_; }
  std::uint64_t value() const { return bits_; }

  // Attribute index is 0-based: get(0) is alpha_1.
  bool get(int k) const { return (bits_ >> (k_ - 1 - k)) & 1ULL; }

  AttributePattern with(int k, bool v) const {
    std::uint64_t mask = 1ULL << (k_ - 1 - k);
    return AttributePattern(k_, v ? (bits_ | mask) : (bits_ & ~mask));
  }

  int count() const { return __builtin_popcountll(bits_); }

  // Entrywise alpha_k >= q_k.
  bool dominates(const AttributePattern& q) const {
    require_same_k(q);
    return (bits_ & q.bits_) == q.bits_;
  }

  // Coordinatewise max.
  AttributePattern join(const AttributePattern& o) const {
    require_same_k(o);
    return AttributePattern(k_, bits_ | o.bits_);
  }

  std::string to_string() const {
    std::string s(static_cast<std::size_t>(k_), '0');
    for (int k = 0; k < k_; ++k)
      if (get(k)) s[static_cast<std::size_t>(k)] = '1';
    return s;
  }

  friend bool operator==(const AttributePattern& a, const AttributePattern& b) {
    return a.k_ == b.k_ && a.bits_ == b.bits_;
  }
  friend bool operator<(const AttributePattern& a, const AttributePattern& b) {
    if (a.k_ != b.k_) return a.k_ < b.k_;
    return a.bits_ < b.bits_;
  }

 private:
  void require_same_k(const AttributePattern& o) const {
    if (k_ != o.k_)
      throw std::invalid_argument("pattern dimension mismatch");
  }

  int k_;
  std::uint64_t bits_;
};

inline bool dominates(const AttributePattern& alpha, const AttributePattern& q) {
  return alpha.dominates(q);
}

// Ordered, duplicate-free collection of patterns sharing one K.
class PatternSet {
 public:
  explicit PatternSet(int k) : k_(k) {
    if (k < 1 || k > 64)
      throw std::invalid_argument("PatternSet: K must be in [1,64]");
  }

  PatternSet(int k, std::vector<AttributePattern> members) : PatternSet(k) {
    for (const auto& m : members) add(m);
  }

  // All 2^K patterns in canonical order. Guarded: intended for K <= ~20.
  static PatternSet full(int k) {
    if (k > 24)
      throw std::invalid_argument("PatternSet::full: K too large to enumerate");
    PatternSet s(k);
    s.members_.reserve(1ULL << k);
    for (std::uint64_t v = 0; v < (1ULL << k); ++v)
      s.add(AttributePattern(k, v));
    return s;
  }

  void add(const AttributePattern& p) {
    if (p.K() != k_)
      throw std::invalid_argument("PatternSet: member dimension mismatch");
    if (index_.count(p.value()))
      throw std::invalid_argument("PatternSet: duplicate member " + p.to_string());
    index_[p.value()] = members_.size();
    members_.push_back(p);
  }

  // Insert if absent; reports whether insertion happened.
  bool add_unique(const AttributePattern& p) {
    if (p.K() != k_)
      throw std::invalid_argument("PatternSet: member dimension mismatch");
    if (index_.count(p.value())) return false;
    index_[p.value()] = members_.size();
    members_.push_back(p);
    return true;
  }

  int K() const { return k_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const AttributePattern& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<AttributePattern>& members() const { return members_; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  bool contains(const AttributePattern& p) const {
    return p.K() == k_ && index_.count(p.value()) != 0;
  }

  std::optional<std::size_t> index_of(const AttributePattern& p) const {
    auto it = index_.find(p.value());
    if (p.K() != k_ || it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Emits members in canonical (integer-value) order.
  PatternSet sorted() const {
    auto ms = members_;
    std::sort(ms.begin(), ms.end());
    return PatternSet(k_, std::move(ms));
  }

  PatternSet set_difference(const PatternSet& other) const {
    PatternSet out(k_);
    for (const auto& m : members_)
      if (!other.contains(m)) out.add(m);
    return out;
  }

  PatternSet set_union(const PatternSet& other) const {
    PatternSet out = *this;
    for (const auto& m : other.members_) out.add_unique(m);
    return out;
  }

  std::size_t intersection_size(const PatternSet& other) const {
    std::size_t n = 0;
    for (const auto& m : members_)
      if (other.contains(m)) ++n;
    return n;
  }

 private:
  int k_;
  std::vector<AttributePattern> members_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

// J x K binary design matrix; rows are item requirement vectors.
class QMatrix {
 public:
  QMatrix(int j, int k, std::vector<std::uint8_t> entries)
      : j_(j), k_(k), entries_(std::move(entries)) {
    if (j < 1 || k < 1) throw std::invalid_argument("QMatrix: J,K must be >= 1");
    if (entries_.size() != static_cast<std::size_t>(j) * k)
      throw std::invalid_argument("QMatrix: entry count mismatch");
    for (auto e : entries_)
      if (e > 1) throw std::invalid_argument("QMatrix: entries must be 0/1");
  }

  static QMatrix from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty()) throw std::invalid_argument("QMatrix: no rows");
    int k = static_cast<int>(rows[0].size());
    std::vector<std::uint8_t> e;
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != k)
        throw std::invalid_argument("QMatrix: ragged rows");
      for (int v : r) e.push_back(static_cast<std::uint8_t>(v));
    }
    return QMatrix(static_cast<int>(rows.size()), k, std::move(e));
  }

  int J() const { return j_; }
  int K() const { return k_; }
  std::uint8_t operator()(int j, int k) const {
    return entries_[static_cast<std::size_t>(j) * k_ + k];
  }

  AttributePattern row(int j) const {
    if (j < 0 || j >= j_) throw std::out_of_range("QMatrix: item index out of range");
    std::uint64_t bits = 0;
    for (int k = 0; k < k_; ++k) bits = (bits << 1) | (*this)(j, k);
    return AttributePattern(k_, bits);
  }

  // Items whose requirement row is all zero (they constrain nothing).
  std::vector<int> zero_rows() const {
    std::vector<int> out;
    for (int j = 0; j < j_; ++j)
      if (row(j).value() == 0) out.push_back(j);
    return out;
  }

  // Attributes required by item j (0-based indices), the set K_j.
  std::vector<int> required_attributes(int j) const {
    std::vector<int> out;
    for (int k = 0; k < k_; ++k)
      if ((*this)(j, k)) out.push_back(k);
    return out;
  }

 private:
  int j_;
  int k_;
  std::vector<std::uint8_t> entries_;
};

// J x |A| matrix with Gamma_{j,alpha} = I(alpha dominates q_j); column order
// follows the generating PatternSet.
class GammaMatrix {
 public:
  GammaMatrix(int j, PatternSet labels, std::vector<std::uint8_t> entries)
      : j_(j), labels_(std::move(labels)), entries_(std::move(entries)) {
    if (entries_.size() != static_cast<std::size_t>(j_) * labels_.size())
      throw std::invalid_argument("GammaMatrix: entry count mismatch");
  }

  int J() const { return j_; }
  std::size_t L() const { return labels_.size(); }
  const PatternSet& labels() const { return labels_; }

  std::uint8_t operator()(int j, std::size_t l) const {
    return entries_[static_cast<std::size_t>(j) * labels_.size() + l];
  }

  std::size_t column_index(const AttributePattern& a) const {
    auto idx = labels_.index_of(a);
    if (!idx) throw std::invalid_argument("pattern is not a column label: " + a.to_string());
    return *idx;
  }

  bool columns_equal(std::size_t l1, std::size_t l2) const {
    for (int j = 0; j < j_; ++j)
      if ((*this)(j, l1) != (*this)(j, l2)) return false;
    return true;
  }

 private:
  int j_;
  PatternSet labels_;
  std::vector<std::uint8_t> entries_;
};

inline GammaMatrix build_gamma(const QMatrix& q, const PatternSet& a) {
  if (q.K() != a.K())
    throw std::invalid_argument("build_gamma: Q and pattern set dimension mismatch");
  std::vector<std::uint8_t> e;
  e.reserve(static_cast<std::size_t>(q.J()) * a.size());
  for (int j = 0; j < q.J(); ++j) {
    const auto qj = q.row(j);
    for (const auto& alpha : a) e.push_back(alpha.dominates(qj) ? 1 : 0);
  }
  return GammaMatrix(q.J(), a, std::move(e));
}

// Subset {alpha in A : alpha dominates q_j}, the constraint set C_j.
inline PatternSet constraint_set(const QMatrix& q, int j, const PatternSet& a) {
  if (j < 0 || j >= q.J()) throw std::out_of_range("constraint_set: item index out of range");
  if (q.K() != a.K())
    throw std::invalid_argument("constraint_set: dimension mismatch");
  const auto qj = q.row(j);
  PatternSet out(a.K());
  for (const auto& alpha : a)
    if (alpha.dominates(qj)) out.add(alpha);
  return out;
}

// alpha1 >=_S alpha2 under Gamma: Gamma_{j,a1} >= Gamma_{j,a2} for all j in S.
inline bool partial_order_holds(const GammaMatrix& g, const std::vector<int>& s,
                                const AttributePattern& a1,
                                const AttributePattern& a2) {
  const std::size_t l1 = g.column_index(a1);
  const std::size_t l2 = g.column_index(a2);
  for (int j : s) {
    if (j < 0 || j >= g.J()) throw std::out_of_range("partial_order_holds: item index");
    if (g(j, l1) < g(j, l2)) return false;
  }
  return true;
}

namespace detail {

inline bool geq_over(const GammaMatrix& g, const std::vector<int>& s,
                     std::size_t l1, std::size_t l2) {
  for (int j : s)
    if (g(j, l1) < g(j, l2)) return false;
  return true;
}

}  // namespace detail

// True iff >=_{S1} and >=_{S2} agree on every ordered pattern pair.
inline bool orders_equal(const GammaMatrix& g, const std::vector<int>& s1,
                         const std::vector<int>& s2) {
  for (int j : s1)
    if (j < 0 || j >= g.J()) throw std::out_of_range("orders_equal: item index");
  for (int j : s2)
    if (j < 0 || j >= g.J()) throw std::out_of_range("orders_equal: item index");
  const std::size_t l = g.L();
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b)
      if (detail::geq_over(g, s1, a, b) != detail::geq_over(g, s2, a, b))
        return false;
  return true;
}

}  // namespace slam
