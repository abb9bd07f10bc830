#pragma once

#include <boost/container/small_vector.hpp>

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace lgst {

/// An n-qubit Pauli operator i^phase * (sigma_0 (x) sigma_1 (x) ... ), sigma_j in {I,X,Y,Z}.
///
/// Qubit j is encoded by the bit pair (x_j, z_j): I=(0,0), X=(1,0), Y=(1,1), Z=(0,1).
/// The phase is relative to the Hermitian letters, so every Hermitian Pauli has phase
/// 0 or 2 (sign +1 or -1) and products like X*Z = -iY carry odd phases. Bits are packed
/// 64 qubits per word; strings of up to 64 qubits never allocate.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::size_t num_qubits);

  /// Parses "XIZY", "+XIZY", "-ZZ", "iX", "-iY". Qubit j is character j.
  static PauliString from_string(std::string_view text);
  static PauliString single(std::size_t num_qubits, std::size_t qubit, char op);

  std::size_t num_qubits() const noexcept { return n_; }
  std::size_t num_words() const noexcept { return words_.size() / 2; }

  char op(std::size_t qubit) const;
  void set_op(std::size_t qubit, char op);
  bool x_bit(std::size_t qubit) const noexcept {
    return (words_[qubit >> 6] >> (qubit & 63)) & 1u;
  }
  bool z_bit(std::size_t qubit) const noexcept {
    return (words_[num_words() + (qubit >> 6)] >> (qubit & 63)) & 1u;
  }

  std::span<const std::uint64_t> xs() const noexcept { return {words_.data(), num_words()}; }
  std::span<const std::uint64_t> zs() const noexcept {
    return {words_.data() + num_words(), num_words()};
  }
  std::span<std::uint64_t> xs() noexcept { return {words_.data(), num_words()}; }
  std::span<std::uint64_t> zs() noexcept { return {words_.data() + num_words(), num_words()}; }

  int phase() const noexcept { return phase_; }
  void set_phase(int exponent) noexcept { phase_ = static_cast<std::uint8_t>(exponent & 3); }
  bool is_hermitian() const noexcept { return (phase_ & 1) == 0; }
  /// +1 or -1; throws PhaseError for odd phases.
  int sign() const;

  std::size_t weight() const noexcept;
  bool is_identity() const noexcept;  // ignores the phase
  bool is_z_type() const noexcept;    // only I and Z letters
  bool has_x_part() const noexcept { return !is_z_type(); }

  /// Same letters with phase 0.
  PauliString unsigned_copy() const {
    PauliString out = *this;
    out.phase_ = 0;
    return out;
  }

  std::string str() const;    // with sign prefix, e.g. "+XIZY" or "-iXX"
  std::string label() const;  // letters only

  /// Right multiplication: *this = *this * rhs, phase-exact.
  PauliString& operator*=(const PauliString& rhs);
  PauliString operator-() const {
    PauliString out = *this;
    out.phase_ = static_cast<std::uint8_t>((phase_ + 2) & 3);
    return out;
  }
  /// Multiplies by i^k.
  PauliString& mul_i(int k) noexcept {
    phase_ = static_cast<std::uint8_t>((phase_ + k) & 3);
    return *this;
  }

  bool operator==(const PauliString& other) const noexcept {
    return n_ == other.n_ && phase_ == other.phase_ && words_ == other.words_;
  }
  bool same_letters(const PauliString& other) const noexcept {
    return n_ == other.n_ && words_ == other.words_;
  }
  /// Canonical order: letters lexicographic over qubits 0..n-1 with I<X<Y<Z, then phase.
  std::strong_ordering operator<=>(const PauliString& other) const;

  std::size_t hash() const noexcept;

 private:
  std::size_t n_ = 0;
  std::uint8_t phase_ = 0;
  boost::container::small_vector<std::uint64_t, 2> words_;  // x words then z words
};

PauliString operator*(const PauliString& a, const PauliString& b);

/// a * b with exact phase. Throws DimensionError on size mismatch.
PauliString pauli_mul(const PauliString& a, const PauliString& b);

/// True iff the symplectic inner product of a and b is 0 mod 2.
bool commutes(const PauliString& a, const PauliString& b);

/// Unchecked symplectic inner product parity (1 = anticommute); sizes must match.
inline bool anticommute_unchecked(const PauliString& a, const PauliString& b) noexcept {
  const auto ax = a.xs(), az = a.zs(), bx = b.xs(), bz = b.zs();
  std::uint64_t acc = 0;
  for (std::size_t w = 0; w < ax.size(); ++w) acc ^= (ax[w] & bz[w]) ^ (az[w] & bx[w]);
  return std::popcount(acc) & 1;
}

/// Phase exponent of a * b without forming the product; sizes must match.
inline int product_phase_unchecked(const PauliString& a, const PauliString& b) noexcept {
  const auto ax = a.xs(), az = a.zs(), bx = b.xs(), bz = b.zs();
  int acc = a.phase() + b.phase();
  for (std::size_t w = 0; w < ax.size(); ++w) {
    const std::uint64_t X1 = ax[w] & ~az[w], Y1 = ax[w] & az[w], Z1 = ~ax[w] & az[w];
    const std::uint64_t X2 = bx[w] & ~bz[w], Y2 = bx[w] & bz[w], Z2 = ~bx[w] & bz[w];
    const std::uint64_t pos = (X1 & Y2) | (Y1 & Z2) | (Z1 & X2);
    const std::uint64_t neg = (Y1 & X2) | (Z1 & Y2) | (X1 & Z2);
    acc += std::popcount(pos) - std::popcount(neg);
  }
  return acc & 3;
}

/// True iff a and b have the same X part, i.e. a * b is Z-type.
inline bool same_x_unchecked(const PauliString& a, const PauliString& b) noexcept {
  const auto ax = a.xs(), bx = b.xs();
  for (std::size_t w = 0; w < ax.size(); ++w) {
    if (ax[w] != bx[w]) return false;
  }
  return true;
}

struct PauliHash {
  std::size_t operator()(const PauliString& p) const noexcept { return p.hash(); }
};

/// Hashes only the letters, so +P and -P collide.
struct PauliLetterHash {
  std::size_t operator()(const PauliString& p) const noexcept { return p.unsigned_copy().hash(); }
};

}  // namespace lgst
