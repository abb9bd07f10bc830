#include "lgst/pauli.hpp"

#include <bit>

#include "lgst/errors.hpp"

namespace lgst {
namespace {

std::size_t words_for(std::size_t n) { return (n + 63) / 64; }

// Ordering code for the letter at a qubit: I<X<Y<Z.
int letter_code(bool x, bool z) { return x ? (z ? 2 : 1) : (z ? 3 : 0); }

void require_same_size(const PauliString& a, const PauliString& b, const char* what) {
  if (a.num_qubits() != b.num_qubits()) {
    throw DimensionError(std::string(what) + ": qubit counts differ (" +
                         std::to_string(a.num_qubits()) + " vs " +
                         std::to_string(b.num_qubits()) + ")");
  }
}

}  // namespace

PauliString::PauliString(std::size_t num_qubits)
    : n_(num_qubits), words_(2 * words_for(num_qubits), 0) {}

PauliString PauliString::from_string(std::string_view text) {
  int phase = 0;
  if (!text.empty() && (text.front() == '+' || text.front() == '-')) {
    if (text.front() == '-') phase = 2;
    text.remove_prefix(1);
  }
  if (!text.empty() && text.front() == 'i') {
    phase += 1;
    text.remove_prefix(1);
  }
  PauliString out(text.size());
  for (std::size_t q = 0; q < text.size(); ++q) {
    const char c = text[q];
    if (c == '_') {
      continue;
    }
    out.set_op(q, c);
  }
  out.set_phase(phase);
  return out;
}

PauliString PauliString::single(std::size_t num_qubits, std::size_t qubit, char op) {
  PauliString out(num_qubits);
  out.set_op(qubit, op);
  return out;
}

char PauliString::op(std::size_t qubit) const {
  if (qubit >= n_) throw DimensionError("qubit index out of range");
  static constexpr char kLetters[4] = {'I', 'X', 'Y', 'Z'};
  return kLetters[letter_code(x_bit(qubit), z_bit(qubit))];
}

void PauliString::set_op(std::size_t qubit, char op) {
  if (qubit >= n_) throw DimensionError("qubit index out of range");
  bool x = false, z = false;
  switch (op) {
    case 'I': break;
    case 'X': x = true; break;
    case 'Y': x = z = true; break;
    case 'Z': z = true; break;
    default: throw FormatError(std::string("invalid Pauli letter '") + op + "'");
  }
  const std::uint64_t mask = std::uint64_t{1} << (qubit & 63);
  auto& xw = words_[qubit >> 6];
  auto& zw = words_[num_words() + (qubit >> 6)];
  xw = x ? (xw | mask) : (xw & ~mask);
  zw = z ? (zw | mask) : (zw & ~mask);
}

int PauliString::sign() const {
  if (!is_hermitian()) throw PhaseError("Pauli " + str() + " is not Hermitian");
  return phase_ == 0 ? 1 : -1;
}

std::size_t PauliString::weight() const noexcept {
  std::size_t w = 0;
  const auto x = xs(), z = zs();
  for (std::size_t i = 0; i < x.size(); ++i) w += std::popcount(x[i] | z[i]);
  return w;
}

bool PauliString::is_identity() const noexcept {
  for (auto w : words_) {
    if (w) return false;
  }
  return true;
}

bool PauliString::is_z_type() const noexcept {
  for (auto w : xs()) {
    if (w) return false;
  }
  return true;
}

std::string PauliString::label() const {
  std::string s(n_, 'I');
  for (std::size_t q = 0; q < n_; ++q) s[q] = op(q);
  return s;
}

std::string PauliString::str() const {
  static constexpr const char* kPrefix[4] = {"+", "+i", "-", "-i"};
  return kPrefix[phase_] + label();
}

PauliString& PauliString::operator*=(const PauliString& rhs) {
  require_same_size(*this, rhs, "pauli_mul");
  const std::size_t nw = num_words();
  int acc = phase_ + rhs.phase_;
  for (std::size_t w = 0; w < nw; ++w) {
    const std::uint64_t x1 = words_[w], z1 = words_[nw + w];
    const std::uint64_t x2 = rhs.words_[w], z2 = rhs.words_[nw + w];
    const std::uint64_t X1 = x1 & ~z1, Y1 = x1 & z1, Z1 = ~x1 & z1;
    const std::uint64_t X2 = x2 & ~z2, Y2 = x2 & z2, Z2 = ~x2 & z2;
    // Cyclic pairs (XY, YZ, ZX) contribute +i, anti-cyclic ones -i.
    const std::uint64_t pos = (X1 & Y2) | (Y1 & Z2) | (Z1 & X2);
    const std::uint64_t neg = (Y1 & X2) | (Z1 & Y2) | (X1 & Z2);
    acc += std::popcount(pos) - std::popcount(neg);
    words_[w] = x1 ^ x2;
    words_[nw + w] = z1 ^ z2;
  }
  phase_ = static_cast<std::uint8_t>(acc & 3);
  return *this;
}

std::strong_ordering PauliString::operator<=>(const PauliString& other) const {
  if (auto c = n_ <=> other.n_; c != 0) return c;
  const std::size_t nw = num_words();
  for (std::size_t w = 0; w < nw; ++w) {
    const std::uint64_t diff =
        (words_[w] ^ other.words_[w]) | (words_[nw + w] ^ other.words_[nw + w]);
    if (diff) {
      const std::size_t q = 64 * w + static_cast<std::size_t>(std::countr_zero(diff));
      return letter_code(x_bit(q), z_bit(q)) <=> letter_code(other.x_bit(q), other.z_bit(q));
    }
  }
  return phase_ <=> other.phase_;
}

std::size_t PauliString::hash() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ n_ ^ (std::uint64_t{phase_} << 56);
  for (auto w : words_) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

PauliString operator*(const PauliString& a, const PauliString& b) {
  PauliString out = a;
  out *= b;
  return out;
}

PauliString pauli_mul(const PauliString& a, const PauliString& b) { return a * b; }

bool commutes(const PauliString& a, const PauliString& b) {
  require_same_size(a, b, "commutes");
  return !anticommute_unchecked(a, b);
}

}  // namespace lgst
