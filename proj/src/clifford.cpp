#include "lgst/clifford.hpp"

#include <array>
#include <bit>

#include "lgst/errors.hpp"

namespace lgst {
namespace {

struct LocalGate {
  std::string_view name;
  int arity;
  // Images of X_0, Z_0 (and X_1, Z_1 for two-qubit gates) as signed local strings.
  std::array<std::string_view, 4> images;
};

constexpr std::array<LocalGate, 15> kGates{{
    {"idle", 1, {"+X", "+Z"}},
    {"x", 1, {"+X", "-Z"}},
    {"y", 1, {"-X", "-Z"}},
    {"z", 1, {"-X", "+Z"}},
    {"h", 1, {"+Z", "+X"}},
    {"s", 1, {"+Y", "+Z"}},
    {"sdg", 1, {"-Y", "+Z"}},
    {"x90", 1, {"+X", "-Y"}},
    {"y90", 1, {"-Z", "+X"}},
    {"z90", 1, {"+Y", "+Z"}},
    {"cz", 2, {"+XZ", "+ZI", "+ZX", "+IZ"}},
    {"cx", 2, {"+XX", "+ZI", "+IX", "+ZZ"}},
    {"prep", 0, {}},
    {"meas", 0, {}},
    {"", -1, {}},
}};

const LocalGate* find_gate(std::string_view name) {
  for (const auto& g : kGates) {
    if (g.arity >= 0 && g.name == name) return &g;
  }
  return nullptr;
}

// Embeds a local signed string (letters for targets[0], targets[1], ...) into n qubits.
PauliString embed(std::string_view local, std::size_t n, std::span<const std::size_t> targets) {
  const PauliString small = PauliString::from_string(local);
  PauliString out(n);
  for (std::size_t k = 0; k < targets.size(); ++k) out.set_op(targets[k], small.op(k));
  out.set_phase(small.phase());
  return out;
}

void require_size(const CliffordTableau& t, const PauliString& p) {
  if (t.num_qubits() != p.num_qubits()) {
    throw DimensionError("conjugate: tableau has " + std::to_string(t.num_qubits()) +
                         " qubits, Pauli has " + std::to_string(p.num_qubits()));
  }
}

}  // namespace

CliffordTableau::CliffordTableau(std::size_t num_qubits) {
  x_images_.reserve(num_qubits);
  z_images_.reserve(num_qubits);
  for (std::size_t q = 0; q < num_qubits; ++q) {
    x_images_.push_back(PauliString::single(num_qubits, q, 'X'));
    z_images_.push_back(PauliString::single(num_qubits, q, 'Z'));
  }
}

CliffordTableau CliffordTableau::from_images(std::vector<PauliString> x_images,
                                             std::vector<PauliString> z_images) {
  const std::size_t n = x_images.size();
  if (z_images.size() != n) throw DimensionError("tableau: X and Z image counts differ");
  for (std::size_t q = 0; q < n; ++q) {
    if (x_images[q].num_qubits() != n || z_images[q].num_qubits() != n) {
      throw DimensionError("tableau: image size does not match qubit count");
    }
    if (!x_images[q].is_hermitian() || !z_images[q].is_hermitian()) {
      throw PhaseError("tableau: images must be Hermitian");
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const bool xz = anticommute_unchecked(x_images[a], z_images[b]);
      if (xz != (a == b)) throw Error("tableau: images violate the symplectic condition");
      if (a < b && (anticommute_unchecked(x_images[a], x_images[b]) ||
                    anticommute_unchecked(z_images[a], z_images[b]))) {
        throw Error("tableau: images violate the symplectic condition");
      }
    }
  }
  return from_images_unchecked(std::move(x_images), std::move(z_images));
}

CliffordTableau CliffordTableau::from_images_unchecked(std::vector<PauliString> x_images,
                                                       std::vector<PauliString> z_images) {
  CliffordTableau t;
  t.x_images_ = std::move(x_images);
  t.z_images_ = std::move(z_images);
  return t;
}

CliffordTableau CliffordTableau::gate(std::string_view name, std::size_t num_qubits,
                                      std::span<const std::size_t> targets) {
  const LocalGate* g = find_gate(name);
  if (!g) throw ModelError("unknown Clifford gate '" + std::string(name) + "'");
  if (targets.size() != static_cast<std::size_t>(g->arity)) {
    throw DimensionError("gate '" + std::string(name) + "' expects " +
                         std::to_string(g->arity) + " targets");
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (targets[k] >= num_qubits) throw DimensionError("gate target out of range");
    for (std::size_t j = 0; j < k; ++j) {
      if (targets[j] == targets[k]) throw DimensionError("gate targets must be distinct");
    }
  }
  CliffordTableau t(num_qubits);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    t.x_images_[targets[k]] = embed(g->images[2 * k], num_qubits, targets);
    t.z_images_[targets[k]] = embed(g->images[2 * k + 1], num_qubits, targets);
  }
  return t;
}

PauliString CliffordTableau::conjugate(const PauliString& p) const {
  require_size(*this, p);
  const std::size_t n = num_qubits();
  // p = i^(phase + #Y) * prod_j X_j^x_j Z_j^z_j, with X before Z on each qubit.
  PauliString out(n);
  int phase = p.phase();
  const auto xs = p.xs(), zs = p.zs();
  for (std::size_t w = 0; w < xs.size(); ++w) {
    phase += std::popcount(xs[w] & zs[w]);
    std::uint64_t support = xs[w] | zs[w];
    while (support) {
      const int bit = std::countr_zero(support);
      support &= support - 1;
      const std::size_t q = 64 * w + static_cast<std::size_t>(bit);
      if ((xs[w] >> bit) & 1u) out *= x_images_[q];
      if ((zs[w] >> bit) & 1u) out *= z_images_[q];
    }
  }
  out.mul_i(phase);
  return out;
}

CliffordTableau CliffordTableau::inverse() const {
  const std::size_t n = num_qubits();
  // Preimage of G has x_k = <G, Z'_k> and z_k = <G, X'_k> (symplectic products with the
  // images); the sign is fixed by conjugating forward once.
  auto preimage = [&](const PauliString& g) {
    PauliString a(n);
    for (std::size_t k = 0; k < n; ++k) {
      const bool xk = anticommute_unchecked(g, z_images_[k]);
      const bool zk = anticommute_unchecked(g, x_images_[k]);
      if (xk || zk) a.set_op(k, xk ? (zk ? 'Y' : 'X') : 'Z');
    }
    if (conjugate(a).phase() != g.phase()) a = -a;
    return a;
  };
  CliffordTableau inv;
  inv.x_images_.reserve(n);
  inv.z_images_.reserve(n);
  for (std::size_t q = 0; q < n; ++q) {
    inv.x_images_.push_back(preimage(PauliString::single(n, q, 'X')));
    inv.z_images_.push_back(preimage(PauliString::single(n, q, 'Z')));
  }
  return inv;
}

bool CliffordTableau::is_identity() const { return *this == CliffordTableau(num_qubits()); }

CliffordTableau compose(const CliffordTableau& outer, const CliffordTableau& inner) {
  if (outer.num_qubits() != inner.num_qubits()) {
    throw DimensionError("compose: tableau sizes differ");
  }
  const std::size_t n = outer.num_qubits();
  std::vector<PauliString> xs, zs;
  xs.reserve(n);
  zs.reserve(n);
  for (std::size_t q = 0; q < n; ++q) {
    xs.push_back(outer.conjugate(inner.x_image(q)));
    zs.push_back(outer.conjugate(inner.z_image(q)));
  }
  return CliffordTableau::from_images_unchecked(std::move(xs), std::move(zs));
}

PauliString conjugate(const CliffordTableau& t, const PauliString& p) { return t.conjugate(p); }

int gate_arity(std::string_view name) {
  const LocalGate* g = find_gate(name);
  return g ? g->arity : 0;
}

bool is_known_gate(std::string_view name) { return find_gate(name) != nullptr; }

}  // namespace lgst
