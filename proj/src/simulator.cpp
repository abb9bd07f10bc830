#include "lgst/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <tuple>
#include <unordered_map>

#include "lgst/clifford.hpp"
#include "lgst/errors.hpp"
#include "lgst/model_io.hpp"
#include "lgst/propagation.hpp"
#include "lgst/random.hpp"

namespace lgst {

SimulatorConfig default_simulator(std::size_t num_qubits) {
  SimulatorConfig c;
  c.backend = num_qubits <= c.dense_max_qubits ? Backend::dense : Backend::taylor;
  return c;
}

namespace {

// ---- dense Pauli-transfer simulation -------------------------------------------------

// Phase exponent of (x1,z1)*(x2,z2) for single-word masks of Hermitian letters.
inline int mask_product_phase(std::uint64_t x1, std::uint64_t z1, std::uint64_t x2,
                              std::uint64_t z2) {
  const std::uint64_t X1 = x1 & ~z1, Y1 = x1 & z1, Z1 = ~x1 & z1;
  const std::uint64_t X2 = x2 & ~z2, Y2 = x2 & z2, Z2 = ~x2 & z2;
  const std::uint64_t pos = (X1 & Y2) | (Y1 & Z2) | (Z1 & X2);
  const std::uint64_t neg = (Y1 & X2) | (Z1 & Y2) | (X1 & Z2);
  return (std::popcount(pos) - std::popcount(neg)) & 3;
}

struct DenseSpace {
  std::size_t n;
  std::size_t dim;
  std::uint64_t mask;

  explicit DenseSpace(std::size_t qubits)
      : n(qubits), dim(std::size_t{1} << (2 * qubits)), mask((std::uint64_t{1} << qubits) - 1) {}

  std::size_t index(const PauliString& p) const {
    return static_cast<std::size_t>(p.xs()[0] | (p.zs()[0] << n));
  }
};

// Signed permutation r'[P] = sign * r[U^dag P U] of one ideal layer.
struct SignedPermutation {
  std::vector<std::uint32_t> source;
  std::vector<std::int8_t> sign;
};

SignedPermutation layer_permutation(const DenseSpace& sp, const CliffordTableau& inverse) {
  const std::size_t n = sp.n;
  // Images of the single-qubit letters X, Y, Z on every qubit.
  std::vector<PauliString> letter_image(3 * n);
  for (std::size_t q = 0; q < n; ++q) {
    letter_image[3 * q + 0] = inverse.conjugate(PauliString::single(n, q, 'X'));
    letter_image[3 * q + 1] = inverse.conjugate(PauliString::single(n, q, 'Y'));
    letter_image[3 * q + 2] = inverse.conjugate(PauliString::single(n, q, 'Z'));
  }
  std::vector<PauliString> image(sp.dim);
  image[0] = PauliString(n);
  SignedPermutation out;
  out.source.resize(sp.dim);
  out.sign.resize(sp.dim);
  out.source[0] = 0;
  out.sign[0] = 1;
  for (std::size_t idx = 1; idx < sp.dim; ++idx) {
    const std::uint64_t x = idx & sp.mask, z = idx >> n;
    const auto q = static_cast<std::size_t>(std::countr_zero(x | z));
    const int letter = ((x >> q) & 1) ? (((z >> q) & 1) ? 1 : 0) : 2;
    const std::size_t rest = idx & ~((std::size_t{1} << q) | (std::size_t{1} << (q + n)));
    // Letters on different qubits commute, so the image of the tensor product is the
    // product of images with no extra phase.
    image[idx] = image[rest] * letter_image[3 * q + static_cast<std::size_t>(letter)];
    out.source[idx] = static_cast<std::uint32_t>(sp.index(image[idx]));
    out.sign[idx] = static_cast<std::int8_t>(image[idx].sign());
  }
  return out;
}

struct DenseGenerator {
  std::size_t idx;
  double rate;
  std::vector<std::int8_t> sign;  // per Q: 0 if A and Q commute, else the sign of H_A(Q)
};

// Lindbladian of one layer acting on the vector r_P = Tr[P rho].
class LayerGenerator {
 public:
  LayerGenerator(const DenseSpace& sp,
                 const std::vector<std::pair<ElementaryGenerator, double>>& gens)
      : sp_(sp), diag_(sp.dim, 0.0) {
    std::vector<double> column(sp.dim, 0.0);
    for (const auto& [g, rate] : gens) {
      if (rate == 0.0) continue;
      const std::uint64_t x = g.label.xs()[0], z = g.label.zs()[0];
      if (g.kind == GeneratorKind::S) {
        for (std::size_t q = 0; q < sp.dim; ++q) {
          const std::uint64_t qx = q & sp.mask, qz = q >> sp.n;
          if (std::popcount((x & qz) ^ (z & qx)) & 1) diag_[q] -= 2.0 * rate;
        }
        continue;
      }
      DenseGenerator h{sp.index(g.label), rate, std::vector<std::int8_t>(sp.dim, 0)};
      for (std::size_t q = 0; q < sp.dim; ++q) {
        const std::uint64_t qx = q & sp.mask, qz = q >> sp.n;
        if (!(std::popcount((x & qz) ^ (z & qx)) & 1)) continue;
        // H_A(Q) = -2i A Q = -2 i^(ph+1) R for anticommuting A, Q with A Q = i^ph R.
        const int ph = mask_product_phase(x, z, qx, qz);
        h.sign[q] = ((ph + 1) & 3) == 0 ? -1 : 1;
        column[q] += 2.0 * std::abs(rate);
      }
      ham_.push_back(std::move(h));
    }
    // Exact induced 1-norm: distinct H labels send a column to distinct rows.
    for (std::size_t q = 0; q < sp.dim; ++q) norm_ = std::max(norm_, column[q] + std::abs(diag_[q]));
  }

  double norm() const { return norm_; }
  bool empty() const { return norm_ == 0.0; }

  // out = scale * L in
  void apply(const std::vector<double>& in, std::vector<double>& out, double scale) const {
    for (std::size_t q = 0; q < sp_.dim; ++q) out[q] = scale * diag_[q] * in[q];
    for (const auto& h : ham_) {
      const double a = 2.0 * scale * h.rate;
      const std::int8_t* sign = h.sign.data();
      for (std::size_t q = 0; q < sp_.dim; ++q) {
        if (sign[q]) out[q ^ h.idx] += a * sign[q] * in[q];
      }
    }
  }

  // r <- exp(L) r by s steps of a truncated Taylor series of exp(L/s), each step of
  // norm at most 2.
  void exponentiate(std::vector<double>& r, double tolerance) const {
    if (empty()) return;
    const int steps = std::max(1, static_cast<int>(std::ceil(norm_ / 2.0)));
    std::vector<double> term(sp_.dim), next(sp_.dim);
    for (int s = 0; s < steps; ++s) {
      term = r;
      int small = 0;
      for (int k = 1; k <= 80; ++k) {
        apply(term, next, 1.0 / (static_cast<double>(steps) * k));
        double tmax = 0.0, rmax = 0.0;
        for (std::size_t q = 0; q < sp_.dim; ++q) {
          r[q] += next[q];
          tmax = std::max(tmax, std::abs(next[q]));
          rmax = std::max(rmax, std::abs(r[q]));
        }
        std::swap(term, next);
        small = tmax <= tolerance * std::max(rmax, 1e-300) ? small + 1 : 0;
        if (small == 2) break;
      }
    }
  }

 private:
  const DenseSpace& sp_;
  std::vector<double> diag_;
  std::vector<DenseGenerator> ham_;
  double norm_ = 0.0;
};

Layer pseudo_layer(const ErrorModel& model, const char* name) {
  if (model.gate_index(name)) return Layer{{name, {}}};
  return Layer{};
}

}  // namespace

std::vector<double> simulate_dense_z(const Circuit& circuit, const ErrorModel& model,
                                     const RateVector& rates, std::size_t max_qubits,
                                     double tolerance) {
  const std::size_t n = circuit.num_qubits();
  if (n > max_qubits || n > 12) {
    throw BackendError("dense backend limited to " + std::to_string(std::min<std::size_t>(max_qubits, 12)) +
                       " qubits, circuit has " + std::to_string(n));
  }
  if (model.num_qubits() != n) throw DimensionError("model and circuit qubit counts differ");
  if (rates.size() != model.num_parameters()) throw DimensionError("rate vector does not match the model");
  const DenseSpace sp(n);

  std::vector<double> r(sp.dim, 0.0);
  for (std::size_t z = 0; z <= sp.mask; ++z) r[z << n] = 1.0;

  auto noise = [&](const Layer& layer) {
    LayerGenerator(sp, layer_lindbladian(model, rates, layer)).exponentiate(r, tolerance);
  };
  noise(pseudo_layer(model, "prep"));
  const auto tableaus = layer_tableaus(circuit);
  std::vector<double> tmp(sp.dim);
  for (std::size_t l = 0; l < circuit.depth(); ++l) {
    const SignedPermutation perm = layer_permutation(sp, tableaus[l].inverse());
    for (std::size_t q = 0; q < sp.dim; ++q) tmp[q] = perm.sign[q] * r[perm.source[q]];
    std::swap(r, tmp);
    noise(circuit.layers()[l]);
  }
  noise(pseudo_layer(model, "meas"));

  std::vector<double> out(sp.mask + 1);
  for (std::size_t z = 0; z <= sp.mask; ++z) out[z] = r[z << n];
  return out;
}

std::vector<double> simulate_dense(const Circuit& circuit, const ErrorModel& model,
                                   const RateVector& rates,
                                   std::span<const PauliString> observables,
                                   std::size_t max_qubits) {
  const auto z = simulate_dense_z(circuit, model, rates, max_qubits);
  std::vector<double> out;
  out.reserve(observables.size());
  for (const auto& q : observables) {
    if (!q.is_z_type() || q.num_qubits() != circuit.num_qubits()) {
      throw DesignError("observable " + q.str() + " is not a Z-type Pauli of the circuit");
    }
    out.push_back(z[q.zs()[0]]);
  }
  return out;
}

namespace {

// ---- order-k expansion of the propagated error channel -------------------------------

struct TaylorGen {
  PauliString p;  // pulled back to the |0> frame, unsigned
  double rate;    // gamma * h * sign of the pull-back for H; s for S
  bool hamiltonian;
  std::size_t layer;
};

class TaylorExpansion {
 public:
  TaylorExpansion(const PropagatedCircuit& pc, const RateVector& rates, int order)
      : n_(pc.num_qubits), order_(order) {
    std::map<std::tuple<std::size_t, int, PauliString>, double, std::greater<>> merged;
    for (const auto& g : pc.generators) {
      const double rate = rates[g.source_param];
      if (rate == 0.0) continue;
      PauliString letters = g.pulled_back.unsigned_copy();
      const bool h = g.kind == GeneratorKind::H;
      const double v = h ? rate * g.sign * g.pulled_back.sign() : rate;
      merged[{g.layer, h ? 0 : 1, std::move(letters)}] += v;
    }
    for (auto& [key, rate] : merged) {
      if (rate == 0.0) continue;
      gens_.push_back({std::get<2>(key), rate, std::get<1>(key) == 0, std::get<0>(key)});
    }
    // gens_ is sorted by layer descending (meas first); first_[i] is the first position of
    // gen i's layer, so "this layer or earlier" is the suffix starting there.
    first_.resize(gens_.size());
    for (std::size_t i = 0; i < gens_.size(); ++i) {
      first_[i] = (i > 0 && gens_[i - 1].layer == gens_[i].layer) ? first_[i - 1] : i;
    }
    for (std::size_t i = 0; i < gens_.size(); ++i) {
      if (gens_[i].hamiltonian) {
        buckets_[x_key(gens_[i].p)].push_back(static_cast<std::uint32_t>(i));
      } else {
        stochastic_.push_back(static_cast<std::uint32_t>(i));
      }
    }
  }

  double expectation(const PauliString& q_pulled) {
    total_ = 0.0;
    visit(q_pulled, 1.0, 0, 0, 0);
    return total_;
  }

 private:
  static int zexp(const PauliString& b) {
    if (!b.is_z_type()) return 0;
    return b.phase() == 0 ? 1 : (b.phase() == 2 ? -1 : 0);
  }

  std::uint64_t x_key(const PauliString& p) const {
    const auto xs = p.xs();
    if (xs.size() == 1) return xs[0];
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto w : xs) h = splitmix64(h ^ w);
    return h;
  }

  // `start` is the first generator position allowed next; `run` is how many generators of
  // the current layer are already in the product (for the 1/r! of each exponential).
  void visit(const PauliString& b, double coef, int degree, std::size_t start, int run) {
    total_ += coef * zexp(b);
    if (degree == order_) return;
    const std::size_t cur_layer = start < gens_.size() ? gens_[start].layer : 0;
    if (degree == order_ - 1) {
      leaf_children(b, coef, start, run, cur_layer);
      return;
    }
    for (std::size_t i = start; i < gens_.size(); ++i) {
      const TaylorGen& g = gens_[i];
      if (!anticommute_unchecked(g.p, b)) continue;
      const bool same = g.layer == cur_layer && start < gens_.size();
      const double w = same ? 1.0 / (run + 1) : 1.0;
      const int next_run = same ? run + 1 : 1;
      if (g.hamiltonian) {
        // Adjoint of H_P is B -> i[P, B] = 2i P B.
        PauliString child = g.p * b;
        child.mul_i(1);
        visit(child, coef * 2.0 * g.rate * w, degree + 1, first_[i], next_run);
      } else {
        visit(b, coef * -2.0 * g.rate * w, degree + 1, first_[i], next_run);
      }
    }
  }

  void leaf_children(const PauliString& b, double coef, std::size_t start, int run,
                     std::size_t cur_layer) {
    auto weight = [&](const TaylorGen& g) {
      return (g.layer == cur_layer && start < gens_.size()) ? 1.0 / (run + 1) : 1.0;
    };
    const int zb = zexp(b);
    if (zb != 0) {
      for (auto i : stochastic_) {
        if (i < start) continue;
        const TaylorGen& g = gens_[i];
        if (anticommute_unchecked(g.p, b)) total_ += coef * -2.0 * g.rate * weight(g) * zb;
      }
    }
    auto it = buckets_.find(x_key(b));
    if (it == buckets_.end()) return;
    const auto& list = it->second;
    for (auto pos = std::lower_bound(list.begin(), list.end(), start); pos != list.end(); ++pos) {
      const TaylorGen& g = gens_[*pos];
      if (!same_x_unchecked(g.p, b) || !anticommute_unchecked(g.p, b)) continue;
      const int ph = (product_phase_unchecked(g.p, b) + 1) & 3;
      const double e = ph == 0 ? 1.0 : (ph == 2 ? -1.0 : 0.0);
      total_ += coef * 2.0 * g.rate * weight(g) * e;
    }
  }

  std::size_t n_;
  int order_;
  std::vector<TaylorGen> gens_;
  std::vector<std::size_t> first_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
  std::vector<std::uint32_t> stochastic_;
  double total_ = 0.0;
};

}  // namespace

std::vector<double> simulate_taylor(const Circuit& circuit, const ErrorModel& model,
                                    const RateVector& rates,
                                    std::span<const PauliString> observables, int order) {
  if (order < 1) throw BackendError("taylor order must be >= 1");
  if (rates.size() != model.num_parameters()) throw DimensionError("rate vector does not match the model");
  const PropagatedCircuit pc = propagate_all(circuit, model);
  TaylorExpansion expansion(pc, rates, order);
  std::vector<double> out;
  out.reserve(observables.size());
  for (const auto& q : observables) {
    if (q.num_qubits() != circuit.num_qubits() || !q.is_z_type()) {
      throw DesignError("observable " + q.str() + " is not a Z-type Pauli of the circuit");
    }
    out.push_back(expansion.expectation(pc.unitary_inverse.conjugate(q)));
  }
  return out;
}

std::vector<double> sample_z_expectations(std::span<const double> z_expectations,
                                          std::uint64_t shots, Rng& rng) {
  const std::size_t dim = z_expectations.size();
  if (dim == 0 || (dim & (dim - 1)) != 0) throw DimensionError("expectation table must have 2^n entries");
  // p(b) = 2^-n sum_z (-1)^(b.z) <Z^z> by a Walsh-Hadamard transform.
  std::vector<double> p(z_expectations.begin(), z_expectations.end());
  p[0] = 1.0;
  for (std::size_t h = 1; h < dim; h <<= 1) {
    for (std::size_t i = 0; i < dim; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = p[j], b = p[j + h];
        p[j] = a + b;
        p[j + h] = a - b;
      }
    }
  }
  double total = 0.0;
  for (auto& v : p) {
    v = std::max(v / static_cast<double>(dim), 0.0);
    total += v;
  }
  std::vector<double> cdf(dim);
  double acc = 0.0;
  for (std::size_t b = 0; b < dim; ++b) cdf[b] = (acc += p[b] / total);
  std::vector<std::uint64_t> counts(dim, 0);
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = uniform01(rng);
    auto b = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    ++counts[std::min(b, dim - 1)];
  }
  std::vector<double> out(dim);
  for (std::size_t z = 0; z < dim; ++z) {
    std::int64_t sum = 0;
    for (std::size_t b = 0; b < dim; ++b) {
      const auto c = static_cast<std::int64_t>(counts[b]);
      sum += (std::popcount(b & z) & 1) ? -c : c;
    }
    out[z] = static_cast<double>(sum) / static_cast<double>(shots);
  }
  return out;
}

std::vector<double> add_gaussian_shot_noise(std::span<const double> exact,
                                            std::size_t observables_per_circuit,
                                            std::uint64_t shots, std::uint64_t seed) {
  std::vector<double> out(exact.begin(), exact.end());
  if (shots == 0) return out;
  const std::size_t m = std::max<std::size_t>(observables_per_circuit, 1);
  for (std::size_t c = 0; c * m < out.size(); ++c) {
    Rng rng(derive_seed(seed, c));
    for (std::size_t k = 0; k < m && c * m + k < out.size(); ++k) {
      double& v = out[c * m + k];
      const double q = std::clamp(v, -1.0, 1.0);
      const double sd = std::sqrt((1.0 - q * q) / static_cast<double>(shots));
      v = std::clamp(q + sd * standard_normal(rng), -1.0, 1.0);
    }
  }
  return out;
}

SimulatedData simulate_design(const ExperimentDesign& design, const ErrorModel& model,
                              const RateVector& rates, const SimulatorConfig& config) {
  const std::size_t nc = design.circuits.size();
  const std::size_t m = design.observables.size();
  SimulatedData data;
  data.shots = config.shots;
  data.ideal.assign(nc * m, 0);
  data.value.assign(nc * m, 0.0);
  if (config.backend == Backend::dense && design.num_qubits > config.dense_max_qubits) {
    throw BackendError("dense backend limited to " + std::to_string(config.dense_max_qubits) +
                       " qubits, design has " + std::to_string(design.num_qubits));
  }
  if (config.backend == Backend::taylor && config.order < 1) {
    throw BackendError("taylor order must be >= 1");
  }

  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < nc; ++c) {
    try {
      const Circuit& circuit = design.circuits[c];
      const CliffordTableau u = circuit_tableau(circuit);
      const CliffordTableau uinv = u.inverse();
      for (std::size_t k = 0; k < m; ++k) {
        const PauliString qt = uinv.conjugate(design.observables[k]);
        data.ideal[c * m + k] = static_cast<std::int8_t>(qt.is_z_type() ? qt.sign() : 0);
      }
      if (config.backend == Backend::dense) {
        auto z = simulate_dense_z(circuit, model, rates, config.dense_max_qubits,
                                  config.dense_tolerance);
        if (config.shots > 0) {
          Rng rng(derive_seed(config.seed, c));
          z = sample_z_expectations(z, config.shots, rng);
        }
        for (std::size_t k = 0; k < m; ++k) data.value[c * m + k] = z[design.observables[k].zs()[0]];
      } else {
        const auto v = simulate_taylor(circuit, model, rates, design.observables, config.order);
        std::copy(v.begin(), v.end(), data.value.begin() + static_cast<std::ptrdiff_t>(c * m));
      }
    } catch (...) {
#pragma omp critical(lgst_simulate_design)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  if (config.backend == Backend::taylor && config.shots > 0) {
    data.value = add_gaussian_shot_noise(data.value, m, config.shots, config.seed);
  }
  for (auto& v : data.value) v = std::clamp(v, -1.0, 1.0);

  data.meta = {{"backend", config.backend == Backend::dense ? "dense" : "taylor"},
               {"k", config.backend == Backend::taylor ? nlohmann::json(config.order) : nlohmann::json()},
               {"seed", config.seed},
               {"shots", config.shots == 0 ? nlohmann::json("inf") : nlohmann::json(config.shots)},
               {"model_ref", model_ref(model)}};
  if (config.backend == Backend::dense) {
    data.meta["expm"] = {{"method", "scaled truncated taylor (expmv)"},
                         {"tolerance", config.dense_tolerance}};
  }
  return data;
}

}  // namespace lgst
