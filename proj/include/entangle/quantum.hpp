#pragma once

// Dense simulation of small multi-qubit registers.
//
// Basis convention: qubit 0 is the most significant bit of a basis index, so
// the amplitude at index 0b10 of a two-qubit register is <1 0|psi>, and the
// bitstring reported for an outcome reads qubit 0 first.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "entangle/errors.hpp"
#include "entangle/rng.hpp"

namespace entangle::quantum {

inline constexpr int kMaxQubits = 12;

template <typename Scalar>
using Complex = std::complex<Scalar>;
template <typename Scalar>
using CVector = Eigen::Matrix<Complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using CMatrix = Eigen::Matrix<Complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Gate = Eigen::Matrix<Complex<Scalar>, 2, 2>;

namespace detail {

inline void check_qubit_count(int n) {
  if (n < 1 || n > kMaxQubits)
    throw CapacityError("qubit count " + std::to_string(n) + " outside 1.." +
                        std::to_string(kMaxQubits));
}

inline void check_qubit_index(int qubit, int n) {
  if (qubit < 0 || qubit >= n)
    throw PreconditionError("qubit index " + std::to_string(qubit) +
                            " out of range for " + std::to_string(n) + " qubits");
}

// Bit mask of `qubit` inside a basis index of an n-qubit register.
inline std::size_t qubit_mask(int qubit, int n) { return std::size_t{1} << (n - 1 - qubit); }

// psi <- (G acting on `qubit`) psi, in place.
template <typename Scalar, typename Derived>
void apply_gate_columns(Eigen::MatrixBase<Derived>& m, int qubit, int n, const Gate<Scalar>& g) {
  const std::size_t mask = qubit_mask(qubit, n);
  const std::size_t dim = std::size_t{1} << n;
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const std::size_t j = i | mask;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const Complex<Scalar> a0 = m(i, c);
      const Complex<Scalar> a1 = m(j, c);
      m(i, c) = g(0, 0) * a0 + g(0, 1) * a1;
      m(j, c) = g(1, 0) * a0 + g(1, 1) * a1;
    }
  }
}

// rho <- rho G^dagger on `qubit`, in place.
template <typename Scalar>
void apply_gate_adjoint_rows(CMatrix<Scalar>& m, int qubit, int n, const Gate<Scalar>& g) {
  const std::size_t mask = qubit_mask(qubit, n);
  const std::size_t dim = std::size_t{1} << n;
  const Gate<Scalar> gc = g.conjugate();
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const std::size_t j = i | mask;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const Complex<Scalar> a0 = m(r, i);
      const Complex<Scalar> a1 = m(r, j);
      m(r, i) = gc(0, 0) * a0 + gc(0, 1) * a1;
      m(r, j) = gc(1, 0) * a0 + gc(1, 1) * a1;
    }
  }
}

}  // namespace detail

/// Pure state of 1..12 qubits, always unit norm.
template <typename Scalar = double>
class BasicStateVector {
 public:
  /// |0...0>.
  explicit BasicStateVector(int n_qubits) : n_(n_qubits) {
    detail::check_qubit_count(n_qubits);
    amps_ = CVector<Scalar>::Zero(Eigen::Index{1} << n_qubits);
    amps_(0) = Scalar(1);
  }

  /// Wraps raw amplitudes; they are normalised, and must not be all zero.
  BasicStateVector(int n_qubits, CVector<Scalar> amplitudes) : n_(n_qubits), amps_(std::move(amplitudes)) {
    detail::check_qubit_count(n_qubits);
    if (amps_.size() != (Eigen::Index{1} << n_qubits))
      throw PreconditionError("amplitude vector length does not match 2^n");
    const Scalar norm = amps_.norm();
    if (!(norm > Scalar(0)) || !std::isfinite(norm)) throw PreconditionError("state has zero or non-finite norm");
    amps_ /= norm;
  }

  /// Computational basis state |bits>, bits[0] is qubit 0.
  static BasicStateVector basis(const std::vector<int>& bits) {
    BasicStateVector s(static_cast<int>(bits.size()));
    std::size_t index = 0;
    for (int b : bits) index = (index << 1) | static_cast<std::size_t>(b != 0);
    s.amps_(0) = Scalar(0);
    s.amps_(static_cast<Eigen::Index>(index)) = Scalar(1);
    return s;
  }

  int qubits() const noexcept { return n_; }
  Eigen::Index dim() const noexcept { return amps_.size(); }
  const CVector<Scalar>& amplitudes() const noexcept { return amps_; }
  Complex<Scalar> operator[](Eigen::Index i) const { return amps_(i); }

  /// In-place single-qubit gate. Prefer the free `apply_unitary` unless in a hot loop.
  void apply_inplace(int qubit, const Gate<Scalar>& g) {
    detail::check_qubit_index(qubit, n_);
    detail::apply_gate_columns<Scalar>(amps_, qubit, n_, g);
  }

  /// In-place controlled phase diag(1, 1, 1, e^{i angle}) on (a, b).
  void controlled_phase_inplace(int a, int b, Scalar angle) {
    detail::check_qubit_index(a, n_);
    detail::check_qubit_index(b, n_);
    if (a == b) throw PreconditionError("controlled phase needs two distinct qubits");
    const std::size_t mask = detail::qubit_mask(a, n_) | detail::qubit_mask(b, n_);
    const Complex<Scalar> phase = std::polar(Scalar(1), angle);
    for (Eigen::Index i = 0; i < amps_.size(); ++i)
      if ((static_cast<std::size_t>(i) & mask) == mask) amps_(i) *= phase;
  }

 private:
  int n_;
  CVector<Scalar> amps_;
};

/// Mixed state of 1..12 qubits: Hermitian, unit trace, positive semidefinite.
template <typename Scalar = double>
class BasicDensityMatrix {
 public:
  /// |0...0><0...0|.
  explicit BasicDensityMatrix(int n_qubits) : n_(n_qubits) {
    detail::check_qubit_count(n_qubits);
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    rho_ = CMatrix<Scalar>::Zero(d, d);
    rho_(0, 0) = Scalar(1);
  }

  explicit BasicDensityMatrix(const BasicStateVector<Scalar>& psi)
      : n_(psi.qubits()), rho_(psi.amplitudes() * psi.amplitudes().adjoint()) {}

  /// Wraps an explicit matrix. Only the shape is checked here; use `is_physical` to validate.
  BasicDensityMatrix(int n_qubits, CMatrix<Scalar> rho) : n_(n_qubits), rho_(std::move(rho)) {
    detail::check_qubit_count(n_qubits);
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    if (rho_.rows() != d || rho_.cols() != d) throw PreconditionError("density matrix must be 2^n x 2^n");
  }

  static BasicDensityMatrix maximally_mixed(int n_qubits) {
    BasicDensityMatrix r(n_qubits);
    const Eigen::Index d = r.dim();
    r.rho_ = CMatrix<Scalar>::Identity(d, d) / Scalar(d);
    return r;
  }

  int qubits() const noexcept { return n_; }
  Eigen::Index dim() const noexcept { return rho_.rows(); }
  const CMatrix<Scalar>& matrix() const noexcept { return rho_; }
  Complex<Scalar> operator()(Eigen::Index r, Eigen::Index c) const { return rho_(r, c); }
  Scalar trace() const { return rho_.trace().real(); }

  void apply_inplace(int qubit, const Gate<Scalar>& g) {
    detail::check_qubit_index(qubit, n_);
    detail::apply_gate_columns<Scalar>(rho_, qubit, n_, g);
    detail::apply_gate_adjoint_rows<Scalar>(rho_, qubit, n_, g);
  }

  /// rho <- sum_k K_k rho K_k^dagger for single-qubit Kraus operators on `qubit`.
  void apply_kraus_inplace(int qubit, const std::vector<Gate<Scalar>>& kraus) {
    detail::check_qubit_index(qubit, n_);
    CMatrix<Scalar> out = CMatrix<Scalar>::Zero(dim(), dim());
    for (const auto& k : kraus) {
      CMatrix<Scalar> term = rho_;
      detail::apply_gate_columns<Scalar>(term, qubit, n_, k);
      detail::apply_gate_adjoint_rows<Scalar>(term, qubit, n_, k);
      out += term;
    }
    rho_ = std::move(out);
  }

 private:
  int n_;
  CMatrix<Scalar> rho_;
};

using StateVector = BasicStateVector<double>;
using DensityMatrix = BasicDensityMatrix<double>;

/// Two-parameter single-qubit strategy
///   U(theta, phi) = [[e^{i phi} cos(theta/2), sin(theta/2)], [-sin(theta/2), e^{-i phi} cos(theta/2)]].
/// theta in [0, pi], phi in [0, 2 pi). (0, 0) is the identity and (pi, 0) a bit flip.
struct SingleQubitUnitary {
  double theta = 0.0;
  double phi = 0.0;

  friend bool operator==(const SingleQubitUnitary&, const SingleQubitUnitary&) = default;

  template <typename Scalar = double>
  Gate<Scalar> matrix() const {
    const Scalar c = std::cos(Scalar(theta) / 2);
    const Scalar s = std::sin(Scalar(theta) / 2);
    Gate<Scalar> u;
    u << std::polar(c, Scalar(phi)), Complex<Scalar>(s), Complex<Scalar>(-s), std::polar(c, -Scalar(phi));
    return u;
  }
};

/// Throws ParameterError when theta or phi fall outside their ranges.
void validate(const SingleQubitUnitary& u);

enum class ChannelKind { Depolarizing, AmplitudeDamping, PhaseDamping };

struct NoiseChannel {
  ChannelKind kind = ChannelKind::Depolarizing;
  double strength = 0.0;  // probability in [0, 1]
};

/// Kraus operators of a single-qubit channel. Depolarizing(p) maps rho -> (1 - p) rho + p I/2.
template <typename Scalar = double>
std::vector<Gate<Scalar>> kraus_operators(const NoiseChannel& ch) {
  const Scalar p = Scalar(ch.strength);
  if (!(p >= Scalar(0) && p <= Scalar(1)))
    throw ParameterError("strength", "channel strength must lie in [0, 1]");
  using C = Complex<Scalar>;
  std::vector<Gate<Scalar>> ks;
  switch (ch.kind) {
    case ChannelKind::Depolarizing: {
      Gate<Scalar> i, x, y, z;
      i << C(1), C(0), C(0), C(1);
      x << C(0), C(1), C(1), C(0);
      y << C(0), C(0, -1), C(0, 1), C(0);
      z << C(1), C(0), C(0), C(-1);
      const Scalar a = std::sqrt(Scalar(1) - Scalar(3) * p / Scalar(4));
      const Scalar b = std::sqrt(p / Scalar(4));
      ks = {a * i, b * x, b * y, b * z};
      break;
    }
    case ChannelKind::AmplitudeDamping: {
      Gate<Scalar> k0, k1;
      k0 << C(1), C(0), C(0), C(std::sqrt(Scalar(1) - p));
      k1 << C(0), C(std::sqrt(p)), C(0), C(0);
      ks = {k0, k1};
      break;
    }
    case ChannelKind::PhaseDamping: {
      Gate<Scalar> k0, k1;
      k0 << C(1), C(0), C(0), C(std::sqrt(Scalar(1) - p));
      k1 << C(0), C(0), C(0), C(std::sqrt(p));
      ks = {k0, k1};
      break;
    }
  }
  return ks;
}

/// Depolarizing strength accumulated by a qubit decohering at `rate` (per us) for `elapsed_us`.
inline double decoherence_strength(double rate, double elapsed_us) {
  if (rate <= 0.0 || elapsed_us <= 0.0) return 0.0;
  return 1.0 - std::exp(-rate * elapsed_us);
}

// ---------------------------------------------------------------------------
// Free functions. All of them return a new state and leave their input alone.

template <typename Scalar>
BasicStateVector<Scalar> apply_gate(BasicStateVector<Scalar> psi, int qubit, const Gate<Scalar>& g) {
  psi.apply_inplace(qubit, g);
  return psi;
}

template <typename Scalar>
BasicDensityMatrix<Scalar> apply_gate(BasicDensityMatrix<Scalar> rho, int qubit, const Gate<Scalar>& g) {
  rho.apply_inplace(qubit, g);
  return rho;
}

template <typename Scalar>
BasicStateVector<Scalar> apply_unitary(BasicStateVector<Scalar> psi, int qubit, const SingleQubitUnitary& u) {
  psi.apply_inplace(qubit, u.matrix<Scalar>());
  return psi;
}

template <typename Scalar>
BasicDensityMatrix<Scalar> apply_unitary(BasicDensityMatrix<Scalar> rho, int qubit, const SingleQubitUnitary& u) {
  rho.apply_inplace(qubit, u.matrix<Scalar>());
  return rho;
}

template <typename Scalar>
BasicDensityMatrix<Scalar> apply_channel(BasicDensityMatrix<Scalar> rho, int qubit, const NoiseChannel& ch) {
  rho.apply_kraus_inplace(qubit, kraus_operators<Scalar>(ch));
  return rho;
}

/// Linear cluster state: |+>^M followed by CZ on every neighbouring pair (i, i+1).
template <typename Scalar = double>
BasicStateVector<Scalar> make_cluster_state(int parties) {
  if (parties < 2 || parties > kMaxQubits)
    throw CapacityError("cluster state needs 2.." + std::to_string(kMaxQubits) + " parties, got " +
                        std::to_string(parties));
  const Eigen::Index dim = Eigen::Index{1} << parties;
  CVector<Scalar> amps(dim);
  const Scalar mag = Scalar(1) / std::sqrt(Scalar(dim));
  for (Eigen::Index i = 0; i < dim; ++i) {
    // (-1)^(number of adjacent 11 pairs)
    const auto bits = static_cast<std::uint64_t>(i);
    const int pairs = std::popcount(bits & (bits >> 1));
    amps(i) = (pairs % 2 == 0) ? mag : -mag;
  }
  return BasicStateVector<Scalar>(parties, std::move(amps));
}

/// Bell state (|00> + |11>)/sqrt(2).
template <typename Scalar = double>
BasicStateVector<Scalar> bell_state() {
  CVector<Scalar> a = CVector<Scalar>::Zero(4);
  a(0) = a(3) = Scalar(1);
  return BasicStateVector<Scalar>(2, std::move(a));
}

/// Werner state w |Phi+><Phi+| + (1 - w) I/4 with fidelity F = (1 + 3 w)/4 to the Bell state.
/// Fidelities below 1/4 are clamped to the maximally mixed state.
template <typename Scalar = double>
BasicDensityMatrix<Scalar> werner_state(Scalar fidelity) {
  const Scalar f = std::clamp(fidelity, Scalar(0.25), Scalar(1));
  const Scalar w = (Scalar(4) * f - Scalar(1)) / Scalar(3);
  const CVector<Scalar> phi = bell_state<Scalar>().amplitudes();
  CMatrix<Scalar> rho = w * (phi * phi.adjoint()) + ((Scalar(1) - w) / Scalar(4)) * CMatrix<Scalar>::Identity(4, 4);
  return BasicDensityMatrix<Scalar>(2, std::move(rho));
}

template <typename Scalar>
CMatrix<Scalar> kron(const CMatrix<Scalar>& a, const CMatrix<Scalar>& b) {
  CMatrix<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <typename Scalar>
BasicDensityMatrix<Scalar> tensor(const BasicDensityMatrix<Scalar>& a, const BasicDensityMatrix<Scalar>& b) {
  return BasicDensityMatrix<Scalar>(a.qubits() + b.qubits(), kron<Scalar>(a.matrix(), b.matrix()));
}

/// <target|rho|target>, clipped to [0, 1].
template <typename Scalar>
Scalar fidelity(const BasicDensityMatrix<Scalar>& rho, const BasicStateVector<Scalar>& target) {
  if (rho.qubits() != target.qubits()) throw PreconditionError("fidelity: qubit count mismatch");
  const Complex<Scalar> f = target.amplitudes().dot(rho.matrix() * target.amplitudes());
  return std::clamp(f.real(), Scalar(0), Scalar(1));
}

/// Diagonal of rho, i.e. computational-basis outcome probabilities.
template <typename Scalar>
std::vector<Scalar> outcome_probabilities(const BasicDensityMatrix<Scalar>& rho) {
  std::vector<Scalar> p(static_cast<std::size_t>(rho.dim()));
  for (Eigen::Index i = 0; i < rho.dim(); ++i) p[static_cast<std::size_t>(i)] = std::max(Scalar(0), rho(i, i).real());
  return p;
}

template <typename Scalar>
std::vector<Scalar> outcome_probabilities(const BasicStateVector<Scalar>& psi) {
  std::vector<Scalar> p(static_cast<std::size_t>(psi.dim()));
  for (Eigen::Index i = 0; i < psi.dim(); ++i) p[static_cast<std::size_t>(i)] = std::norm(psi[i]);
  return p;
}

/// Inverse-CDF draw from a probability table. One uniform is consumed per call.
template <typename Scalar>
std::size_t sample_index(const std::vector<Scalar>& probs, Rng& rng) {
  Scalar total = Scalar(0);
  for (Scalar p : probs) total += p;
  const Scalar u = Scalar(uniform01(rng)) * total;
  Scalar acc = Scalar(0);
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= Scalar(0)) continue;
    acc += probs[i];
    last_nonzero = i;
    if (u < acc) return i;
  }
  return last_nonzero;
}

/// Bitstring of basis index `index` on n qubits, qubit 0 first.
inline std::string bitstring(std::size_t index, int n) {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int q = 0; q < n; ++q)
    if (index & detail::qubit_mask(q, n)) s[static_cast<std::size_t>(q)] = '1';
  return s;
}

template <typename Scalar>
struct Measurement {
  std::string outcome;
  std::size_t index = 0;
  std::vector<Scalar> probabilities;
};

/// Samples a computational-basis outcome; the full probability table is returned with it.
template <typename Scalar>
Measurement<Scalar> measure_computational(const BasicDensityMatrix<Scalar>& rho, Rng& rng) {
  Measurement<Scalar> m;
  m.probabilities = outcome_probabilities(rho);
  m.index = sample_index(m.probabilities, rng);
  m.outcome = bitstring(m.index, rho.qubits());
  return m;
}

/// Entanglement swap of rho_ab and rho_cd by a Bell measurement on (b, c) with
/// Pauli feed-forward on d, averaged over the four outcomes. Returns rho_ad.
template <typename Scalar>
BasicDensityMatrix<Scalar> entanglement_swap(const BasicDensityMatrix<Scalar>& ab, const BasicDensityMatrix<Scalar>& cd) {
  if (ab.qubits() != 2 || cd.qubits() != 2) throw PreconditionError("entanglement_swap expects two-qubit pairs");
  using C = Complex<Scalar>;
  const CMatrix<Scalar> joint = kron<Scalar>(ab.matrix(), cd.matrix());  // qubit order a, b, c, d
  const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
  // Bell basis on (b, c) and the Pauli that maps the heralded state back to Phi+ on (a, d).
  const std::array<std::array<C, 4>, 4> bell = {{
      {C(r), C(0), C(0), C(r)},    // Phi+
      {C(r), C(0), C(0), C(-r)},   // Phi-
      {C(0), C(r), C(r), C(0)},    // Psi+
      {C(0), C(r), C(-r), C(0)},   // Psi-
  }};
  std::array<Gate<Scalar>, 4> fix;
  fix[0] << C(1), C(0), C(0), C(1);
  fix[1] << C(1), C(0), C(0), C(-1);
  fix[2] << C(0), C(1), C(1), C(0);
  fix[3] << C(0), C(-1), C(1), C(0);  // Z X, up to a global phase of i Y
  CMatrix<Scalar> out = CMatrix<Scalar>::Zero(4, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    // V: 4 x 16, V[(a d), (a b c d)] = conj(bell_k[b c]) * fix_k[d, d_in]
    CMatrix<Scalar> v = CMatrix<Scalar>::Zero(4, 16);
    for (int a = 0; a < 2; ++a)
      for (int bc = 0; bc < 4; ++bc)
        for (int d = 0; d < 2; ++d)
          for (int din = 0; din < 2; ++din) {
            const int row = a * 2 + d;
            const int col = a * 8 + bc * 2 + din;
            v(row, col) += std::conj(bell[k][static_cast<std::size_t>(bc)]) * fix[k](d, din);
          }
    out += v * joint * v.adjoint();
  }
  return BasicDensityMatrix<Scalar>(2, std::move(out));
}

/// Physicality check used by tests and debug assertions.
template <typename Scalar>
bool is_physical(const BasicDensityMatrix<Scalar>& rho, Scalar tol = Scalar(1e-10)) {
  const auto& m = rho.matrix();
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(m.trace().real() - Scalar(1)) > tol || std::abs(m.trace().imag()) > tol) return false;
  Eigen::SelfAdjointEigenSolver<CMatrix<Scalar>> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

// ---------------------------------------------------------------------------
// Game primitives (double precision, implemented in quantum.cpp).

/// Classical CHSH strategy: answers a0, a1 (Alice on x = 0, 1) and b0, b1 (Bob on y = 0, 1).
struct ClassicalDeterministic {
  std::array<int, 4> bits{};
};
/// Measurement angles for Alice (x = 0, 1) and Bob (y = 0, 1) on a shared Phi+ pair.
struct QuantumAngles {
  double a0 = 0, a1 = 0, b0 = 0, b1 = 0;
};
struct QuantumOptimal {};

using ChshStrategy = std::variant<ClassicalDeterministic, QuantumAngles, QuantumOptimal>;

/// Exact win probability over uniformly random questions (win iff a XOR b == x AND y).
double chsh_win_probability(const ChshStrategy& strategy);

/// Best win probability over all 16 deterministic classical strategies.
double chsh_classical_optimum();

/// Four rows (outcomes CC, CD, DC, DD; C = bit 0) by two columns (player payoffs).
using PayoffMatrix = Eigen::Matrix<double, 4, 2>;

struct EwlResult {
  std::array<double, 4> outcome_probabilities{};
  double payoff_a = 0.0;
  double payoff_b = 0.0;
};

/// exp(i gamma/2 D(x)D) with D = U(pi, 0). Commutes with every product of
/// classical moves {I, D}, so those moves stay deterministic for any gamma.
inline Eigen::Matrix4cd ewl_entangler(double gamma) {
  // D(x)D sends index k to 3 - k with signs (+, -, -, +).
  constexpr double sign[4] = {1.0, -1.0, -1.0, 1.0};
  Eigen::Matrix4cd j = Eigen::Matrix4cd::Zero();
  for (int k = 0; k < 4; ++k) {
    j(k, k) += std::cos(gamma / 2);
    j(3 - k, k) += std::complex<double>(0.0, sign[k] * std::sin(gamma / 2));
  }
  return j;
}

/// In-place two-qubit gate on (a, b); `g` acts on the basis |ab>.
template <typename Scalar>
void apply_two_qubit_inplace(BasicStateVector<Scalar>& psi, int a, int b,
                             const Eigen::Matrix<Complex<Scalar>, 4, 4>& g) {
  const int n = psi.qubits();
  detail::check_qubit_index(a, n);
  detail::check_qubit_index(b, n);
  if (a == b) throw PreconditionError("two-qubit gate needs two distinct qubits");
  const std::size_t ma = detail::qubit_mask(a, n), mb = detail::qubit_mask(b, n);
  CVector<Scalar> amps = psi.amplitudes();
  for (std::size_t i = 0; i < static_cast<std::size_t>(amps.size()); ++i) {
    if (i & (ma | mb)) continue;
    const std::array<std::size_t, 4> idx = {i, i | mb, i | ma, i | ma | mb};
    Eigen::Matrix<Complex<Scalar>, 4, 1> v;
    for (int k = 0; k < 4; ++k) v(k) = amps(static_cast<Eigen::Index>(idx[k]));
    v = g * v;
    for (int k = 0; k < 4; ++k) amps(static_cast<Eigen::Index>(idx[k])) = v(k);
  }
  psi = BasicStateVector<Scalar>(n, std::move(amps));
}

/// EWL-quantised 2x2 game: J(gamma)|00>, player unitaries, J(gamma)^dagger, measure,
/// with J = ewl_entangler(gamma) and gamma in [0, pi/2].
EwlResult ewl_game(double gamma, const SingleQubitUnitary& a, const SingleQubitUnitary& b, const PayoffMatrix& payoffs);

struct CoinFlip {
  int bit_a = 0;
  int bit_b = 0;
  bool agree = true;
};

/// Two parties measure a shared Phi+ pair, party B in a basis rotated by `angle`
/// (radians, [0, pi/2]). P(agree) = cos^2(angle), marginals are uniform.
CoinFlip coin_flip_consensus(Rng& rng, double angle);

/// Joint outcome table of the coin flip: P(00), P(01), P(10), P(11).
std::array<double, 4> coin_flip_distribution(double angle);

/// JSON debug dump: array of [re, im] amplitude pairs / row-major matrix entries.
std::string dump_json(const StateVector& psi);
std::string dump_json(const DensityMatrix& rho);

}  // namespace entangle::quantum
