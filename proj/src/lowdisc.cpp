#include "qmc/lowdisc.hpp"

#include <bit>
#include <mutex>
#include <stdexcept>

namespace qmc {

namespace {

constexpr double kInv32 = 0x1.0p-32;  // 2^-32

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Direction-number table.
//
// Dimension 1 is the van der Corput sequence in base 2 (v_k = 2^{k-1} in
// integer form, i.e. m_k = 1). Every further dimension is driven by a
// primitive polynomial x^s + a_1 x^{s-1} + ... + a_{s-1} x + 1 over GF(2)
// and s odd initial values m_1..m_s with m_i < 2^i, extended by
//   m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}.
// ---------------------------------------------------------------------------

// GF(2) polynomial arithmetic on bitmasks.
std::uint32_t poly_mul_mod(std::uint32_t a, std::uint32_t b, std::uint32_t mod, int deg) {
  std::uint64_t acc = 0;
  std::uint64_t aa = a;
  while (b) {
    if (b & 1u) acc ^= aa;
    aa <<= 1;
    b >>= 1;
  }
  // reduce
  for (int bit = std::bit_width(acc); bit > deg; bit = std::bit_width(acc)) {
    acc ^= static_cast<std::uint64_t>(mod) << (bit - 1 - deg);
  }
  return static_cast<std::uint32_t>(acc);
}

std::uint32_t poly_pow_mod(std::uint32_t base, std::uint64_t e, std::uint32_t mod, int deg) {
  std::uint32_t result = 1;
  while (e) {
    if (e & 1u) result = poly_mul_mod(result, base, mod, deg);
    base = poly_mul_mod(base, base, mod, deg);
    e >>= 1;
  }
  return result;
}

// p is primitive over GF(2) iff x has multiplicative order 2^s - 1 mod p.
bool is_primitive(std::uint32_t poly, int deg) {
  const std::uint64_t order = (1ull << deg) - 1;
  if (poly_pow_mod(2u, order, poly, deg) != 1u) return false;
  std::uint64_t n = order;
  for (std::uint64_t q = 2; q * q <= n; ++q) {
    if (n % q) continue;
    if (poly_pow_mod(2u, order / q, poly, deg) == 1u) return false;
    while (n % q == 0) n /= q;
  }
  if (n > 1 && n < order) {
    if (poly_pow_mod(2u, order / n, poly, deg) == 1u) return false;
  }
  return true;
}

// Published initialization values for the low dimensions (Joe-Kuo style).
// Row i holds the m-values for dimension i + 2.
const std::vector<std::vector<std::uint32_t>> kLowDimInit = {
    {1},                          // dim 2
    {1, 3},                       // dim 3
    {1, 3, 1},                    // dim 4
    {1, 1, 1},                    // dim 5
    {1, 1, 3, 3},                 // dim 6
    {1, 3, 5, 13},                // dim 7
    {1, 1, 5, 5, 17},             // dim 8
    {1, 1, 5, 5, 5},              // dim 9
    {1, 1, 7, 11, 19},            // dim 10
    {1, 1, 5, 1, 1},              // dim 11
    {1, 1, 1, 3, 11},             // dim 12
    {1, 3, 5, 5, 31},             // dim 13
    {1, 3, 3, 9, 7, 49},          // dim 14
    {1, 1, 1, 15, 21, 21},        // dim 15
    {1, 3, 1, 13, 27, 49},        // dim 16
    {1, 1, 1, 15, 7, 5},          // dim 17
    {1, 3, 1, 15, 13, 25},        // dim 18
    {1, 1, 5, 5, 19, 61},         // dim 19
    {1, 3, 7, 11, 23, 15, 103},   // dim 20
    {1, 3, 7, 13, 13, 15, 69},    // dim 21
};

struct DirectionTable {
  int dims = 0;
  std::vector<std::uint32_t> v;  // dims * 32, row-major

  void build(int want);
};

void DirectionTable::build(int want) {
  if (want <= dims) return;
  v.resize(static_cast<std::size_t>(want) * SobolGenerator::kBits);

  // Enumerate primitive polynomials by degree, then encoding value.
  struct Poly {
    std::uint32_t mask;
    int deg;
  };
  std::vector<Poly> polys;
  for (int deg = 1; static_cast<int>(polys.size()) < want - 1; ++deg) {
    if (deg > 24) throw std::runtime_error("sobol: dimension out of range");
    for (std::uint32_t a = 0; a < (1u << (deg - 1)); ++a) {
      std::uint32_t mask = (1u << deg) | (a << 1) | 1u;
      if (is_primitive(mask, deg)) {
        polys.push_back({mask, deg});
        if (static_cast<int>(polys.size()) == want - 1) break;
      }
    }
  }

  std::uint32_t m[SobolGenerator::kBits];
  for (int d = 0; d < want; ++d) {
    if (d == 0) {
      for (std::uint32_t k = 0; k < SobolGenerator::kBits; ++k) m[k] = 1;
    } else {
      const Poly& p = polys[d - 1];
      const int s = p.deg;
      if (d - 1 < static_cast<int>(kLowDimInit.size())) {
        const auto& init = kLowDimInit[d - 1];
        for (int k = 0; k < s; ++k) m[k] = init[k];
      } else {
        // Deterministic odd initialization for high dimensions.
        std::uint64_t stream = 0x5b1dc0de00000000ULL + static_cast<std::uint64_t>(d);
        for (int k = 0; k < s; ++k) {
          std::uint64_t r = splitmix64(stream);
          m[k] = static_cast<std::uint32_t>(2 * (r % (1ull << k)) + 1);
        }
      }
      for (std::uint32_t k = s; k < SobolGenerator::kBits; ++k) {
        std::uint32_t acc = m[k - s] ^ (m[k - s] << s);
        for (int j = 1; j < s; ++j) {
          if ((p.mask >> (s - j)) & 1u) acc ^= m[k - j] << j;
        }
        m[k] = acc;
      }
    }
    for (std::uint32_t k = 0; k < SobolGenerator::kBits; ++k) {
      v[static_cast<std::size_t>(d) * SobolGenerator::kBits + k] =
          m[k] << (SobolGenerator::kBits - 1 - k);
    }
  }
  dims = want;
}

const DirectionTable& shared_table(int dim) {
  static DirectionTable table;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  if (table.dims < dim) {
    int want = 64;
    while (want < dim) want *= 2;
    table.build(want);
  }
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------
// UniformRng
// ---------------------------------------------------------------------------

UniformRng::UniformRng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t UniformRng::next_u64() {
  auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double UniformRng::next() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

Eigen::VectorXd UniformRng::draw(Eigen::Index n) {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = next();
  return out;
}

RowMatrixXd UniformRng::draw_matrix(Eigen::Index n, Eigen::Index d) {
  RowMatrixXd out(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = next();
  return out;
}

// ---------------------------------------------------------------------------
// van der Corput
// ---------------------------------------------------------------------------

double van_der_corput(std::uint64_t n, int base) {
  if (base < 2) throw std::invalid_argument("van_der_corput: base must be >= 2");
  double inv_base = 1.0 / base;
  double factor = inv_base;
  double value = 0.0;
  while (n) {
    value += static_cast<double>(n % base) * factor;
    n /= base;
    factor *= inv_base;
  }
  return value;
}

// ---------------------------------------------------------------------------
// SobolGenerator
// ---------------------------------------------------------------------------

SobolGenerator::SobolGenerator(int dimension) : dim_(dimension), index_(0) {
  if (dimension < 1 || dimension > kMaxDimension)
    throw std::invalid_argument("sobol: dimension must be in [1, 4096]");
  const DirectionTable& table = shared_table(dimension);
  directions_.assign(table.v.begin(),
                     table.v.begin() + static_cast<std::size_t>(dimension) * kBits);
  state_.assign(dimension, 0);
}

void SobolGenerator::advance_state() {
  // lowest zero bit of the current index selects the direction number
  const int c = std::countr_one(index_);
  ++index_;
  if (c >= static_cast<int>(kBits)) return;  // next call will overflow anyway
  for (int d = 0; d < dim_; ++d) {
    state_[d] ^= directions_[static_cast<std::size_t>(d) * kBits + c];
  }
}

Eigen::VectorXd SobolGenerator::next() {
  if (index_ >= (1ull << 32)) throw std::overflow_error("sobol: index exceeds 2^32 - 1");
  Eigen::VectorXd point(dim_);
  for (int d = 0; d < dim_; ++d) point[d] = static_cast<double>(state_[d]) * kInv32;
  advance_state();
  return point;
}

RowMatrixXd SobolGenerator::next_block(Eigen::Index n) {
  if (index_ + static_cast<std::uint64_t>(n) > (1ull << 32))
    throw std::overflow_error("sobol: index exceeds 2^32 - 1");
  RowMatrixXd out(n, dim_);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int d = 0; d < dim_; ++d) out(i, d) = static_cast<double>(state_[d]) * kInv32;
    advance_state();
  }
  return out;
}

void SobolGenerator::seek(std::uint64_t index) {
  if (index >= (1ull << 32)) throw std::overflow_error("sobol: index exceeds 2^32 - 1");
  std::fill(state_.begin(), state_.end(), 0u);
  std::uint64_t gray = index ^ (index >> 1);
  for (int k = 0; gray; ++k, gray >>= 1) {
    if (gray & 1u) {
      for (int d = 0; d < dim_; ++d)
        state_[d] ^= directions_[static_cast<std::size_t>(d) * kBits + k];
    }
  }
  index_ = index;
}

// ---------------------------------------------------------------------------
// RandomShift
// ---------------------------------------------------------------------------

RandomShift RandomShift::draw(Eigen::Index dim, std::uint64_t seed) {
  UniformRng rng(seed);
  return RandomShift{rng.draw(dim)};
}

Eigen::VectorXd apply_shift(const Eigen::VectorXd& p, const RandomShift& s) {
  if (p.size() != s.delta.size())
    throw std::invalid_argument("apply_shift: dimension mismatch");
  Eigen::VectorXd out = p + s.delta;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out[i] >= 1.0) out[i] -= 1.0;
    if (out[i] >= 1.0) out[i] = 0.0;  // guard against rounding to exactly 1
  }
  return out;
}

void apply_shift_inplace(Eigen::Ref<RowMatrixXd> points, const RandomShift& s) {
  if (points.cols() != s.delta.size())
    throw std::invalid_argument("apply_shift: dimension mismatch");
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const double dj = s.delta[j];
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      double v = points(i, j) + dj;
      if (v >= 1.0) v -= 1.0;
      if (v >= 1.0) v = 0.0;
      points(i, j) = v;
    }
  }
}

}  // namespace qmc
