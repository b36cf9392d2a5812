#include "fdmac/analytic.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <cstdlib>
#include <string>
#include <utility>

namespace fdmac::analytic {

namespace {

// Binary exponentiation for non-negative integer powers. Keeps every formula
// free of libm's pow so results are reproducible across toolchains, and lets
// the summation route share code with the per-term operations exactly.
double pow_int(double base, long long n) {
  double r = 1.0;
  double b = base;
  while (n > 0) {
    if (n & 1) r *= b;
    b *= b;
    n >>= 1;
  }
  return r;
}

// Probability of ending up in a collision-free transmission after colliding
// with exactly one other user for l slots; no argument validation.
double collision_free_start_raw(int l, double p_attempt,
                                const ProtocolParams& params) {
  const int m = params.m_users;
  if (l == 0) return pow_int(1.0 - p_attempt, m - 1);
  if (m == 1) return 0.0;  // no competitor to collide with
  const double pref = (m - 1) * p_attempt * pow_int(1.0 - p_attempt, m - 2);
  const double pm = params.p_miss;
  const double tail = pow_int(pm, 2LL * l - 1);
  return l == params.packet_len ? pref * tail : pref * tail * (1.0 - pm);
}

double residual_success_raw(int l, const ProtocolParams& params) {
  return pow_int(1.0 - params.p_false_alarm, l);
}

struct BisectResult {
  double root;
  double residual;
  int iterations;
};

// Bisection for a fixed-point residual f(p) = p - g(p) that is negative at
// the left edge and positive at the right edge of the open unit interval.
template <typename F>
BisectResult bisect_unit_interval(F&& f, const char* what) {
  constexpr double kLo = 1e-12;
  constexpr double kHi = 1.0 - 1e-12;
  constexpr double kTol = 1e-10;
  constexpr int kCap = 200;

  double lo = kLo, hi = kHi;
  const double flo = f(lo);
  if (std::abs(flo) <= kTol) return {lo, std::abs(flo), 0};
  const double fhi = f(hi);
  if (std::abs(fhi) <= kTol) return {hi, std::abs(fhi), 0};
  if (flo > 0.0 || fhi < 0.0) {
    const bool left = flo > 0.0;
    throw SolverError(std::string(what) + ": residual has no sign change",
                      left ? lo : hi, left ? flo : fhi, 0);
  }
  double mid = lo, fmid = flo;
  for (int it = 1; it <= kCap; ++it) {
    mid = 0.5 * (lo + hi);
    fmid = f(mid);
    if (std::abs(fmid) <= kTol) return {mid, std::abs(fmid), it};
    (fmid < 0.0 ? lo : hi) = mid;
  }
  throw SolverError(std::string(what) + ": iteration cap reached", mid,
                    std::abs(fmid), kCap);
}

}  // namespace

double StationaryDistribution::sum() const {
  double total = 0.0;
  for (const auto& stage : by_stage)
    for (double p : stage) total += p;
  return total;
}

double StationaryDistribution::attempt_probability() const {
  double total = 0.0;
  for (const auto& stage : by_stage) total += stage.front();
  return total;
}

std::int64_t cw_of_stage(int stage, const ProtocolParams& params) {
  params.validate();
  if (stage < 0 || stage > params.w_max)
    throw std::invalid_argument("backoff stage outside [0, w_max]");
  return static_cast<std::int64_t>(params.cw_min) << stage;
}

double attempt_probability(double p_success, const ProtocolParams& params) {
  params.validate();
  if (!(p_success >= 0.0 && p_success <= 1.0))
    throw std::invalid_argument("p_success must lie in [0, 1]");

  const double cw = static_cast<double>(params.cw_min);
  if (params.w_max == 0) return 2.0 / (cw + 1.0);

  double p;
  if (std::abs(2.0 * p_success - 1.0) < 1e-9) {
    // Removable singularity: first-order limit of the general form.
    p = 4.0 / (2.0 * (cw + 1.0) + cw * params.w_max);
  } else {
    const double y = 2.0 * p_success - 1.0;
    const double den =
        y * (cw + 1.0) +
        (1.0 - p_success) * cw *
            (1.0 - pow_int(2.0 - 2.0 * p_success, params.w_max));
    p = 2.0 * y / den;
  }
  if (!(p > 0.0) || p > 1.0 + 1e-9)
    throw ModelDomainError("attempt probability outside (0, 1]", p);
  return std::min(p, 1.0);
}

double collision_free_start_prob(int l, double p_attempt,
                                 const ProtocolParams& params) {
  params.validate();
  if (l < 0 || l > params.packet_len)
    throw std::invalid_argument("collision length outside [0, packet_len]");
  if (!(p_attempt >= 0.0 && p_attempt <= 1.0))
    throw std::invalid_argument("p_attempt must lie in [0, 1]");
  return collision_free_start_raw(l, p_attempt, params);
}

double residual_success_prob(int l, const ProtocolParams& params) {
  params.validate();
  if (l < 0 || l > params.packet_len)
    throw std::invalid_argument("residual length outside [0, packet_len]");
  return residual_success_raw(l, params);
}

double success_probability(double p_attempt, const ProtocolParams& params) {
  params.validate();
  if (!(p_attempt >= 0.0 && p_attempt <= 1.0))
    throw std::invalid_argument("p_attempt must lie in [0, 1]");

  const int len = params.packet_len;
  double ps = 0.0;
  for (int l = 0; l <= len; ++l)
    ps += collision_free_start_raw(l, p_attempt, params) *
          residual_success_raw(len - l, params);
  return ps;
}

double success_probability_closed_form(double p_attempt,
                                       const ProtocolParams& params) {
  params.validate();
  if (!(p_attempt >= 0.0 && p_attempt <= 1.0))
    throw std::invalid_argument("p_attempt must lie in [0, 1]");

  const int m = params.m_users;
  const int len = params.packet_len;
  const double x = 1.0 - params.p_false_alarm;
  const double pm = params.p_miss;
  const double den = x - pm * pm;
  if (std::abs(den) < 1e-12) return success_probability(p_attempt, params);

  double ps = pow_int(1.0 - p_attempt, m - 1) * pow_int(x, len);
  if (m >= 2) {
    const double pref =
        (m - 1) * p_attempt * pow_int(1.0 - p_attempt, m - 2);
    ps += pref * pm * (pow_int(x, len) - pow_int(pm, 2LL * len)) / den;
  }
  return ps;
}

FixedPointSolution solve_fixed_point(const ProtocolParams& params) {
  params.validate();
  if (params.mode != Mode::FullDuplex)
    throw std::invalid_argument("solve_fixed_point requires full-duplex mode");

  auto residual = [&params](double p) {
    return p - attempt_probability(success_probability(p, params), params);
  };
  const BisectResult r = bisect_unit_interval(residual, "fd fixed point");
  return {r.root, success_probability(r.root, params), r.residual,
          r.iterations};
}

StationaryDistribution stationary_distribution(double p_success,
                                               const ProtocolParams& params) {
  params.validate();
  if (!(p_success > 0.0 && p_success <= 1.0))
    throw std::invalid_argument("p_success must lie in (0, 1]");

  const int stages = params.w_max + 1;
  std::vector<std::int64_t> width(stages), offset(stages);
  std::int64_t n = 0;
  for (int w = 0; w < stages; ++w) {
    width[w] = static_cast<std::int64_t>(params.cw_min) << w;
    offset[w] = n;
    n += width[w];
  }
  if (n > 5'000'000)
    throw std::invalid_argument("backoff chain too large for a direct solve");

  StationaryDistribution dist;
  dist.by_stage.resize(stages);
  if (n == 1) {
    dist.by_stage[0] = {1.0};
    return dist;
  }

  // Balance equations (P^T - I) pi = 0 with pi anchored at the state
  // (counter 0, stage 0): drop that state's equation, move its column to the
  // right-hand side, solve the reduced sparse system, then renormalize.
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(3 * n));
  auto add = [&entries](std::int64_t to, std::int64_t from, double prob) {
    entries.emplace_back(static_cast<int>(to), static_cast<int>(from), prob);
  };
  for (std::int64_t i = 0; i < n; ++i) add(i, i, -1.0);
  for (int w = 0; w < stages; ++w) {
    for (std::int64_t c = 1; c < width[w]; ++c)  // counter ticks down
      add(offset[w] + c - 1, offset[w] + c, 1.0);
    const std::int64_t from = offset[w];
    const double q_ok = p_success / static_cast<double>(width[0]);
    for (std::int64_t c = 0; c < width[0]; ++c) add(c, from, q_ok);
    const int up = std::min(w + 1, params.w_max);
    const double q_fail = (1.0 - p_success) / static_cast<double>(width[up]);
    if (q_fail > 0.0)
      for (std::int64_t c = 0; c < width[up]; ++c)
        add(offset[up] + c, from, q_fail);
  }

  const int reduced = static_cast<int>(n) - 1;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(reduced);
  std::vector<Triplet> kept;
  kept.reserve(entries.size());
  for (const auto& t : entries) {
    if (t.row() == 0) continue;
    if (t.col() == 0)
      rhs[t.row() - 1] -= t.value();
    else
      kept.emplace_back(t.row() - 1, t.col() - 1, t.value());
  }
  Eigen::SparseMatrix<double> mat(reduced, reduced);
  mat.setFromTriplets(kept.begin(), kept.end());
  mat.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(mat);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("stationary distribution: factorization failed");
  Eigen::VectorXd y = solver.solve(rhs);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("stationary distribution: solve failed");

  std::vector<double> pi(static_cast<std::size_t>(n));
  pi[0] = 1.0;
  double total = 1.0;
  for (int i = 0; i < reduced; ++i) {
    double v = y[i];
    if (v < 0.0) {
      if (v < -1e-9)
        throw std::runtime_error(
            "stationary distribution: negative probability mass");
      v = 0.0;
    }
    pi[static_cast<std::size_t>(i) + 1] = v;
    total += v;
  }
  for (int w = 0; w < stages; ++w) {
    auto& stage = dist.by_stage[w];
    stage.resize(static_cast<std::size_t>(width[w]));
    for (std::int64_t c = 0; c < width[w]; ++c)
      stage[static_cast<std::size_t>(c)] =
          pi[static_cast<std::size_t>(offset[w] + c)] / total;
  }
  return dist;
}

double avg_success_length(const ProtocolParams& params) {
  params.validate();
  const double pf = params.p_false_alarm;
  if (pf == 0.0) return static_cast<double>(params.packet_len);
  // Mean of min(first false-alarm slot, packet_len):
  // sum_{l=0}^{L-1} (1-pf)^l, evaluated stably.
  return -std::expm1(params.packet_len * std::log1p(-pf)) / pf;
}

double avg_collision_length(double p_attempt, const ProtocolParams& params) {
  params.validate();
  if (!(p_attempt > 0.0 && p_attempt <= 1.0))
    throw std::invalid_argument("p_attempt must lie in (0, 1]");

  const int m = params.m_users;
  const double pe = pow_int(1.0 - p_attempt, m);
  const double psu = m * p_attempt * pow_int(1.0 - p_attempt, m - 1);
  const double pc = 1.0 - pe - psu;
  if (m < 2 || !(pc > 0.0))
    throw UndefinedQuantityError(
        "mean collision length undefined: collisions have zero probability");

  const double pm2 = params.p_miss * params.p_miss;
  const double pairs = 0.5 * m * (m - 1);
  const double two_user =
      pairs * p_attempt * p_attempt * pow_int(1.0 - p_attempt, m - 2);
  // Only two-user collisions can outlive the first slot; they extend while
  // both transmitters keep missing each other.
  return 1.0 +
         two_user * pm2 *
             (1.0 - pow_int(params.p_miss, 2LL * params.packet_len - 2)) /
             (pc * (1.0 - pm2));
}

ThroughputReport throughput(double p_attempt, const ProtocolParams& params) {
  params.validate();
  if (!(p_attempt > 0.0 && p_attempt <= 1.0))
    throw std::invalid_argument("p_attempt must lie in (0, 1]");

  ThroughputReport rep;
  const int m = params.m_users;
  rep.p_empty = pow_int(1.0 - p_attempt, m);
  rep.p_single_success = m * p_attempt * pow_int(1.0 - p_attempt, m - 1);
  rep.p_collision = 1.0 - rep.p_empty - rep.p_single_success;
  rep.len_success = avg_success_length(params);
  rep.len_collision = (m >= 2 && rep.p_collision > 0.0)
                          ? avg_collision_length(p_attempt, params)
                          : 1.0;
  const double difs = static_cast<double>(params.difs);
  const double denom = rep.p_empty +
                       rep.p_single_success * (rep.len_success + difs) +
                       rep.p_collision * (rep.len_collision + difs);
  rep.throughput = rep.p_single_success * rep.len_success / denom;
  return rep;
}

FixedPointSolution csma_solve(const ProtocolParams& params) {
  params.validate();
  if (params.mode != Mode::CsmaCa)
    throw std::invalid_argument("csma_solve requires csma mode");

  const int m = params.m_users;
  auto residual = [&](double tau) {
    return tau - attempt_probability(pow_int(1.0 - tau, m - 1), params);
  };
  const BisectResult r = bisect_unit_interval(residual, "csma fixed point");
  return {r.root, pow_int(1.0 - r.root, m - 1), r.residual, r.iterations};
}

ThroughputReport csma_throughput_at(double tau, const ProtocolParams& params) {
  params.validate();
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("tau must lie in (0, 1]");

  ThroughputReport rep;
  const int m = params.m_users;
  const double len = static_cast<double>(params.packet_len);
  rep.p_empty = pow_int(1.0 - tau, m);
  rep.p_single_success = m * tau * pow_int(1.0 - tau, m - 1);
  rep.p_collision = 1.0 - rep.p_empty - rep.p_single_success;
  // Blind transmitters always spend the full packet, successful or not.
  rep.len_success = len;
  rep.len_collision = len;
  const double difs = static_cast<double>(params.difs);
  const double denom =
      rep.p_empty + (rep.p_single_success + rep.p_collision) * (len + difs);
  rep.throughput = rep.p_single_success * len / denom;
  return rep;
}

ThroughputReport csma_throughput(const ProtocolParams& params) {
  return csma_throughput_at(csma_solve(params).p_attempt, params);
}

Analysis analyze(const ProtocolParams& params) {
  if (params.mode == Mode::FullDuplex) {
    const FixedPointSolution sol = solve_fixed_point(params);
    return {sol, throughput(sol.p_attempt, params)};
  }
  const FixedPointSolution sol = csma_solve(params);
  return {sol, csma_throughput_at(sol.p_attempt, params)};
}

}  // namespace fdmac::analytic
