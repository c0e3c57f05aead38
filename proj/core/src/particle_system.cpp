#include "smolcircle/particle_system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "smolcircle/rng.hpp"

namespace smolcircle {

namespace {

double wrap01(double x) {
  x -= std::floor(x);
  if (x >= 1.0) x = 0.0;  // guard against floor rounding at the boundary
  return x;
}

// signed nearest-image difference in (-1/2, 1/2]
double signed_gap(double from, double to) {
  double d = to - from;
  if (d > 0.5) d -= 1.0;
  if (d <= -0.5) d += 1.0;
  return d;
}

}  // namespace

std::size_t ParticleSystem::alive_count() const {
  std::size_t n = 0;
  for (std::uint8_t a : alive) n += a;
  return n;
}

double ParticleSystem::total_mass() const { return neumaier_sum(m); }

double ParticleSystem::second_moment() const {
  double sum = 0.0, comp = 0.0;
  for (double mi : m) {
    const double term = mi * mi;
    const double t = sum + term;
    if (sum >= term) {
      comp += (sum - t) + term;
    } else {
      comp += (term - t) + sum;
    }
    sum = t;
  }
  return static_cast<double>(size()) * (sum + comp);
}

void ParticleSystem::check_invariants() const {
  std::ostringstream why;
  bool bad = false;
  if (m.size() != x.size() || alive.size() != x.size() || id.size() != x.size()) {
    bad = true;
    why << "array size mismatch; ";
  }
  for (std::size_t i = 0; i < x.size() && !bad; ++i) {
    if (!(x[i] >= 0.0 && x[i] < 1.0)) {
      bad = true;
      why << "position out of [0,1) at slot " << i << ": " << x[i] << "; ";
    }
    if (m[i] < 0.0) {
      bad = true;
      why << "negative mass at slot " << i << "; ";
    }
    if ((m[i] > 0.0) != (alive[i] != 0)) {
      bad = true;
      why << "alive flag inconsistent at slot " << i << "; ";
    }
  }
  const double total = total_mass();
  if (std::abs(total - 1.0) > 1e-9) {
    bad = true;
    why << "total mass " << total << " drifted from 1; ";
  }
  if (bad) {
    std::ostringstream os;
    os << "particle system invariant violated at t=" << time << " step="
       << rng.step_index << ": " << why.str() << "[N=" << size()
       << " alive=" << alive_count() << "]";
    throw std::logic_error(os.str());
  }
}

InitialProfile InitialProfile::monodisperse_uniform() {
  return monodisperse([](double) { return 1.0; });
}

InitialProfile InitialProfile::monodisperse(std::function<double(double)> h) {
  InitialProfile p;
  p.kind = Kind::Monodisperse;
  p.spatial_density = std::move(h);
  return p;
}

InitialProfile InitialProfile::product(std::function<double(double)> h,
                                       std::function<double(double)> mass_quantile) {
  InitialProfile p;
  p.kind = Kind::ProductMeasure;
  p.spatial_density = std::move(h);
  p.mass_quantile = std::move(mass_quantile);
  return p;
}

namespace {

// inverse-CDF table over 4096 cells; sampling is linear within a cell
struct InverseCdf {
  static constexpr std::size_t kCells = 4096;
  std::vector<double> cdf;  // kCells + 1 points, cdf[0] = 0, cdf.back() = 1

  explicit InverseCdf(const std::function<double(double)>& density) {
    cdf.assign(kCells + 1, 0.0);
    for (std::size_t i = 0; i < kCells; ++i) {
      const double xm = (static_cast<double>(i) + 0.5) / kCells;
      const double d = density(xm);
      if (!(d >= 0.0) || !std::isfinite(d)) {
        throw std::invalid_argument("initial density is negative or non-finite");
      }
      cdf[i + 1] = cdf[i] + d;
    }
    const double total = cdf.back();
    if (!(total > 0.0)) {
      throw std::invalid_argument("initial density is not normalizable");
    }
    for (auto& c : cdf) c /= total;
    cdf.back() = 1.0;
  }

  double sample(double u) const {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    if (i == 0) i = 1;
    if (i > kCells) i = kCells;
    const double lo = cdf[i - 1], hi = cdf[i];
    const double frac = (hi > lo) ? (u - lo) / (hi - lo) : 0.5;
    return (static_cast<double>(i - 1) + frac) / kCells;
  }
};

}  // namespace

ParticleSystem sample_initial(std::size_t n, const InitialProfile& profile,
                              std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sample_initial: need N >= 2");
  const InverseCdf icdf(profile.spatial_density);

  ParticleSystem sys;
  sys.x.resize(n);
  sys.m.resize(n);
  sys.alive.assign(n, 1);
  sys.id.resize(n);
  sys.rng.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    sys.id[i] = static_cast<std::uint32_t>(i);
    sys.x[i] = wrap01(icdf.sample(rng::uniform(seed, rng::Tag::InitPosition, i)));
  }

  if (profile.kind == InitialProfile::Kind::Monodisperse) {
    const double mi = 1.0 / static_cast<double>(n);
    std::fill(sys.m.begin(), sys.m.end(), mi);
  } else {
    if (!profile.mass_quantile) {
      throw std::invalid_argument("product profile needs a mass distribution");
    }
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = profile.mass_quantile(rng::uniform(seed, rng::Tag::InitMass, i));
      if (!(r[i] > 0.0) || !std::isfinite(r[i])) {
        throw std::invalid_argument("mass distribution produced a nonpositive draw");
      }
    }
    const double total = neumaier_sum(r);
    for (std::size_t i = 0; i + 1 < n; ++i) sys.m[i] = r[i] / total;
    // final particle takes the remainder: the total is exactly 1
    double partial = 0.0, comp = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double t = partial + sys.m[i];
      comp += (partial >= sys.m[i]) ? (partial - t) + sys.m[i]
                                    : (sys.m[i] - t) + partial;
      partial = t;
    }
    sys.m[n - 1] = 1.0 - (partial + comp);
    if (sys.m[n - 1] <= 0.0) {
      throw std::invalid_argument("remainder mass nonpositive; distribution too skewed");
    }
  }
  return sys;
}

StepResult step(ParticleSystem& sys, const DerivedCoefficients& coeffs,
                const StepParams& params) {
  if (!(params.dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  const std::size_t n = sys.size();
  const double N = static_cast<double>(n);
  const double dt = params.dt;
  const std::uint64_t seed = sys.rng.seed;
  const std::uint64_t stepi = sys.rng.step_index;
  const KernelSpec& kernel = coeffs.kernel();
  const bool additive = kernel.is_additive();

  thread_local std::vector<double> a_i, phi_term, x_old;
  thread_local std::vector<std::uint32_t> order;
  a_i.assign(n, 0.0);
  phi_term.assign(n, 0.0);
  x_old.resize(n);
  order.clear();

  double a_max = 0.0, a_second = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!sys.alive[i]) continue;
    const double rescaled = N * sys.m[i];
    a_i[i] = coeffs.a(rescaled);
    if (a_i[i] > a_max) {
      a_second = a_max;
      a_max = a_i[i];
    } else if (a_i[i] > a_second) {
      a_second = a_i[i];
    }
    if (additive) phi_term[i] = kernel.additive_term(rescaled);
    order.push_back(static_cast<std::uint32_t>(i));
  }

  double w = params.interaction_window;
  if (w <= 0.0) w = std::min(0.49, 6.0 * std::sqrt(a_max * dt));
  if (!(w > 0.0 && w < 0.5)) {
    throw std::invalid_argument("step: interaction window must lie in (0, 1/2)");
  }
  // the window must dominate three standard deviations of the widest pair
  if (params.tail_mode == TailMode::Truncate &&
      w <= 3.0 * std::sqrt((a_max + a_second) * dt)) {
    throw std::invalid_argument(
        "step: window too small for Truncate tail mode; decrease dt or widen it");
  }

  // (a) advance every alive particle by a wrapped Gaussian increment
  std::copy(sys.x.begin(), sys.x.end(), x_old.begin());
  for (std::uint32_t i : order) {
    const double sd = std::sqrt(a_i[i] * dt);
    const double z = rng::normal(seed, rng::Tag::Gaussian, stepi, sys.id[i]);
    sys.x[i] = wrap01(x_old[i] + sd * z);
  }

  // (b) pair sweep over start positions sorted within the window; a pair
  // is a candidate only if it is inside the window at both endpoints
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (x_old[a] != x_old[b]) return x_old[a] < x_old[b];
    return sys.id[a] < sys.id[b];
  });

  struct Candidate {
    double order_key;
    std::uint32_t slot_a, slot_b;
  };
  thread_local std::vector<Candidate> candidates;
  candidates.clear();

  StepResult result;
  const std::size_t alive_n = order.size();
  const LocalTimeTable* table =
      (params.use_local_time_table && params.tail_mode == TailMode::Truncate)
          ? &LocalTimeTable::instance()
          : nullptr;

  // hazards below this never fire in practice and are dropped before the
  // thinning draw; the truncation bias is far below every statistical test
  constexpr double kHazardFloor = 1e-12;
  double cached_a_sum = -1.0, cached_sigma = 0.0, cached_inv_sigma = 0.0;

  for (std::size_t k = 0; k < alive_n; ++k) {
    const std::uint32_t p = order[k];
    const double xp = x_old[p];
    const double ap = a_i[p];
    const double xp_new = sys.x[p];
    for (std::size_t step_l = 1; step_l < alive_n; ++step_l) {
      const std::size_t l = (k + step_l) % alive_n;
      const std::uint32_t q = order[l];
      double gap0 = x_old[q] - xp;
      if (gap0 < 0.0) gap0 += 1.0;  // forward circular gap, wrap included
      if (gap0 >= w) break;  // sorted: all further right-neighbors are farther
      const double d0 = gap0;  // gap0 < w <= 0.49, already the nearest image
      const double d1 = signed_gap(xp_new, sys.x[q]);
      if (std::abs(d1) >= w) continue;

      const double a_sum = ap + a_i[q];
      if (!(a_sum > 0.0)) continue;
      if (a_sum != cached_a_sum) {
        cached_a_sum = a_sum;
        cached_sigma = std::sqrt(a_sum * dt);
        cached_inv_sigma = 1.0 / cached_sigma;
      }
      const double dl =
          table ? cached_sigma * table->normalized(d0 * cached_inv_sigma,
                                                   d1 * cached_inv_sigma)
                : bridge_local_time_mean(d0, d1, a_sum * dt, params.tail_mode);
      if (dl <= 0.0) continue;
      const double phi = additive
                             ? phi_term[p] + phi_term[q]
                             : kernel.phi(N * sys.m[p], N * sys.m[q]);
      const double hazard = phi * dl / N;
      if (hazard <= kHazardFloor) continue;
      result.hazard_sum += hazard;
      const std::uint32_t lo = std::min(sys.id[p], sys.id[q]);
      const std::uint32_t hi = std::max(sys.id[p], sys.id[q]);
      const double u = rng::uniform(seed, rng::Tag::PairThin, stepi, lo, hi);
      // 1 - exp(-h) to better than 5e-5 relative once h < 1e-4
      const double prob = (hazard < 1e-4) ? hazard : -std::expm1(-hazard);
      if (u < prob) {
        candidates.push_back(
            {rng::uniform(seed, rng::Tag::PairOrder, stepi, lo, hi), p, q});
      }
    }
  }

  // (c) resolve candidates in uniformly random order, discarding any whose
  // member already merged this step
  std::sort(candidates.begin(), candidates.end(),
            [&](const Candidate& a, const Candidate& b) {
              if (a.order_key != b.order_key) return a.order_key < b.order_key;
              const auto ka = std::minmax(sys.id[a.slot_a], sys.id[a.slot_b]);
              const auto kb = std::minmax(sys.id[b.slot_a], sys.id[b.slot_b]);
              return ka < kb;
            });

  thread_local std::vector<std::uint8_t> merged_this_step;
  merged_this_step.assign(n, 0);
  for (const Candidate& c : candidates) {
    if (merged_this_step[c.slot_a] || merged_this_step[c.slot_b]) continue;
    if (!sys.alive[c.slot_a] || !sys.alive[c.slot_b]) continue;
    merged_this_step[c.slot_a] = merged_this_step[c.slot_b] = 1;
    const bool a_low = sys.id[c.slot_a] < sys.id[c.slot_b];
    const std::uint32_t surv = a_low ? c.slot_a : c.slot_b;
    const std::uint32_t dead = a_low ? c.slot_b : c.slot_a;
    result.events.push_back({sys.time + dt, sys.id[surv], sys.id[dead],
                             sys.m[surv], sys.m[dead]});
    sys.m[surv] += sys.m[dead];
    sys.m[dead] = 0.0;
    sys.alive[dead] = 0;
  }

  sys.time += dt;
  sys.rng.step_index += 1;
  return result;
}

EmpiricalMeasure empirical_measure(const ParticleSystem& sys) {
  EmpiricalMeasure mu;
  const double N = static_cast<double>(sys.size());
  mu.atoms.reserve(sys.alive_count());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (sys.alive[i]) mu.atoms.push_back({sys.x[i], N * sys.m[i], sys.m[i]});
  }
  return mu;
}

RunResult run(ParticleSystem sys, double t_final,
              const DerivedCoefficients& coeffs, const StepParams& params,
              std::span<const double> snapshot_times) {
  for (double t : snapshot_times) {
    if (t < sys.time - 1e-12 || t > t_final + 1e-12) {
      throw std::invalid_argument("run: snapshot time outside [t0, T]");
    }
  }
  std::vector<double> snaps(snapshot_times.begin(), snapshot_times.end());
  std::sort(snaps.begin(), snaps.end());

  RunResult out;
  const double t0 = sys.time;
  std::size_t next_snap = 0;
  double prev_m2 = sys.second_moment();

  auto emit = [&](double boundary_time) {
    while (next_snap < snaps.size() && snaps[next_snap] <= boundary_time + 1e-12) {
      out.snapshots.push_back(empirical_measure(sys));
      out.stats.snapshots.push_back({sys.time, sys.total_mass(),
                                     sys.second_moment(), sys.alive_count(),
                                     out.events.size()});
      ++next_snap;
    }
  };

  sys.check_invariants();
  emit(t0);

  const auto n_steps = static_cast<std::size_t>(
      std::ceil((t_final - t0) / params.dt - 1e-9));
  for (std::size_t s = 0; s < n_steps; ++s) {
    StepResult r = step(sys, coeffs, params);
    out.stats.accumulated_hazard += r.hazard_sum;
    out.stats.total_events += r.events.size();
    for (auto& e : r.events) out.events.push_back(e);
    const double m2 = sys.second_moment();
    out.stats.min_second_moment_increment =
        std::min(out.stats.min_second_moment_increment, m2 - prev_m2);
    prev_m2 = m2;
    emit(t0 + static_cast<double>(s + 1) * params.dt);
  }
  out.stats.steps = n_steps;
  sys.check_invariants();
  emit(t_final);  // flush any snapshot requested at exactly t_final
  return out;
}

}  // namespace smolcircle
