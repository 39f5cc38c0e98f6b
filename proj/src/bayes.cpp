/**
 * Copyright 2026 The qfpsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "qfp/bayes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qfp/errors.hpp"
#include "qfp/rng.hpp"
#include "qfp/serialize.hpp"
#include "qfp/transfer.hpp"

namespace qfp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Floor applied to uniform draws before taking logarithms.
constexpr double kLogFloor = 1e-300;
// Shrinkage iterations before a coordinate update gives up and stays put
// (reachable only through floating-point collapse of the bracket).
constexpr int kMaxShrink = 1000;
// Adaptation batch length for the pCN step size during burn-in.
constexpr int kAdaptBatch = 50;
// Posterior fidelity spread that marks a gate posterior as carrying no
// information beyond the prior.  Standard-normal latents pushed through the
// isometry-corner map give a controlled-NOT fidelity spread of about 0.09;
// half of that separates "data-driven" from "prior-driven" comfortably.
constexpr double kNonIdentifiableFidelityStd = 0.045;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

/// log P(c | Poisson(mean)) up to the c-dependent constant log(c!).
double poisson_term(long long c, double mean) {
  if (!std::isfinite(mean)) return -kInf;
  if (mean <= 0.0) return c > 0 ? -kInf : 0.0;
  const double lc = static_cast<double>(c);
  return (c > 0 ? lc * std::log(mean) : 0.0) - mean;
}

/// Integrated autocorrelation time of a scalar series via Geyer's initial
/// positive sequence: lag covariances are summed in adjacent pairs until a
/// pair turns non-positive.  Returns the series length for a (numerically)
/// constant series, which cannot certify any mixing.
double integrated_autocorr(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  if (n < 4) return 1.0;
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  auto gamma = [&](int k) {
    double s = 0.0;
    for (int t = 0; t + k < n; ++t) s += (x[t] - mean) * (x[t + k] - mean);
    return s / n;
  };
  const double g0 = gamma(0);
  if (!(g0 > 0.0)) return static_cast<double>(n);
  const int max_lag = std::min(n - 2, 2000);
  double sum = g0;
  for (int j = 1; 2 * j <= max_lag; ++j) {
    const double pair = gamma(2 * j - 1) + gamma(2 * j);
    if (pair <= 0.0) break;
    sum += 2.0 * pair;
  }
  return std::max(1e-3, sum / g0);
}

/// Autocorrelation is measured on the log-density series: latent vectors
/// usually carry gauge directions the model never sees (e.g. the unitary
/// freedom of a Cholesky-like factor), which mix arbitrarily slowly without
/// affecting any reported quantity.  The log density is gauge-invariant.
/// When it is numerically constant (e.g. prior sampling under a flat
/// likelihood) the first latent coordinate is used instead.
void finish_diagnostics(ChainDiagnostics& d,
                        const std::vector<double>& log_trace,
                        const std::vector<double>& z0_trace, double acceptance,
                        std::uint64_t seed, int burn_in, int thinning) {
  const std::size_t n = log_trace.size();
  double mean = 0.0, var = 0.0;
  for (double v : log_trace) mean += v;
  mean /= std::max<std::size_t>(n, 1);
  for (double v : log_trace) var += (v - mean) * (v - mean);
  var /= std::max<std::size_t>(n, 1);
  d.acceptance = acceptance;
  d.autocorr_time =
      var > 1e-20 ? integrated_autocorr(log_trace) : integrated_autocorr(z0_trace);
  d.seed = seed;
  d.burn_in = burn_in;
  d.thinning = thinning;
  d.mixing_warning = d.autocorr_time > static_cast<double>(n) / 20.0 ||
                     d.acceptance < 0.05;
}

void check_chain_plan(const char* who, int dim, int n, int burn_in,
                      int thinning) {
  if (dim < 1) throw ConfigError(std::string(who) + ": empty start point");
  if (n < 1)
    throw ConfigError(std::string(who) + ": sample count must be positive");
  if (burn_in < 0)
    throw ConfigError(std::string(who) + ": burn-in must be non-negative");
  if (thinning < 1)
    throw ConfigError(std::string(who) + ": thinning must be positive");
  const long long total =
      static_cast<long long>(burn_in) + static_cast<long long>(n) * thinning;
  if (total > 100'000'000LL)
    throw ResourceError(std::string(who) + ": sweep budget " +
                        std::to_string(total) + " is unreasonably large");
}

}  // namespace

nlohmann::json ChainDiagnostics::to_json() const {
  return nlohmann::json{{"acceptance", acceptance},
                        {"autocorr_time", autocorr_time},
                        {"seed", seed},
                        {"burn_in", burn_in},
                        {"thinning", thinning},
                        {"mixing_warning", mixing_warning}};
}

LatentChain slice_sample(const LogDensity& log_target,
                         const Eigen::VectorXd& z0, int n, std::uint64_t seed,
                         const SliceOptions& opts) {
  const int dim = static_cast<int>(z0.size());
  check_chain_plan("slice_sample", dim, n, opts.burn_in, opts.thinning);
  if (!(opts.width > 0.0) || !std::isfinite(opts.width))
    throw ConfigError("slice_sample: bracket width must be positive");
  if (opts.max_step_out < 1)
    throw ConfigError("slice_sample: max_step_out must be positive");

  Eigen::VectorXd z = z0;
  double lp = log_target(z);
  if (!std::isfinite(lp))
    throw ConfigError(
        "slice_sample: log target is not finite at the start point");

  Rng rng(seed);
  const int total = opts.burn_in + n * opts.thinning;
  LatentChain chain;
  chain.samples.reserve(n);
  std::vector<double> log_trace, z0_trace;
  log_trace.reserve(static_cast<std::size_t>(n) * opts.thinning);
  z0_trace.reserve(static_cast<std::size_t>(n) * opts.thinning);

  for (int sweep = 0; sweep < total; ++sweep) {
    for (int i = 0; i < dim; ++i) {
      const double x0 = z[i];
      const double level =
          lp + std::log(std::max(rng.uniform(), kLogFloor));
      auto eval = [&](double x) {
        z[i] = x;
        return log_target(z);
      };
      // Stepping out: place a width-w bracket around x0 and extend each end
      // while it still lies inside the slice, with a randomized split of the
      // total extension budget (Neal's procedure).
      double lo = x0 - opts.width * rng.uniform();
      double hi = lo + opts.width;
      int lo_budget = static_cast<int>(
          std::floor(opts.max_step_out * rng.uniform()));
      int hi_budget = opts.max_step_out - 1 - lo_budget;
      while (lo_budget > 0 && eval(lo) > level) {
        lo -= opts.width;
        --lo_budget;
      }
      while (hi_budget > 0 && eval(hi) > level) {
        hi += opts.width;
        --hi_budget;
      }
      // Shrinkage: sample uniformly inside the bracket, shrinking toward x0
      // on rejection.  Terminates with probability one.
      bool moved = false;
      for (int tries = 0; tries < kMaxShrink; ++tries) {
        const double x1 = lo + (hi - lo) * rng.uniform();
        const double lx = eval(x1);
        if (lx > level) {
          lp = lx;
          moved = true;
          break;
        }
        if (x1 < x0)
          lo = x1;
        else
          hi = x1;
      }
      if (!moved) z[i] = x0;  // bracket collapsed onto the start point
    }
    if (sweep >= opts.burn_in) {
      log_trace.push_back(lp);
      z0_trace.push_back(z[0]);
      if ((sweep - opts.burn_in + 1) % opts.thinning == 0)
        chain.samples.push_back(z);
    }
  }
  finish_diagnostics(chain.diagnostics, log_trace, z0_trace, 1.0, seed,
                     opts.burn_in, opts.thinning);
  return chain;
}

LatentChain pcn_sample(const LogDensity& log_likelihood,
                       const Eigen::VectorXd& z0, double beta, int n,
                       std::uint64_t seed, const PcnOptions& opts) {
  const int dim = static_cast<int>(z0.size());
  check_chain_plan("pcn_sample", dim, n, opts.burn_in, opts.thinning);
  if (!(beta > 0.0) || !(beta <= 1.0))
    throw ConfigError("pcn_sample: step size must lie in (0, 1]");
  if (!(opts.target_acceptance > 0.0) || !(opts.target_acceptance < 1.0))
    throw ConfigError("pcn_sample: target acceptance must lie in (0, 1)");

  Eigen::VectorXd z = z0;
  double ll = log_likelihood(z);
  if (!std::isfinite(ll))
    throw ConfigError(
        "pcn_sample: log likelihood is not finite at the start point");

  Rng rng(seed);
  const int total = opts.burn_in + n * opts.thinning;
  LatentChain chain;
  chain.samples.reserve(n);
  std::vector<double> log_trace, z0_trace;
  log_trace.reserve(static_cast<std::size_t>(n) * opts.thinning);
  z0_trace.reserve(static_cast<std::size_t>(n) * opts.thinning);

  double b = beta;
  Eigen::VectorXd xi(dim), zp(dim);
  long long post_total = 0, post_accepts = 0;
  int batch_count = 0, batch_accepts = 0;

  for (int sweep = 0; sweep < total; ++sweep) {
    for (int i = 0; i < dim; ++i) xi[i] = rng.normal();
    const double root = std::sqrt(std::max(0.0, 1.0 - b * b));
    zp = root * z + b * xi;
    const double llp = log_likelihood(zp);
    const double logu = std::log(std::max(rng.uniform(), kLogFloor));
    const bool accept = logu < llp - ll;
    if (accept) {
      z.swap(zp);
      ll = llp;
    }
    if (sweep < opts.burn_in) {
      if (opts.adapt) {
        batch_accepts += accept ? 1 : 0;
        if (++batch_count == kAdaptBatch) {
          const double rate =
              static_cast<double>(batch_accepts) / kAdaptBatch;
          b = rate > opts.target_acceptance ? std::min(1.0, b * 1.15)
                                            : std::max(1e-4, b / 1.15);
          batch_count = 0;
          batch_accepts = 0;
        }
      }
    } else {
      ++post_total;
      post_accepts += accept ? 1 : 0;
      log_trace.push_back(ll);
      z0_trace.push_back(z[0]);
      if ((sweep - opts.burn_in + 1) % opts.thinning == 0)
        chain.samples.push_back(z);
    }
  }
  const double acceptance =
      post_total > 0
          ? static_cast<double>(post_accepts) / static_cast<double>(post_total)
          : 1.0;
  finish_diagnostics(chain.diagnostics, log_trace, z0_trace, acceptance, seed,
                     opts.burn_in, opts.thinning);
  return chain;
}

std::string sampler_label(SamplerKind kind) {
  return kind == SamplerKind::kSlice ? "slice" : "pcn";
}

SamplerKind sampler_from_label(const std::string& label) {
  if (label == "slice") return SamplerKind::kSlice;
  if (label == "pcn") return SamplerKind::kPcn;
  throw ConfigError("unknown sampler '" + label + "' (expected slice or pcn)");
}

void InferenceOptions::validate() const {
  if (sweeps < 4 || sweeps > 50'000'000)
    throw ConfigError("inference: sweeps must lie in [4, 5e7]");
  if (!(burn_in_fraction >= 0.0) || !(burn_in_fraction <= 0.95))
    throw ConfigError("inference: burn_in_fraction must lie in [0, 0.95]");
  if (retain < 2)
    throw ConfigError("inference: need at least two retained samples");
  if (chains < 1 || chains > 64)
    throw ConfigError("inference: chains must lie in [1, 64]");
  if (!(pcn_beta > 0.0) || !(pcn_beta <= 1.0))
    throw ConfigError("inference: pcn_beta must lie in (0, 1]");
  if (!(slice_width > 0.0) || !std::isfinite(slice_width))
    throw ConfigError("inference: slice_width must be positive");
}

// ---------------------------------------------------------------------------
// Latent parametrizations (valid model objects by construction).

CMat qst_latent_state(const Eigen::VectorXd& z) {
  if (z.size() != 8)
    throw ConfigError("qst_latent_state: expected 8 latents, got " +
                      std::to_string(z.size()));
  CMat g(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const int flat = 2 * i + j;
      g(i, j) = std::complex<double>(z[2 * flat], z[2 * flat + 1]);
    }
  CMat h = g * g.adjoint();
  const double tr = h.trace().real();
  if (!(tr > 1e-200)) return CMat::Identity(2, 2) * 0.5;
  return h / tr;
}

namespace {

/// Polar factor X (X^dag X)^{-1/2} of a tall complex matrix; columns come
/// out orthonormal.  Falls back to the identity-block isometry when X is
/// (numerically) column-rank-deficient.
CMat polar_isometry(const CMat& x) {
  const auto cols = x.cols();
  Eigen::SelfAdjointEigenSolver<CMat> es(x.adjoint() * x);
  const Eigen::VectorXd lam = es.eigenvalues();
  const double lead = lam[cols - 1];
  if (!(lam[0] > 1e-13 * std::max(lead, 1e-300))) {
    CMat v = CMat::Zero(x.rows(), cols);
    v.topLeftCorner(cols, cols).setIdentity();
    return v;
  }
  CMat inv_root = es.eigenvectors() *
                  lam.cwiseSqrt().cwiseInverse().asDiagonal() *
                  es.eigenvectors().adjoint();
  return x * inv_root;
}

CMat complex_from_latents(const Eigen::VectorXd& z, int rows, int cols) {
  CMat x(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int flat = cols * r + c;
      x(r, c) = std::complex<double>(z[2 * flat], z[2 * flat + 1]);
    }
  return x;
}

}  // namespace

KrausSet qpt_latent_channel(const Eigen::VectorXd& z) {
  if (z.size() != 32)
    throw ConfigError("qpt_latent_channel: expected 32 latents, got " +
                      std::to_string(z.size()));
  const CMat v = polar_isometry(complex_from_latents(z, 8, 2));
  KrausSet k;
  k.ops.reserve(4);
  for (int b = 0; b < 4; ++b) k.ops.push_back(v.block(2 * b, 0, 2, 2));
  return k;
}

CMat cnot_latent_corner(const Eigen::VectorXd& z) {
  if (z.size() != 64)
    throw ConfigError("cnot_latent_corner: expected 64 latents, got " +
                      std::to_string(z.size()));
  const CMat v = polar_isometry(complex_from_latents(z, 8, 4));
  return v.topLeftCorner(4, 4);
}

CMat cnot_pair_lift(const CMat& corner) {
  if (corner.rows() != 4 || corner.cols() != 4)
    throw ConfigError("cnot_pair_lift: corner must be 4x4");
  CMat w(4, 4);
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          w(2 * r + s, 2 * k + l) =
              corner(r, k) * corner(2 + s, 2 + l) +
              corner(2 + s, k) * corner(r, 2 + l);
  return w;
}

double cnot_gauge_fidelity(const CMat& corner) {
  const CMat w = cnot_pair_lift(corner);
  static const CMat t = target_gate("cnot").t;
  const double tn = t.squaredNorm();
  const double wn = w.squaredNorm();
  if (!(wn > 1e-300)) return 0.0;

  // The counting model fixes each monitored row and column of the corner
  // only up to a phase; on the two-photon block those eight phases act as
  // e^{i(a_r + b_s + c_k + d_l)} on entry ((r,s),(k,l)).  Maximize
  // |tr(W'^dag T)| over them by aligning one phase group at a time against
  // the other three (monotone ascent), from a few deterministic starts.
  const CMat m = t.conjugate().cwiseProduct(w);
  double best = 0.0;
  Rng starts(0x9e3779b97f4a7c15ULL);
  for (int attempt = 0; attempt < 4; ++attempt) {
    std::array<std::array<double, 2>, 4> ph{};  // a_r, b_s, c_k, d_l
    if (attempt > 0)
      for (auto& group : ph)
        for (double& p : group) p = starts.uniform(0.0, 2.0 * M_PI);
    auto entry_phase = [&](int group, int r, int s, int k, int l) {
      double sum = 0.0;
      if (group != 0) sum += ph[0][r];
      if (group != 1) sum += ph[1][s];
      if (group != 2) sum += ph[2][k];
      if (group != 3) sum += ph[3][l];
      return sum;
    };
    double prev = -1.0;
    for (int iter = 0; iter < 100; ++iter) {
      for (int group = 0; group < 4; ++group) {
        for (int v = 0; v < 2; ++v) {
          std::complex<double> s_sum = 0.0;
          for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s)
              for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                  const int idx = group == 0 ? r : group == 1 ? s
                                           : group == 2 ? k : l;
                  if (idx != v) continue;
                  s_sum += m(2 * r + s, 2 * k + l) *
                           std::polar(1.0, entry_phase(group, r, s, k, l));
                }
          if (std::abs(s_sum) > 0.0) ph[group][v] = -std::arg(s_sum);
        }
      }
      std::complex<double> tot = 0.0;
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l)
              tot += m(2 * r + s, 2 * k + l) *
                     std::polar(1.0, ph[0][r] + ph[1][s] + ph[2][k] +
                                         ph[3][l]);
      const double obj = std::abs(tot);
      if (obj - prev < 1e-13) {
        prev = obj;
        break;
      }
      prev = obj;
    }
    best = std::max(best, prev);
  }
  return best * best / (tn * wn);
}

// ---------------------------------------------------------------------------
// Generic multi-chain runner.

namespace {

struct ModelSpec {
  int dim = 0;
  LogDensity log_likelihood;
  SamplerKind default_sampler = SamplerKind::kPcn;
};

struct ChainPlan {
  SamplerKind kind;
  int burn_in = 0;
  int thinning = 1;
  int per_chain = 0;
};

ChainPlan plan_chains(const ModelSpec& model, const InferenceOptions& opts) {
  opts.validate();
  ChainPlan plan;
  plan.kind = opts.sampler.value_or(model.default_sampler);
  plan.burn_in = static_cast<int>(opts.sweeps * opts.burn_in_fraction);
  const int post = opts.sweeps - plan.burn_in;
  const int quota = (opts.retain + opts.chains - 1) / opts.chains;
  if (post < quota)
    throw ConfigError(
        "inference: sweep budget too small for the retained-sample quota");
  plan.thinning = std::max(1, post / quota);
  plan.per_chain = post / plan.thinning;
  return plan;
}

LatentChain run_chains(const ModelSpec& model, const InferenceOptions& opts) {
  const ChainPlan plan = plan_chains(model, opts);

  // Log prior of the standard-normal latents; pCN builds it into the
  // proposal, slice sampling needs it in the target.
  const LogDensity likelihood = model.log_likelihood;
  const LogDensity target = [likelihood](const Eigen::VectorXd& z) {
    return likelihood(z) - 0.5 * z.squaredNorm();
  };

  std::vector<LatentChain> chains(opts.chains);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < opts.chains; ++c) {
    try {
      // Start each chain at the best of a fixed number of its own prior
      // draws; burn-in then only has to explore locally.
      Rng init = Rng::substream(opts.seed, "chain-init",
                                static_cast<std::uint64_t>(c));
      Eigen::VectorXd draw(model.dim), z0(model.dim);
      double best_ll = -kInf;
      for (int attempt = 0; attempt < 100; ++attempt) {
        for (int i = 0; i < model.dim; ++i) draw[i] = init.normal();
        const double ll = likelihood(draw);
        if (ll > best_ll) {
          best_ll = ll;
          z0 = draw;
        }
      }
      if (!std::isfinite(best_ll))
        throw ConfigError(
            "inference: no finite-likelihood start point found in 100 prior "
            "draws");
      const std::uint64_t chain_seed =
          Rng::derive_seed(opts.seed, "chain", static_cast<std::uint64_t>(c));
      if (plan.kind == SamplerKind::kSlice) {
        SliceOptions so;
        so.width = opts.slice_width;
        so.burn_in = plan.burn_in;
        so.thinning = plan.thinning;
        chains[c] =
            slice_sample(target, z0, plan.per_chain, chain_seed, so);
      } else {
        PcnOptions po;
        po.burn_in = plan.burn_in;
        po.thinning = plan.thinning;
        po.adapt = true;
        chains[c] = pcn_sample(likelihood, z0, opts.pcn_beta, plan.per_chain,
                               chain_seed, po);
      }
    } catch (...) {
#pragma omp critical(qfp_bayes_chain_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  // Merge in chain order so results are independent of scheduling.
  LatentChain merged;
  merged.samples.reserve(static_cast<std::size_t>(plan.per_chain) *
                         opts.chains);
  double acc = 0.0, tau = 0.0;
  bool warn = false;
  for (const LatentChain& ch : chains) {
    merged.samples.insert(merged.samples.end(), ch.samples.begin(),
                          ch.samples.end());
    acc += ch.diagnostics.acceptance;
    tau = std::max(tau, ch.diagnostics.autocorr_time);
    warn = warn || ch.diagnostics.mixing_warning;
  }
  merged.diagnostics.acceptance = acc / opts.chains;
  merged.diagnostics.autocorr_time = tau;
  merged.diagnostics.seed = opts.seed;
  merged.diagnostics.burn_in = plan.burn_in;
  merged.diagnostics.thinning = plan.thinning;
  merged.diagnostics.mixing_warning = warn;
  return merged;
}

nlohmann::json options_metadata(const InferenceOptions& opts,
                                const ChainPlan& plan, std::size_t retained) {
  nlohmann::json j{{"sampler", sampler_label(plan.kind)},
                   {"sweeps", opts.sweeps},
                   {"burn_in", plan.burn_in},
                   {"thinning", plan.thinning},
                   {"chains", opts.chains},
                   {"retained", retained},
                   {"seed", opts.seed}};
  if (plan.kind == SamplerKind::kPcn)
    j["initial_beta"] = opts.pcn_beta;
  else
    j["slice_width"] = opts.slice_width;
  return j;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

void fill_fidelity(InferenceReport& rep, std::vector<double> f) {
  const double n = static_cast<double>(f.size());
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : f) var += (v - mean) * (v - mean);
  var /= n;
  std::sort(f.begin(), f.end());
  rep.has_fidelity = true;
  rep.fidelity_mean = mean;
  rep.fidelity_std = std::sqrt(var);
  rep.fidelity_q025 = quantile_sorted(f, 0.025);
  rep.fidelity_q975 = quantile_sorted(f, 0.975);
}

// ---------------------------------------------------------------------------
// State tomography.

struct QstData {
  double flux = 0.0;
  DetectorModel detector;
  std::vector<MeasurementSetting> settings;
  std::vector<std::array<long long, 2>> counts;
  bool multinomial = false;
};

QstData parse_qst(const CountRecord& record,
                  const std::vector<MeasurementSetting>& overrides,
                  bool multinomial) {
  const std::string ctx = "qst_infer";
  record.validate();
  if (record.kind != "qst")
    throw ConfigError(ctx + ": record kind '" + record.kind +
                      "' is not state tomography");
  QstData data;
  data.multinomial = multinomial;
  data.flux = get_required<double>(record.metadata, "flux_hz", ctx);
  if (!std::isfinite(data.flux) || data.flux < 0.0)
    throw ConfigError(ctx + ": flux must be non-negative");
  if (!record.metadata.contains("detector"))
    throw ConfigError(ctx + ": missing required key 'detector'");
  data.detector = DetectorModel::from_json(record.metadata.at("detector"));
  data.detector.validate();

  if (!overrides.empty()) {
    data.settings = overrides;
  } else {
    if (!record.metadata.contains("settings"))
      throw ConfigError(ctx + ": missing required key 'settings'");
    const nlohmann::json& js = record.metadata.at("settings");
    if (!js.is_array())
      throw ConfigError(ctx + ": 'settings' must be an array");
    for (const nlohmann::json& item : js) {
      MeasurementSetting s;
      s.axis = axis_from_label(get_required<std::string>(item, "axis", ctx));
      s.success = get_required<double>(item, "success", ctx);
      data.settings.push_back(s);
    }
  }
  std::set<PauliAxis> axes;
  for (const MeasurementSetting& s : data.settings) {
    s.validate();
    axes.insert(s.axis);
  }
  if (axes.size() < 3 || axes.size() != data.settings.size())
    throw ConfigError(ctx +
                      ": need at least three distinct measurement axes");
  for (const MeasurementSetting& s : data.settings) {
    const std::string label = axis_label(s.axis);
    data.counts.push_back(
        {record.count_of(label, "0"), record.count_of(label, "1")});
  }
  return data;
}

LogDensity qst_likelihood(const QstData& data) {
  return [data](const Eigen::VectorXd& z) {
    const CMat rho = qst_latent_state(z);
    const double t = data.detector.integration_seconds;
    const double eta = data.detector.efficiency;
    const double dark = data.detector.dark_rate_hz() * t;
    double ll = 0.0;
    for (std::size_t i = 0; i < data.settings.size(); ++i) {
      const auto [p0, p1] = projection_probs(rho, data.settings[i]);
      const double scale = data.flux * t * data.settings[i].success * eta;
      const double m0 = scale * p0 + dark;
      const double m1 = scale * p1 + dark;
      if (data.multinomial) {
        // Condition on the per-setting total: binomial in the outcome split.
        const double tot = m0 + m1;
        auto cat_term = [](long long c, double q) {
          if (q <= 0.0) return c > 0 ? -kInf : 0.0;
          return c > 0 ? static_cast<double>(c) * std::log(q) : 0.0;
        };
        if (!(tot > 0.0)) {
          if (data.counts[i][0] + data.counts[i][1] > 0) return -kInf;
          continue;
        }
        ll += cat_term(data.counts[i][0], m0 / tot) +
              cat_term(data.counts[i][1], m1 / tot);
      } else {
        ll += poisson_term(data.counts[i][0], m0) +
              poisson_term(data.counts[i][1], m1);
      }
    }
    return ll;
  };
}

}  // namespace

QstPosterior qst_posterior(const CountRecord& record,
                           const std::vector<MeasurementSetting>& settings,
                           const InferenceOptions& opts) {
  const QstData data = parse_qst(record, settings, opts.multinomial);
  ModelSpec model;
  model.dim = 8;
  model.log_likelihood = qst_likelihood(data);
  model.default_sampler = SamplerKind::kPcn;
  LatentChain chain = run_chains(model, opts);
  QstPosterior post;
  post.states.reserve(chain.samples.size());
  for (const Eigen::VectorXd& z : chain.samples)
    post.states.push_back(qst_latent_state(z));
  post.diagnostics = chain.diagnostics;
  return post;
}

InferenceReport qst_infer(const CountRecord& record,
                          const std::vector<MeasurementSetting>& settings,
                          const InferenceOptions& opts,
                          const std::optional<CMat>& target_rho) {
  const QstPosterior post = qst_posterior(record, settings, opts);
  ModelSpec model;
  model.dim = 8;
  model.default_sampler = SamplerKind::kPcn;
  const ChainPlan plan = plan_chains(model, opts);

  InferenceReport rep;
  CMat mean = CMat::Zero(2, 2);
  for (const CMat& s : post.states) mean += s;
  mean /= static_cast<double>(post.states.size());
  rep.mean = nlohmann::json{{"state", mat_to_json(mean)}};
  if (target_rho) {
    const DensityMatrix target{*target_rho};
    target.validate();
    std::vector<double> f;
    f.reserve(post.states.size());
    for (const CMat& s : post.states)
      f.push_back(state_fidelity(DensityMatrix{s}, target));
    fill_fidelity(rep, std::move(f));
  }
  rep.diagnostics = post.diagnostics;
  if (post.diagnostics.mixing_warning) rep.flags.push_back("mixing-warning");
  rep.metadata = options_metadata(opts, plan, post.states.size());
  return rep;
}

// ---------------------------------------------------------------------------
// Process tomography.

namespace {

struct QptData {
  double flux = 0.0;
  DetectorModel detector;
  std::vector<std::string> inputs;
  std::vector<CMat> input_states;
  std::vector<MeasurementSetting> axes;
  // counts[input][axis][outcome]
  std::vector<std::array<std::array<long long, 2>, 3>> counts;
};

QptData parse_qpt(const CountRecord& record) {
  const std::string ctx = "qpt_infer";
  record.validate();
  if (record.kind != "qpt")
    throw ConfigError(ctx + ": record kind '" + record.kind +
                      "' is not process tomography");
  QptData data;
  data.flux = get_required<double>(record.metadata, "flux_hz", ctx);
  if (!std::isfinite(data.flux) || data.flux < 0.0)
    throw ConfigError(ctx + ": flux must be non-negative");
  if (!record.metadata.contains("detector"))
    throw ConfigError(ctx + ": missing required key 'detector'");
  data.detector = DetectorModel::from_json(record.metadata.at("detector"));
  data.detector.validate();
  const double had =
      get_required<double>(record.metadata, "hadamard_success", ctx);
  data.inputs = qpt_input_labels();
  data.axes = qst_settings(had);
  for (const std::string& in : data.inputs) {
    data.input_states.push_back(qpt_input_state(in));
    std::array<std::array<long long, 2>, 3> block{};
    for (std::size_t a = 0; a < data.axes.size(); ++a) {
      const std::string label = in + "/" + axis_label(data.axes[a].axis);
      block[a] = {record.count_of(label, "0"), record.count_of(label, "1")};
    }
    data.counts.push_back(block);
  }
  return data;
}

LogDensity qpt_likelihood(const QptData& data) {
  return [data](const Eigen::VectorXd& z) {
    const KrausSet channel = qpt_latent_channel(z);
    const double t = data.detector.integration_seconds;
    const double eta = data.detector.efficiency;
    const double dark = data.detector.dark_rate_hz() * t;
    double ll = 0.0;
    for (std::size_t i = 0; i < data.input_states.size(); ++i) {
      CMat out = CMat::Zero(2, 2);
      for (const CMat& a : channel.ops)
        out += a * data.input_states[i] * a.adjoint();
      for (std::size_t ax = 0; ax < data.axes.size(); ++ax) {
        const auto [p0, p1] = projection_probs(out, data.axes[ax]);
        const double scale = data.flux * t * data.axes[ax].success * eta;
        ll += poisson_term(data.counts[i][ax][0], scale * p0 + dark) +
              poisson_term(data.counts[i][ax][1], scale * p1 + dark);
      }
    }
    return ll;
  };
}

}  // namespace

QptPosterior qpt_posterior(const CountRecord& record,
                           const InferenceOptions& opts) {
  const QptData data = parse_qpt(record);
  ModelSpec model;
  model.dim = 32;
  model.log_likelihood = qpt_likelihood(data);
  model.default_sampler = SamplerKind::kPcn;
  LatentChain chain = run_chains(model, opts);
  QptPosterior post;
  post.channels.reserve(chain.samples.size());
  for (const Eigen::VectorXd& z : chain.samples)
    post.channels.push_back(qpt_latent_channel(z));
  post.diagnostics = chain.diagnostics;
  return post;
}

InferenceReport qpt_infer(const CountRecord& record,
                          const InferenceOptions& opts,
                          const std::optional<ChoiMatrix>& target) {
  const QptPosterior post = qpt_posterior(record, opts);
  ModelSpec model;
  model.dim = 32;
  model.default_sampler = SamplerKind::kPcn;
  const ChainPlan plan = plan_chains(model, opts);

  InferenceReport rep;
  ChoiMatrix mean;
  mean.phi = CMat::Zero(4, 4);
  mean.dim_in = 2;
  mean.dim_out = 2;
  std::vector<double> f;
  if (target) {
    target->validate();
    f.reserve(post.channels.size());
  }
  for (const KrausSet& ch : post.channels) {
    const ChoiMatrix choi = choi_from_kraus(ch);
    mean.phi += choi.phi;
    if (target) f.push_back(process_fidelity(choi, *target));
  }
  mean.phi /= static_cast<double>(post.channels.size());
  const ProcessMatrix chi = chi_from_choi(mean);
  rep.mean = nlohmann::json{{"choi", mat_to_json(mean.phi)},
                            {"chi", mat_to_json(chi.chi)},
                            {"dim_in", 2},
                            {"dim_out", 2}};
  if (target) fill_fidelity(rep, std::move(f));
  rep.diagnostics = post.diagnostics;
  if (post.diagnostics.mixing_warning) rep.flags.push_back("mixing-warning");
  rep.metadata = options_metadata(opts, plan, post.channels.size());
  return rep;
}

// ---------------------------------------------------------------------------
// Pair-source gate model.

namespace {

struct CnotData {
  double frames = 0.0;
  double dark_a = 0.0;
  double dark_b = 0.0;
  // Indexed by input 2k+l: coincidences 2r+s, then A and B singles.
  std::array<std::array<long long, 4>, 4> coinc{};
  std::array<std::array<long long, 2>, 4> singles_a{};
  std::array<std::array<long long, 2>, 4> singles_b{};
};

CnotData parse_cnot(const CountRecord& record) {
  const std::string ctx = "cnot_infer";
  record.validate();
  if (record.kind != "cnot_truth_table")
    throw ConfigError(ctx + ": record kind '" + record.kind +
                      "' is not a truth table");
  CnotData data;
  if (!record.metadata.contains("detector_a") ||
      !record.metadata.contains("detector_b"))
    throw ConfigError(ctx + ": missing detector calibration metadata");
  const DetectorModel det_a =
      DetectorModel::from_json(record.metadata.at("detector_a"));
  const DetectorModel det_b =
      DetectorModel::from_json(record.metadata.at("detector_b"));
  det_a.validate();
  det_b.validate();
  if (det_a.frame_seconds != det_b.frame_seconds)
    throw ConfigError(ctx + ": detectors must share one coincidence frame");
  const double integration =
      get_required<double>(record.metadata, "integration_seconds", ctx);
  if (!std::isfinite(integration) || integration <= 0.0)
    throw ConfigError(ctx + ": integration time must be positive");
  data.frames = integration / det_a.frame_seconds;
  data.dark_a = det_a.dark_prob;
  data.dark_b = det_b.dark_prob;

  const char* bit[2] = {"0", "1"};
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) {
      const int input = 2 * k + l;
      const std::string in_label =
          std::string("input_") + bit[k] + bit[l];
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
          data.coinc[input][2 * r + s] = record.count_of(
              in_label, std::string("coinc_") + bit[r] + bit[s]);
      for (int r = 0; r < 2; ++r)
        data.singles_a[input][r] =
            record.count_of(in_label, std::string("single_a_") + bit[r]);
      for (int s = 0; s < 2; ++s)
        data.singles_b[input][s] =
            record.count_of(in_label, std::string("single_b_") + bit[s]);
    }
  return data;
}

/// Click-model log likelihood of a monitored-bin corner plus nuisance
/// parameters against a full truth-table record.  Identical to running
/// cnot_click_probs over all input/output combinations, but kept lean and
/// clamp-guarded because it sits in the samplers' innermost loop.
double cnot_log_likelihood(const CnotData& data, const CMat& corner,
                           double mu, double eta_a, double eta_b) {
  double ll = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) {
      const int input = 2 * k + l;
      double pa[2], pb[2];
      for (int r = 0; r < 2; ++r)
        pa[r] = clamp01(mu * eta_a * std::norm(corner(r, k)) + data.dark_a);
      for (int s = 0; s < 2; ++s)
        pb[s] =
            clamp01(mu * eta_b * std::norm(corner(2 + s, 2 + l)) +
                    data.dark_b);
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s) {
          const std::complex<double> amp =
              corner(r, k) * corner(2 + s, 2 + l) +
              corner(2 + s, k) * corner(r, 2 + l);
          const double pab =
              clamp01(mu * eta_a * eta_b * std::norm(amp) +
                      2.0 * pa[r] * pb[s]);
          ll += poisson_term(data.coinc[input][2 * r + s],
                             data.frames * pab);
        }
      for (int r = 0; r < 2; ++r)
        ll += poisson_term(data.singles_a[input][r], data.frames * pa[r]);
      for (int s = 0; s < 2; ++s)
        ll += poisson_term(data.singles_b[input][s], data.frames * pb[s]);
    }
  return ll;
}

CnotDraw cnot_draw_from_latents(const Eigen::VectorXd& z) {
  CnotDraw draw;
  draw.corner = cnot_latent_corner(z.head(64));
  draw.mu = 0.1 * logistic(z[64]);
  draw.eta_a = logistic(z[65]);
  draw.eta_b = logistic(z[66]);
  return draw;
}

LogDensity cnot_likelihood(const CnotData& data) {
  return [data](const Eigen::VectorXd& z) {
    const CnotDraw d = cnot_draw_from_latents(z);
    return cnot_log_likelihood(data, d.corner, d.mu, d.eta_a, d.eta_b);
  };
}

}  // namespace

CnotPosterior cnot_posterior(const CountRecord& record,
                             const InferenceOptions& opts) {
  const CnotData data = parse_cnot(record);
  ModelSpec model;
  model.dim = 67;
  model.log_likelihood = cnot_likelihood(data);
  model.default_sampler = SamplerKind::kSlice;
  LatentChain chain = run_chains(model, opts);
  CnotPosterior post;
  post.draws.reserve(chain.samples.size());
  for (const Eigen::VectorXd& z : chain.samples)
    post.draws.push_back(cnot_draw_from_latents(z));
  post.diagnostics = chain.diagnostics;
  return post;
}

InferenceReport cnot_infer(const CountRecord& record,
                           const InferenceOptions& opts) {
  const CnotPosterior post = cnot_posterior(record, opts);
  ModelSpec model;
  model.dim = 67;
  model.default_sampler = SamplerKind::kSlice;
  const ChainPlan plan = plan_chains(model, opts);

  InferenceReport rep;
  CMat mean_corner = CMat::Zero(4, 4);
  double mean_mu = 0.0, mean_ea = 0.0, mean_eb = 0.0;
  std::vector<double> f;
  f.reserve(post.draws.size());
  for (const CnotDraw& d : post.draws) {
    mean_corner += d.corner;
    mean_mu += d.mu;
    mean_ea += d.eta_a;
    mean_eb += d.eta_b;
    f.push_back(cnot_gauge_fidelity(d.corner));
  }
  const double n = static_cast<double>(post.draws.size());
  mean_corner /= n;
  rep.mean = nlohmann::json{{"corner", mat_to_json(mean_corner)},
                            {"mu", mean_mu / n},
                            {"eta_a", mean_ea / n},
                            {"eta_b", mean_eb / n}};
  fill_fidelity(rep, std::move(f));
  rep.diagnostics = post.diagnostics;
  if (post.diagnostics.mixing_warning) rep.flags.push_back("mixing-warning");
  if (rep.fidelity_std > kNonIdentifiableFidelityStd)
    rep.flags.push_back("non-identifiable");
  rep.metadata = options_metadata(opts, plan, post.draws.size());
  return rep;
}

nlohmann::json InferenceReport::to_json() const {
  nlohmann::json j{{"mean", mean},
                   {"diagnostics", diagnostics.to_json()},
                   {"flags", flags},
                   {"metadata", metadata}};
  if (has_fidelity)
    j["fidelity"] = nlohmann::json{{"mean", fidelity_mean},
                                   {"std", fidelity_std},
                                   {"q025", fidelity_q025},
                                   {"q975", fidelity_q975}};
  return j;
}

}  // namespace qfp
