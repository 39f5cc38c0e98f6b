// Copyright 2026 The qfpsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qfp/openbox.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <deque>
#include <exception>
#include <map>
#include <sstream>
#include <utility>

#include "qfp/errors.hpp"
#include "qfp/serialize.hpp"

namespace qfp {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

const char* kGaugeName = "first probed row and first probed column real non-negative";

bool same_window(const Window& a, const Window& b) {
  return a.lo == b.lo && a.hi == b.hi && a.guard == b.guard;
}

/// Shortest representation that round-trips exactly.
std::string fmt_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok, const std::string& context) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ConfigError(context + ": bad numeric field '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, const std::string& context) {
  const double v = parse_double(tok, context);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError(context + ": expected integer, got '" + tok + "'");
  return i;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

/// Parses the leading metadata comment `# qfp-<kind> key=value ...`.
std::map<std::string, std::string> parse_meta(const std::string& line,
                                              const std::string& kind,
                                              const std::string& context) {
  std::istringstream in(line);
  std::string tok;
  in >> tok;
  if (tok != "#") throw ConfigError(context + ": missing metadata comment line");
  in >> tok;
  if (tok != "qfp-" + kind)
    throw ConfigError(context + ": expected a qfp-" + kind + " header, got '" + tok + "'");
  std::map<std::string, std::string> kv;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError(context + ": bad metadata token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

std::string meta_field(const std::map<std::string, std::string>& kv, const char* key,
                       const std::string& context) {
  const auto it = kv.find(key);
  if (it == kv.end())
    throw ConfigError(context + ": metadata missing '" + std::string(key) + "'");
  return it->second;
}

Window window_from_meta(const std::map<std::string, std::string>& kv,
                        const std::string& context) {
  Window w;
  w.lo = parse_int(meta_field(kv, "window_lo", context), context);
  w.hi = parse_int(meta_field(kv, "window_hi", context), context);
  w.guard = parse_int(meta_field(kv, "guard", context), context);
  w.validate();
  return w;
}

/// One recorded power under the noise model: multiplicative relative
/// Gaussian (clamped at zero) plus the deterministic additive floor.
double perturb_power(double p, const ProbeNoise& noise, Rng& rng) {
  double out = p;
  if (noise.sigma_rel > 0.0)
    out = std::max(0.0, p * (1.0 + noise.sigma_rel * rng.normal()));
  return out + noise.floor;
}

void check_phase_grid(const std::vector<double>& phase, const std::string& context) {
  if (phase.size() < 8)
    throw ConfigError(context + ": phase grid needs at least 8 points, got " +
                      std::to_string(phase.size()));
  for (std::size_t j = 0; j < phase.size(); ++j) {
    const double p = phase[j];
    if (!std::isfinite(p) || p < 0.0 || p >= kTwoPi)
      throw ConfigError(context + ": phase grid values must lie in [0, 2*pi)");
    if (j > 0 && !(p > phase[j - 1]))
      throw ConfigError(context + ": phase grid must be strictly increasing");
  }
}

void check_powers(const std::vector<double>& power, const std::string& context) {
  for (double p : power)
    if (!std::isfinite(p) || p < 0.0)
      throw ConfigError(context + ": powers must be finite and non-negative");
}

}  // namespace

std::string ProbeNoise::tag() const {
  if (sigma_rel == 0.0 && floor == 0.0) return "noiseless";
  std::ostringstream out;
  out << "rel=" << fmt_double(sigma_rel) << ",floor=" << fmt_double(floor);
  return out.str();
}

void ProbeNoise::validate() const {
  if (!std::isfinite(sigma_rel) || sigma_rel < 0.0)
    throw ConfigError("ProbeNoise: sigma_rel must be finite and >= 0");
  if (!std::isfinite(floor) || floor < 0.0)
    throw ConfigError("ProbeNoise: floor must be finite and >= 0");
}

void SpectrumMeasurement::validate() const {
  window.validate();
  if (static_cast<int>(power.size()) != window.size())
    throw ConfigError("SpectrumMeasurement: power vector size " +
                      std::to_string(power.size()) + " does not match window size " +
                      std::to_string(window.size()));
  window.index_of(probe_bin);  // throws when the probe lies outside the window
  check_powers(power, "SpectrumMeasurement");
}

std::string SpectrumMeasurement::to_csv() const {
  validate();
  std::ostringstream out;
  out << "# qfp-spectrum probe_bin=" << probe_bin << " window_lo=" << window.lo
      << " window_hi=" << window.hi << " guard=" << window.guard
      << " noise=" << noise_tag << "\n";
  out << "bin,power\n";
  for (int i = 0; i < window.size(); ++i)
    out << window.bin_of(i) << "," << fmt_double(power[i]) << "\n";
  return out.str();
}

SpectrumMeasurement SpectrumMeasurement::from_csv(const std::string& text) {
  const std::string ctx = "SpectrumMeasurement::from_csv";
  const auto lines = split_lines(text);
  if (lines.size() < 3) throw ConfigError(ctx + ": truncated input");
  const auto kv = parse_meta(lines[0], "spectrum", ctx);
  SpectrumMeasurement m;
  m.probe_bin = parse_int(meta_field(kv, "probe_bin", ctx), ctx);
  m.window = window_from_meta(kv, ctx);
  m.noise_tag = meta_field(kv, "noise", ctx);
  if (lines[1] != "bin,power")
    throw ConfigError(ctx + ": expected 'bin,power' header, got '" + lines[1] + "'");
  m.power.assign(m.window.size(), 0.0);
  std::vector<bool> seen(m.power.size(), false);
  for (std::size_t li = 2; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto f = split_fields(lines[li]);
    if (f.size() != 2) throw ConfigError(ctx + ": bad row '" + lines[li] + "'");
    const int idx = m.window.index_of(parse_int(f[0], ctx));
    if (seen[idx]) throw ConfigError(ctx + ": duplicate bin row");
    seen[idx] = true;
    m.power[idx] = parse_double(f[1], ctx);
  }
  for (bool s : seen)
    if (!s) throw ConfigError(ctx + ": missing bin rows");
  m.validate();
  return m;
}

void FringeScan::validate() const {
  window.validate();
  if (probe_lo == probe_hi)
    throw ConfigError("FringeScan: probe bins must be distinct");
  window.index_of(probe_lo);
  window.index_of(probe_hi);
  check_phase_grid(phase, "FringeScan");
  if (static_cast<int>(trace.size()) != window.size())
    throw ConfigError("FringeScan: trace count " + std::to_string(trace.size()) +
                      " does not match window size " + std::to_string(window.size()));
  for (const auto& t : trace) {
    if (t.size() != phase.size())
      throw ConfigError("FringeScan: trace length does not match phase grid");
    check_powers(t, "FringeScan");
  }
}

std::string FringeScan::to_csv() const {
  validate();
  std::ostringstream out;
  out << "# qfp-fringe probe_lo=" << probe_lo << " probe_hi=" << probe_hi
      << " window_lo=" << window.lo << " window_hi=" << window.hi
      << " guard=" << window.guard << " noise=" << noise_tag << "\n";
  out << "phi";
  for (int i = 0; i < window.size(); ++i) out << ",p_" << window.bin_of(i);
  out << "\n";
  for (std::size_t j = 0; j < phase.size(); ++j) {
    out << fmt_double(phase[j]);
    for (int i = 0; i < window.size(); ++i) out << "," << fmt_double(trace[i][j]);
    out << "\n";
  }
  return out.str();
}

FringeScan FringeScan::from_csv(const std::string& text) {
  const std::string ctx = "FringeScan::from_csv";
  const auto lines = split_lines(text);
  if (lines.size() < 2) throw ConfigError(ctx + ": truncated input");
  const auto kv = parse_meta(lines[0], "fringe", ctx);
  FringeScan s;
  s.probe_lo = parse_int(meta_field(kv, "probe_lo", ctx), ctx);
  s.probe_hi = parse_int(meta_field(kv, "probe_hi", ctx), ctx);
  s.window = window_from_meta(kv, ctx);
  s.noise_tag = meta_field(kv, "noise", ctx);
  const auto header = split_fields(lines[1]);
  if (static_cast<int>(header.size()) != 1 + s.window.size() || header[0] != "phi")
    throw ConfigError(ctx + ": bad column header");
  for (int i = 0; i < s.window.size(); ++i)
    if (header[i + 1] != "p_" + std::to_string(s.window.bin_of(i)))
      throw ConfigError(ctx + ": column header '" + header[i + 1] +
                        "' does not match the declared window");
  s.trace.assign(s.window.size(), {});
  for (std::size_t li = 2; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto f = split_fields(lines[li]);
    if (f.size() != header.size())
      throw ConfigError(ctx + ": bad row '" + lines[li] + "'");
    s.phase.push_back(parse_double(f[0], ctx));
    for (int i = 0; i < s.window.size(); ++i)
      s.trace[i].push_back(parse_double(f[i + 1], ctx));
  }
  s.validate();
  return s;
}

SpectrumMeasurement simulate_single_bin_probe(const ModeMatrix& v, int probe_bin,
                                              const ProbeNoise& noise, Rng& rng) {
  noise.validate();
  const int col = v.window.index_of(probe_bin);
  SpectrumMeasurement m;
  m.probe_bin = probe_bin;
  m.window = v.window;
  m.noise_tag = noise.tag();
  m.power.resize(v.window.size());
  for (int i = 0; i < v.window.size(); ++i)
    m.power[i] = perturb_power(std::norm(v.m(i, col)), noise, rng);
  return m;
}

FringeScan simulate_fringe_scan(const ModeMatrix& v, int probe_lo, int probe_hi,
                                const std::vector<double>& phase_grid,
                                const ProbeNoise& noise, Rng& rng) {
  noise.validate();
  check_phase_grid(phase_grid, "simulate_fringe_scan");
  if (probe_lo == probe_hi)
    throw ConfigError("simulate_fringe_scan: probe bins must be distinct");
  const int c1 = v.window.index_of(probe_lo);
  const int c2 = v.window.index_of(probe_hi);
  FringeScan s;
  s.probe_lo = probe_lo;
  s.probe_hi = probe_hi;
  s.window = v.window;
  s.phase = phase_grid;
  s.noise_tag = noise.tag();
  s.trace.assign(v.window.size(), std::vector<double>(phase_grid.size(), 0.0));
  for (int i = 0; i < v.window.size(); ++i) {
    for (std::size_t j = 0; j < phase_grid.size(); ++j) {
      const cplx amp = v.m(i, c1) + std::polar(1.0, phase_grid[j]) * v.m(i, c2);
      s.trace[i][j] = perturb_power(0.5 * std::norm(amp), noise, rng);
    }
  }
  return s;
}

std::vector<double> uniform_phase_grid(int n) {
  if (n < 8)
    throw ConfigError("uniform_phase_grid: need at least 8 points, got " +
                      std::to_string(n));
  std::vector<double> grid(n);
  for (int j = 0; j < n; ++j) grid[j] = kTwoPi * j / n;
  return grid;
}

FringeFit fit_fringe(const std::vector<double>& phase, const std::vector<double>& trace) {
  if (phase.size() != trace.size())
    throw ConfigError("fit_fringe: phase and trace sizes differ");
  if (phase.size() < 8)
    throw ConfigError("fit_fringe: need at least 8 points, got " +
                      std::to_string(phase.size()));
  const int n = static_cast<int>(phase.size());
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (int j = 0; j < n; ++j) {
    const Eigen::Vector3d row(1.0, std::cos(phase[j]), std::sin(phase[j]));
    ata += row * row.transpose();
    atb += trace[j] * row;
  }
  const Eigen::Vector3d sol = ata.ldlt().solve(atb);
  FringeFit fit;
  fit.offset = sol(0);
  fit.amp_cos = sol(1);
  fit.amp_sin = sol(2);
  double ss = 0.0;
  for (int j = 0; j < n; ++j) {
    const double model =
        sol(0) + sol(1) * std::cos(phase[j]) + sol(2) * std::sin(phase[j]);
    const double r = trace[j] - model;
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

double fringe_visibility(const FringeScan& scan, int out_bin) {
  scan.validate();
  const int idx = scan.window.index_of(out_bin);
  const FringeFit fit = fit_fringe(scan.phase, scan.trace[idx]);
  const double amp = std::hypot(fit.amp_cos, fit.amp_sin);
  if (!(fit.offset > 0.0) || fit.offset < 1e-12 * std::max(1.0, amp))
    throw ToleranceError(
        "fringe_visibility: fitted mean power is consistent with zero; "
        "visibility is undefined for a dark trace");
  return amp / fit.offset;
}

ReconstructedMultiport reconstruct_multiport(const std::vector<SpectrumMeasurement>& spectra,
                                             const std::vector<FringeScan>& scans,
                                             const ReconstructOptions& opts) {
  const std::string ctx = "reconstruct_multiport";
  if (!std::isfinite(opts.assumed_sigma_rel) || opts.assumed_sigma_rel < 0.0 ||
      !std::isfinite(opts.assumed_floor) || opts.assumed_floor < 0.0 ||
      !std::isfinite(opts.modulus_threshold_sigma) || opts.modulus_threshold_sigma < 0.0)
    throw ConfigError(ctx + ": noise scales and threshold must be finite and >= 0");
  if (spectra.empty()) throw ConfigError(ctx + ": no spectra given");

  const Window win = spectra[0].window;
  for (const auto& sp : spectra) {
    sp.validate();
    if (!same_window(sp.window, win))
      throw ConfigError(ctx + ": spectra carry inconsistent windows");
  }

  // Probed bins, sorted ascending; one spectrum per column.
  std::vector<std::pair<int, int>> order;  // (bin, spectrum index)
  order.reserve(spectra.size());
  for (std::size_t i = 0; i < spectra.size(); ++i)
    order.emplace_back(spectra[i].probe_bin, static_cast<int>(i));
  std::sort(order.begin(), order.end());
  for (std::size_t i = 1; i < order.size(); ++i)
    if (order[i].first == order[i - 1].first)
      throw ConfigError(ctx + ": duplicate spectrum for bin " +
                        std::to_string(order[i].first));
  const int nb = static_cast<int>(order.size());
  std::vector<int> bins(nb);
  for (int c = 0; c < nb; ++c) bins[c] = order[c].first;

  // Moduli, propagated errors, and phase-undefined flags from the spectra.
  Eigen::MatrixXd mod(nb, nb), msig(nb, nb);
  std::vector<std::vector<bool>> flag(nb, std::vector<bool>(nb, false));
  for (int c = 0; c < nb; ++c) {
    const auto& sp = spectra[order[c].second];
    for (int r = 0; r < nb; ++r) {
      const double raw = sp.power[win.index_of(bins[r])];
      const double p = std::max(0.0, raw - opts.assumed_floor);
      const double sigma_p = opts.assumed_sigma_rel * p + opts.assumed_floor;
      mod(r, c) = std::sqrt(p);
      msig(r, c) = p > 0.0 ? sigma_p / (2.0 * std::sqrt(p)) : std::sqrt(sigma_p);
      flag[r][c] = mod(r, c) <= opts.modulus_threshold_sigma * msig(r, c);
    }
  }

  // Fit every fringe trace; record per-row relative phases per scan.
  // delta[r] = arg V(row r, probe_hi) - arg V(row r, probe_lo).
  struct ScanDeltas {
    int c1 = -1, c2 = -1;
    std::vector<char> has;
    std::vector<double> delta;
  };
  const int ns = static_cast<int>(scans.size());
  std::vector<ScanDeltas> deltas(ns);
  std::vector<std::exception_ptr> scan_error(ns);

#pragma omp parallel for schedule(dynamic)
  for (int si = 0; si < ns; ++si) {
    try {
      const FringeScan& sc = scans[si];
      sc.validate();
      if (!same_window(sc.window, win))
        throw ConfigError(ctx + ": scan window does not match the spectra");
      ScanDeltas& d = deltas[si];
      const auto col_of = [&](int bin) {
        const auto it = std::lower_bound(bins.begin(), bins.end(), bin);
        if (it == bins.end() || *it != bin)
          throw ConfigError(ctx + ": scan probes bin " + std::to_string(bin) +
                            " which has no spectrum");
        return static_cast<int>(it - bins.begin());
      };
      d.c1 = col_of(sc.probe_lo);
      d.c2 = col_of(sc.probe_hi);
      d.has.assign(nb, 0);
      d.delta.assign(nb, 0.0);
      for (int r = 0; r < nb; ++r) {
        const FringeFit fit = fit_fringe(sc.phase, sc.trace[win.index_of(bins[r])]);
        const double mean = std::max(fit.offset, 0.0);
        const double bound =
            opts.fit_residual_bound >= 0.0
                ? opts.fit_residual_bound * mean + 1e-12
                : (1e-6 + 10.0 * opts.assumed_sigma_rel) * mean + 1e-9;
        if (fit.residual_rms > bound)
          throw ToleranceError(ctx + ": fringe fit residual " +
                               std::to_string(fit.residual_rms) + " exceeds bound " +
                               std::to_string(bound) +
                               "; the trace is not sinusoidal in the swept phase");
        if (!flag[r][d.c1] && !flag[r][d.c2]) {
          const double amp = std::hypot(fit.amp_cos, fit.amp_sin);
          if (amp > 0.0) {
            d.has[r] = 1;
            d.delta[r] = std::atan2(-fit.amp_sin, fit.amp_cos);
          }
        }
      }
    } catch (...) {
      scan_error[si] = std::current_exception();
    }
  }
  for (int si = 0; si < ns; ++si)
    if (scan_error[si]) std::rethrow_exception(scan_error[si]);

  // Column connectivity: an edge is usable when any row recorded a phase.
  std::vector<std::vector<int>> adj(nb);
  for (int si = 0; si < ns; ++si) {
    const ScanDeltas& d = deltas[si];
    if (std::any_of(d.has.begin(), d.has.end(), [](char h) { return h != 0; })) {
      adj[d.c1].push_back(si);
      adj[d.c2].push_back(si);
    }
  }
  {
    std::vector<bool> reached(nb, false);
    std::deque<int> queue{0};
    reached[0] = true;
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      for (int si : adj[c]) {
        const int other = deltas[si].c1 == c ? deltas[si].c2 : deltas[si].c1;
        if (!reached[other]) {
          reached[other] = true;
          queue.push_back(other);
        }
      }
    }
    for (int c = 0; c < nb; ++c)
      if (!reached[c])
        throw ConfigError(ctx + ": phase graph is disconnected; no usable fringe "
                          "path reaches probed bin " + std::to_string(bins[c]));
  }

  // Per-row phase assembly over the column graph.  Each row's reference is
  // its first column with resolvable modulus; entries whose phase cannot be
  // reached through that row's usable fringes are flagged.
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(nb, nb);
  for (int r = 0; r < nb; ++r) {
    int ref = -1;
    for (int c = 0; c < nb; ++c)
      if (!flag[r][c]) {
        ref = c;
        break;
      }
    if (ref < 0) continue;  // fully dark row: every entry already flagged
    std::vector<bool> known(nb, false);
    known[ref] = true;
    std::deque<int> queue{ref};
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      for (int si : adj[c]) {
        const ScanDeltas& d = deltas[si];
        if (!d.has[r]) continue;
        const int other = d.c1 == c ? d.c2 : d.c1;
        if (known[other]) continue;
        known[other] = true;
        theta(r, other) = d.c1 == c ? theta(r, c) + d.delta[r]
                                    : theta(r, c) - d.delta[r];
        queue.push_back(other);
      }
    }
    for (int c = 0; c < nb; ++c)
      if (!known[c] && !flag[r][c]) flag[r][c] = true;
  }

  ReconstructedMultiport out;
  out.bins = std::move(bins);
  out.v.resize(nb, nb);
  for (int r = 0; r < nb; ++r)
    for (int c = 0; c < nb; ++c) out.v(r, c) = std::polar(mod(r, c), theta(r, c));
  out.modulus_stderr = std::move(msig);
  out.phase_undefined = std::move(flag);
  out.gauge = kGaugeName;
  gauge_fix(out);
  return out;
}

void gauge_fix(ReconstructedMultiport& r) {
  const int nb = static_cast<int>(r.bins.size());
  if (nb == 0 || r.v.rows() != nb || r.v.cols() != nb ||
      static_cast<int>(r.phase_undefined.size()) != nb)
    throw ConfigError("gauge_fix: inconsistent reconstruction shape");
  for (const auto& row : r.phase_undefined)
    if (static_cast<int>(row.size()) != nb)
      throw ConfigError("gauge_fix: inconsistent flag shape");

  // Column phases from the first probed row, then row phases from the first
  // probed column (falling back to the row's first resolvable entry).  Order
  // matters for idempotency: the row pass cannot disturb row 0 because entry
  // (0, 0) is already real non-negative after the column pass.
  for (int c = 0; c < nb; ++c) {
    if (r.phase_undefined[0][c]) continue;
    const cplx e = r.v(0, c);
    if (std::abs(e) > 0.0) r.v.col(c) *= std::polar(1.0, -std::arg(e));
  }
  for (int rr = 0; rr < nb; ++rr) {
    int ref = -1;
    for (int c = 0; c < nb; ++c)
      if (!r.phase_undefined[rr][c]) {
        ref = c;
        break;
      }
    if (ref < 0) continue;
    const cplx e = r.v(rr, ref);
    if (std::abs(e) > 0.0) r.v.row(rr) *= std::polar(1.0, -std::arg(e));
  }
  r.gauge = kGaugeName;
}

nlohmann::json ReconstructedMultiport::to_json() const {
  nlohmann::json j;
  j["bins"] = bins;
  j["entries"] = mat_to_json(v);
  nlohmann::json sig = nlohmann::json::array();
  for (Eigen::Index r = 0; r < modulus_stderr.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < modulus_stderr.cols(); ++c)
      row.push_back(modulus_stderr(r, c));
    sig.push_back(std::move(row));
  }
  j["modulus_stderr"] = std::move(sig);
  j["phase_undefined"] = phase_undefined;
  j["gauge"] = gauge;
  return j;
}

ReconstructedMultiport ReconstructedMultiport::from_json(const nlohmann::json& j) {
  const std::string ctx = "ReconstructedMultiport";
  require_object(j, ctx);
  require_keys(j, {"bins", "entries", "modulus_stderr", "phase_undefined", "gauge"}, ctx);
  ReconstructedMultiport r;
  r.bins = get_required<std::vector<int>>(j, "bins", ctx);
  r.v = mat_from_json(get_required<nlohmann::json>(j, "entries", ctx));
  const auto sig = get_required<std::vector<std::vector<double>>>(j, "modulus_stderr", ctx);
  const auto flags =
      get_required<std::vector<std::vector<bool>>>(j, "phase_undefined", ctx);
  r.gauge = get_required<std::string>(j, "gauge", ctx);
  const int nb = static_cast<int>(r.bins.size());
  if (r.v.rows() != nb || r.v.cols() != nb || static_cast<int>(sig.size()) != nb ||
      static_cast<int>(flags.size()) != nb)
    throw ConfigError(ctx + ": inconsistent shapes");
  r.modulus_stderr.resize(nb, nb);
  for (int rr = 0; rr < nb; ++rr) {
    if (static_cast<int>(sig[rr].size()) != nb ||
        static_cast<int>(flags[rr].size()) != nb)
      throw ConfigError(ctx + ": inconsistent row sizes");
    for (int c = 0; c < nb; ++c) r.modulus_stderr(rr, c) = sig[rr][c];
  }
  r.phase_undefined = flags;
  return r;
}

}  // namespace qfp
