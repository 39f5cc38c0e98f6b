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

#include "qfp/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "qfp/bessel.hpp"
#include "qfp/errors.hpp"
#include "qfp/serialize.hpp"

namespace qfp {

namespace {

constexpr double kPi = std::numbers::pi;

/// Sideband-extent proxy of a drive, used only for guard sizing.
double sideband_proxy(const EomDrive& d) {
  if (!d.sampled()) return d.weighted_amplitude();
  // Sampled drives carry no closed-form extent; take half the order that
  // captures all but 1e-10 of the spectral mass.
  const EomCoefficients c = eom_coefficients_auto(d, 1e-10);
  return 0.5 * c.order;
}

}  // namespace

double EomDrive::weighted_amplitude() const {
  double s = 0.0;
  for (const Harmonic& h : harmonics) s += h.order * std::fabs(h.amplitude);
  return s;
}

void EomDrive::validate() const {
  if (!harmonics.empty() && !samples.empty())
    throw ConfigError("EomDrive: harmonic table and samples are exclusive");
  std::set<int> orders;
  for (const Harmonic& h : harmonics) {
    if (h.order < 1)
      throw ConfigError("EomDrive: harmonic order must be a positive integer");
    if (!orders.insert(h.order).second)
      throw ConfigError("EomDrive: duplicate harmonic order " +
                        std::to_string(h.order));
    if (!std::isfinite(h.amplitude) || !std::isfinite(h.phase))
      throw ConfigError("EomDrive: non-finite harmonic parameter");
  }
  for (double s : samples)
    if (!std::isfinite(s)) throw ConfigError("EomDrive: non-finite sample");
}

cplx EomCoefficients::at(int k) const {
  if (k < -order || k > order) return cplx(0.0, 0.0);
  return c[static_cast<std::size_t>(k + order)];
}

double EomCoefficients::mass() const {
  double s = 0.0;
  for (const cplx& z : c) s += std::norm(z);
  return s;
}

EomCoefficients eom_coefficients(const EomDrive& drive, int K,
                                 double tail_tol) {
  drive.validate();
  if (K < 0) throw ConfigError("eom_coefficients: negative order cap");
  EomCoefficients out;
  out.order = K;
  out.c.assign(static_cast<std::size_t>(2 * K + 1), cplx(0.0, 0.0));

  if (drive.sampled()) {
    const int P = static_cast<int>(drive.samples.size());
    if (2 * K + 1 > P)
      throw ConfigError(
          "eom_coefficients: sampled drive with " + std::to_string(P) +
          " samples resolves orders up to " + std::to_string((P - 1) / 2));
    // c_k = (1/P) sum_j e^{i phi_j} e^{+2 pi i k j / P}.
    for (int k = -K; k <= K; ++k) {
      cplx acc(0.0, 0.0);
      for (int j = 0; j < P; ++j) {
        const double ang =
            drive.samples[static_cast<std::size_t>(j)] + 2.0 * kPi * k * j / P;
        acc += cplx(std::cos(ang), std::sin(ang));
      }
      out.c[static_cast<std::size_t>(k + K)] = acc / static_cast<double>(P);
    }
  } else if (drive.harmonics.empty()) {
    out.c[static_cast<std::size_t>(K)] = cplx(1.0, 0.0);
  } else {
    // Expand e^{i phi(t)} in e^{+i m w t}: each harmonic contributes
    // A_h[m = h j] = J_j(amp) e^{i j ph}; the product of tones is the
    // convolution of their expansions.  Then c_k = A[-k].
    int L = K;
    for (const auto& h : drive.harmonics)
      L += h.order *
           (static_cast<int>(std::ceil(std::fabs(h.amplitude))) + 24);
    std::vector<cplx> a(static_cast<std::size_t>(2 * L + 1), cplx(0.0, 0.0));
    a[static_cast<std::size_t>(L)] = cplx(1.0, 0.0);
    for (const auto& h : drive.harmonics) {
      const int jmax =
          std::min(L / h.order,
                   static_cast<int>(std::ceil(std::fabs(h.amplitude))) + 24 +
                       K / h.order);
      const auto jn = bessel_jn(jmax, h.amplitude);
      std::vector<cplx> b(a.size(), cplx(0.0, 0.0));
      for (int j = -jmax; j <= jmax; ++j) {
        const double jv = j >= 0 ? jn[static_cast<std::size_t>(j)]
                                 : (j % 2 == 0 ? 1.0 : -1.0) *
                                       jn[static_cast<std::size_t>(-j)];
        if (jv == 0.0) continue;
        const cplx w = jv * cplx(std::cos(j * h.phase), std::sin(j * h.phase));
        const int shift = h.order * j;
        const int mlo = std::max(-L, -L + shift);
        const int mhi = std::min(L, L + shift);
        for (int m = mlo; m <= mhi; ++m)
          b[static_cast<std::size_t>(m + L)] +=
              w * a[static_cast<std::size_t>(m - shift + L)];
      }
      a.swap(b);
    }
    for (int k = -K; k <= K; ++k)
      out.c[static_cast<std::size_t>(k + K)] =
          a[static_cast<std::size_t>(-k + L)];
  }

  const double tail = std::max(0.0, 1.0 - out.mass());
  if (tail > tail_tol)
    throw ToleranceError("eom_coefficients: spectral tail " +
                         std::to_string(tail) + " beyond order " +
                         std::to_string(K) + " exceeds tolerance");
  return out;
}

EomCoefficients eom_coefficients_auto(const EomDrive& drive, double tail_tol) {
  drive.validate();
  int K = std::max(
      4, static_cast<int>(std::ceil(drive.weighted_amplitude())) + 2);
  if (drive.sampled())
    K = std::min(K, (static_cast<int>(drive.samples.size()) - 1) / 2);
  for (;;) {
    try {
      return eom_coefficients(drive, K, tail_tol);
    } catch (const ToleranceError&) {
      int next = 2 * K;
      if (drive.sampled())
        next = std::min(next,
                        (static_cast<int>(drive.samples.size()) - 1) / 2);
      if (next <= K || next > 8192) throw;
      K = next;
    }
  }
}

double ShaperMask::phase_at(int bin) const {
  if (phases.empty()) return 0.0;
  const int hi = lo + static_cast<int>(phases.size()) - 1;
  if (bin >= lo && bin <= hi)
    return phases[static_cast<std::size_t>(bin - lo)];
  switch (extend) {
    case Extend::Hold:
      return bin < lo ? phases.front() : phases.back();
    case Extend::Identity:
      return 0.0;
    case Extend::Strict:
      throw ConfigError("ShaperMask: bin " + std::to_string(bin) +
                        " outside strict mask range");
  }
  return 0.0;
}

double ShaperMask::transmission_at(int bin) const {
  if (transmissions.empty()) return 1.0;
  const int hi = lo + static_cast<int>(transmissions.size()) - 1;
  if (bin >= lo && bin <= hi)
    return transmissions[static_cast<std::size_t>(bin - lo)];
  switch (extend) {
    case Extend::Hold:
      return bin < lo ? transmissions.front() : transmissions.back();
    case Extend::Identity:
      return 1.0;
    case Extend::Strict:
      throw ConfigError("ShaperMask: bin " + std::to_string(bin) +
                        " outside strict mask range");
  }
  return 1.0;
}

void ShaperMask::validate() const {
  if (!transmissions.empty() && transmissions.size() != phases.size())
    throw ConfigError(
        "ShaperMask: transmissions must be empty or match phases in length");
  for (double p : phases)
    if (!std::isfinite(p)) throw ConfigError("ShaperMask: non-finite phase");
  for (double t : transmissions)
    if (!(t >= 0.0 && t <= 1.0))
      throw ConfigError("ShaperMask: transmission outside [0, 1]");
}

ShaperMask ShaperMask::step(double alpha) {
  ShaperMask m;
  m.lo = 0;
  m.phases = {0.0, alpha};
  m.extend = Extend::Hold;
  return m;
}

CircuitElement CircuitElement::make_eom(EomDrive d) {
  CircuitElement e;
  e.kind = Kind::Eom;
  e.eom = std::move(d);
  return e;
}

CircuitElement CircuitElement::make_shaper(ShaperMask m) {
  CircuitElement e;
  e.kind = Kind::Shaper;
  e.mask = std::move(m);
  return e;
}

int Window::index_of(int bin) const {
  if (bin < full_lo() || bin > full_hi())
    throw ConfigError("Window: bin " + std::to_string(bin) +
                      " outside window [" + std::to_string(full_lo()) + ", " +
                      std::to_string(full_hi()) + "]");
  return bin - full_lo();
}

void Window::validate() const {
  if (hi < lo) throw ConfigError("Window: hi < lo");
  if (guard < 0) throw ConfigError("Window: negative guard");
}

int QfpCircuit::default_guard() const {
  double s = 0.0;
  for (const CircuitElement& e : elements)
    if (e.kind == CircuitElement::Kind::Eom) s += sideband_proxy(e.eom);
  return static_cast<int>(std::ceil(2.0 * s)) + 4;
}

nlohmann::json QfpCircuit::to_json() const {
  nlohmann::json els = nlohmann::json::array();
  for (const CircuitElement& e : elements) {
    if (e.kind == CircuitElement::Kind::Eom) {
      nlohmann::json je{{"type", "eom"}};
      if (e.eom.sampled()) {
        je["samples"] = e.eom.samples;
      } else {
        nlohmann::json hs = nlohmann::json::array();
        for (const auto& h : e.eom.harmonics)
          hs.push_back({{"order", h.order},
                        {"amplitude", h.amplitude},
                        {"phase", h.phase}});
        je["harmonics"] = hs;
      }
      els.push_back(je);
    } else {
      nlohmann::json triples = nlohmann::json::array();
      for (std::size_t i = 0; i < e.mask.phases.size(); ++i)
        triples.push_back({e.mask.lo + static_cast<int>(i), e.mask.phases[i],
                           e.mask.transmissions.empty()
                               ? 1.0
                               : e.mask.transmissions[i]});
      const char* ext = e.mask.extend == ShaperMask::Extend::Hold ? "hold"
                        : e.mask.extend == ShaperMask::Extend::Identity
                            ? "identity"
                            : "strict";
      els.push_back({{"type", "shaper"}, {"mask", triples}, {"extend", ext}});
    }
  }
  return nlohmann::json{
      {"window",
       {{"lo", window.lo}, {"hi", window.hi}, {"guard", window.guard}}},
      {"elements", els}};
}

QfpCircuit QfpCircuit::from_json(const nlohmann::json& j) {
  require_keys(j, {"window", "elements"}, "circuit");
  QfpCircuit c;
  const auto& jw = j.at("window");
  require_keys(jw, {"lo", "hi", "guard"}, "circuit.window");
  c.window.lo = get_required<int>(jw, "lo", "circuit.window");
  c.window.hi = get_required<int>(jw, "hi", "circuit.window");
  const auto& je = j.at("elements");
  if (!je.is_array()) throw ConfigError("circuit: elements must be an array");
  for (const auto& el : je) {
    const std::string type = get_required<std::string>(el, "type", "element");
    if (type == "eom") {
      require_keys(el, {"type", "harmonics", "samples"}, "eom element");
      EomDrive d;
      if (el.contains("samples"))
        d.samples = get_required<std::vector<double>>(el, "samples", "eom");
      if (el.contains("harmonics")) {
        for (const auto& h : el.at("harmonics")) {
          require_keys(h, {"order", "amplitude", "phase"}, "harmonic");
          d.harmonics.push_back(
              {get_required<int>(h, "order", "harmonic"),
               get_required<double>(h, "amplitude", "harmonic"),
               get_default<double>(h, "phase", 0.0, "harmonic")});
        }
      }
      d.validate();
      c.elements.push_back(CircuitElement::make_eom(std::move(d)));
    } else if (type == "shaper") {
      require_keys(el, {"type", "mask", "extend"}, "shaper element");
      ShaperMask m;
      const auto& triples = el.at("mask");
      if (!triples.is_array() || triples.empty())
        throw ConfigError("shaper: mask must be a non-empty array");
      int expected = 0;
      bool first = true;
      for (const auto& t : triples) {
        if (!t.is_array() || t.size() != 3)
          throw ConfigError("shaper: mask entries are [bin, phase, trans]");
        const int bin = t[0].get<int>();
        if (first) {
          m.lo = bin;
          expected = bin;
          first = false;
        }
        if (bin != expected)
          throw ConfigError("shaper: mask bins must be consecutive ascending");
        ++expected;
        m.phases.push_back(t[1].get<double>());
        m.transmissions.push_back(t[2].get<double>());
      }
      const std::string ext =
          get_default<std::string>(el, "extend", "hold", "shaper");
      if (ext == "hold")
        m.extend = ShaperMask::Extend::Hold;
      else if (ext == "identity")
        m.extend = ShaperMask::Extend::Identity;
      else if (ext == "strict")
        m.extend = ShaperMask::Extend::Strict;
      else
        throw ConfigError("shaper: unknown extend policy '" + ext + "'");
      m.validate();
      c.elements.push_back(CircuitElement::make_shaper(std::move(m)));
    } else {
      throw ConfigError("circuit: unknown element type '" + type + "'");
    }
  }
  c.window.guard = jw.contains("guard")
                       ? get_required<int>(jw, "guard", "circuit.window")
                       : c.default_guard();
  c.window.validate();
  return c;
}

cplx ModeMatrix::at(int out_bin, int in_bin) const {
  return m(window.index_of(out_bin), window.index_of(in_bin));
}

CMat ModeMatrix::declared_block() const {
  const int off = window.index_of(window.lo);
  const int n = window.declared_count();
  return m.block(off, off, n, n);
}

nlohmann::json ModeMatrix::to_json() const {
  nlohmann::json j = mat_to_json(m);
  j["window"] = {{"lo", window.lo}, {"hi", window.hi}, {"guard", window.guard}};
  j["truncation_defect"] = truncation_defect;
  return j;
}

ModeMatrix ModeMatrix::from_json(const nlohmann::json& j) {
  require_keys(j, {"rows", "cols", "data", "window", "truncation_defect"},
               "mode matrix");
  ModeMatrix v;
  v.m = mat_from_json(j);
  const auto& jw = j.at("window");
  require_keys(jw, {"lo", "hi", "guard"}, "mode matrix window");
  v.window.lo = get_required<int>(jw, "lo", "mode matrix window");
  v.window.hi = get_required<int>(jw, "hi", "mode matrix window");
  v.window.guard = get_required<int>(jw, "guard", "mode matrix window");
  v.window.validate();
  v.truncation_defect =
      get_default<double>(j, "truncation_defect", 0.0, "mode matrix");
  if (v.m.rows() != v.window.size() || v.m.cols() != v.window.size())
    throw ConfigError("mode matrix: dimensions disagree with window");
  return v;
}

ModeMatrix apply_shaper(const ShaperMask& mask, const Window& window) {
  window.validate();
  mask.validate();
  ModeMatrix out;
  out.window = window;
  const int n = window.size();
  out.m = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int bin = window.bin_of(i);
    const double p = mask.phase_at(bin);
    out.m(i, i) = mask.transmission_at(bin) * cplx(std::cos(p), std::sin(p));
  }
  return out;
}

ModeMatrix apply_eom(const EomDrive& drive, const Window& window) {
  window.validate();
  ModeMatrix out;
  out.window = window;
  const int n = window.size();
  int K = n - 1;
  if (drive.sampled())
    K = std::min(K, (static_cast<int>(drive.samples.size()) - 1) / 2);
  // Tail handling is the window diagnostic's job here, so no tail cap.
  const EomCoefficients c = eom_coefficients(drive, K, 2.0);
  out.m = CMat::Zero(n, n);
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) out.m(row, col) = c.at(row - col);
  return out;
}

ModeMatrix compose_circuit(const QfpCircuit& circuit,
                           const ComposeOptions& opts) {
  circuit.window.validate();
  for (const CircuitElement& e : circuit.elements)
    if (e.kind == CircuitElement::Kind::Eom)
      e.eom.validate();
    else
      e.mask.validate();

  Window w = circuit.window;
  for (;;) {
    if (w.size() > opts.max_window)
      throw ResourceError("compose_circuit: window of " +
                          std::to_string(w.size()) +
                          " bins exceeds the configured cap");
    ModeMatrix out;
    out.window = w;
    const int n = w.size();
    out.m = CMat::Identity(n, n);
    const int c0 = w.index_of(w.lo);
    const int c1 = w.index_of(w.hi);
    bool edges_ok = true;
    for (std::size_t e = 0; e < circuit.elements.size(); ++e) {
      const CircuitElement& el = circuit.elements[e];
      if (el.kind == CircuitElement::Kind::Eom) {
        out.m = apply_eom(el.eom, w).m * out.m;
        // Outermost-bin occupancy over declared unit inputs, after this
        // modulator: anything reaching the window edge is about to be
        // truncated away.
        double worst = 0.0;
        for (int col = c0; col <= c1; ++col)
          worst = std::max({worst, std::norm(out.m(0, col)),
                            std::norm(out.m(n - 1, col))});
        out.stage_edges.push_back({e, worst});
        edges_ok = edges_ok && worst <= opts.eps_trunc;
      } else {
        out.m = apply_shaper(el.mask, w).m * out.m;
      }
    }
    if (!edges_ok && opts.auto_grow) {
      const int next_guard = std::max(4, 2 * w.guard);
      if (w.declared_count() + 2 * next_guard <= opts.max_window) {
        w.guard = next_guard;
        continue;
      }
    }
    double defect = 0.0;
    for (int col = c0; col <= c1; ++col)
      defect = std::max(defect,
                        std::fabs(1.0 - out.m.col(col).squaredNorm()));
    out.truncation_defect = defect;
    if (opts.enforce) {
      if (!edges_ok)
        throw ToleranceError(
            "compose_circuit: stage edge occupancy exceeds budget after "
            "guard growth; increase the window or relax eps_trunc");
      if (defect > opts.eps_trunc)
        throw ToleranceError("compose_circuit: truncation defect " +
                             std::to_string(defect) + " exceeds budget");
    }
    return out;
  }
}

bool truncation_check(const ModeMatrix& v, double eps) {
  for (const auto& s : v.stage_edges)
    if (s.edge_probability >= eps) return false;
  return true;
}

double unitarity_defect(const ModeMatrix& v) {
  const CMat g = v.m.adjoint() * v.m;
  const int c0 = v.window.index_of(v.window.lo);
  const int c1 = v.window.index_of(v.window.hi);
  double worst = 0.0;
  for (int i = c0; i <= c1; ++i)
    for (int j = c0; j <= c1; ++j) {
      const cplx expect = i == j ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
      worst = std::max(worst, std::abs(g(i, j) - expect));
    }
  return worst;
}

QfpCircuit tunable_bs_circuit(double theta, double alpha) {
  QfpCircuit c;
  c.elements.push_back(
      CircuitElement::make_eom(EomDrive{{{1, theta, 0.0}}, {}}));
  c.elements.push_back(CircuitElement::make_shaper(ShaperMask::step(alpha)));
  c.elements.push_back(
      CircuitElement::make_eom(EomDrive{{{1, theta, kPi}}, {}}));
  c.window = Window{0, 1, c.default_guard()};
  return c;
}

CMat tunable_bs_analytic(double theta, double alpha, int sum_terms) {
  const auto j = bessel_jn(sum_terms, theta);
  const double j0sq = j[0] * j[0];
  double s = 0.0;
  for (int k = sum_terms; k >= 1; --k)
    s += j[static_cast<std::size_t>(k)] * j[static_cast<std::size_t>(k - 1)];
  const cplx eia(std::cos(alpha), std::sin(alpha));
  const cplx half_rest = (1.0 + eia) * (1.0 - j0sq) * 0.5;
  CMat w(2, 2);
  w(0, 0) = j0sq + half_rest;
  w(0, 1) = (1.0 - eia) * s;
  w(1, 0) = (1.0 - eia) * s;
  w(1, 1) = eia * j0sq + half_rest;
  return w;
}

}  // namespace qfp
