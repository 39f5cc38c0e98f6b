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

#include "qfp/counts.hpp"

#include <array>
#include <cmath>
#include <exception>
#include <set>
#include <sstream>
#include <utility>

#include "qfp/channel.hpp"
#include "qfp/errors.hpp"
#include "qfp/rng.hpp"
#include "qfp/serialize.hpp"

namespace qfp {

namespace {

// First-order counting model validity limit: per-frame click probabilities
// above this make the neglected higher-order terms visible.
constexpr double kLinearRegimeMax = 0.1;

constexpr const char* kKindQst = "qst";
constexpr const char* kKindCnot = "cnot_truth_table";
constexpr const char* kKindQpt = "qpt";

void check_prob(double p, const char* name, const char* context) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0)
    throw ConfigError(std::string(context) + ": " + name +
                      " must lie in [0, 1]");
}

void check_linear(double per_frame, const char* what, const char* context) {
  if (per_frame > kLinearRegimeMax)
    throw ToleranceError(std::string(context) + ": expected " + what +
                         " per frame " + double_repr(per_frame) +
                         " exceeds " + double_repr(kLinearRegimeMax) +
                         "; the first-order counting model does not apply");
}

}  // namespace

void DetectorModel::validate() const {
  check_prob(efficiency, "efficiency", "DetectorModel");
  if (!std::isfinite(dark_prob) || dark_prob < 0.0 || dark_prob >= 1.0)
    throw ConfigError("DetectorModel: dark_prob must lie in [0, 1)");
  if (!std::isfinite(frame_seconds) || frame_seconds <= 0.0)
    throw ConfigError("DetectorModel: frame_seconds must be positive");
  if (!std::isfinite(integration_seconds) || integration_seconds < 0.0)
    throw ConfigError("DetectorModel: integration_seconds must be >= 0");
}

bool DetectorModel::linear_regime() const {
  return efficiency <= kLinearRegimeMax && dark_prob <= kLinearRegimeMax;
}

nlohmann::json DetectorModel::to_json() const {
  return nlohmann::json{{"efficiency", efficiency},
                        {"dark_prob", dark_prob},
                        {"frame_seconds", frame_seconds},
                        {"integration_seconds", integration_seconds}};
}

DetectorModel DetectorModel::from_json(const nlohmann::json& j) {
  const std::string ctx = "DetectorModel";
  require_object(j, ctx);
  require_keys(j,
               {"efficiency", "dark_prob", "frame_seconds",
                "integration_seconds"},
               ctx);
  DetectorModel d;
  d.efficiency = get_required<double>(j, "efficiency", ctx);
  d.dark_prob = get_required<double>(j, "dark_prob", ctx);
  d.frame_seconds = get_required<double>(j, "frame_seconds", ctx);
  d.integration_seconds = get_required<double>(j, "integration_seconds", ctx);
  d.validate();
  return d;
}

void PairSourceModel::validate() const {
  if (!std::isfinite(mu) || mu < 0.0 || mu > 0.1)
    throw ConfigError(
        "PairSourceModel: mu must lie in [0, 0.1] (single-pair model)");
  detector_a.validate();
  detector_b.validate();
  if (detector_a.frame_seconds != detector_b.frame_seconds)
    throw ConfigError(
        "PairSourceModel: detectors must share one coincidence frame");
}

bool PairSourceModel::linear_regime() const {
  return mu <= kLinearRegimeMax && detector_a.linear_regime() &&
         detector_b.linear_regime();
}

nlohmann::json PairSourceModel::to_json() const {
  return nlohmann::json{{"mu", mu},
                        {"detector_a", detector_a.to_json()},
                        {"detector_b", detector_b.to_json()}};
}

PairSourceModel PairSourceModel::from_json(const nlohmann::json& j) {
  const std::string ctx = "PairSourceModel";
  require_object(j, ctx);
  require_keys(j, {"mu", "detector_a", "detector_b"}, ctx);
  PairSourceModel s;
  s.mu = get_required<double>(j, "mu", ctx);
  s.detector_a = DetectorModel::from_json(j.at("detector_a"));
  s.detector_b = DetectorModel::from_json(j.at("detector_b"));
  s.validate();
  return s;
}

std::string axis_label(PauliAxis axis) {
  switch (axis) {
    case PauliAxis::X:
      return "X";
    case PauliAxis::Y:
      return "Y";
    case PauliAxis::Z:
      return "Z";
  }
  throw ConfigError("axis_label: invalid axis value");
}

PauliAxis axis_from_label(const std::string& label) {
  if (label == "X") return PauliAxis::X;
  if (label == "Y") return PauliAxis::Y;
  if (label == "Z") return PauliAxis::Z;
  throw ConfigError("axis_from_label: unknown axis '" + label + "'");
}

void MeasurementSetting::validate() const {
  axis_label(axis);
  if (!std::isfinite(success) || success <= 0.0 || success > 1.0)
    throw ConfigError("MeasurementSetting: success must lie in (0, 1]");
}

std::string MeasurementSetting::gate_chain() const {
  switch (axis) {
    case PauliAxis::X:
      return "H";
    case PauliAxis::Y:
      return "H S^dagger";
    case PauliAxis::Z:
      return "identity";
  }
  throw ConfigError("MeasurementSetting: invalid axis value");
}

CMat MeasurementSetting::demux_rotation() const {
  const double r = 1.0 / std::sqrt(2.0);
  CMat g = CMat::Identity(2, 2);
  switch (axis) {
    case PauliAxis::Z:
      break;
    case PauliAxis::X:
      g << r, r, r, -r;
      break;
    case PauliAxis::Y:
      // H * diag(1, -i): +1 outcome projects onto (|0> + i|1>)/sqrt(2).
      g << r, cplx(0.0, -r), r, cplx(0.0, r);
      break;
  }
  return g;
}

MeasurementSetting qst_setting(PauliAxis axis, double hadamard_success) {
  MeasurementSetting s;
  s.axis = axis;
  s.success = axis == PauliAxis::Z ? 1.0 : hadamard_success;
  s.validate();
  return s;
}

std::vector<MeasurementSetting> qst_settings(double hadamard_success) {
  return {qst_setting(PauliAxis::Z, hadamard_success),
          qst_setting(PauliAxis::X, hadamard_success),
          qst_setting(PauliAxis::Y, hadamard_success)};
}

void CountRecord::validate() const {
  if (kind != kKindQst && kind != kKindQpt && kind != kKindCnot)
    throw ConfigError("CountRecord: unknown kind '" + kind + "'");
  std::set<std::pair<std::string, std::string>> seen;
  for (const CountEntry& e : entries) {
    if (e.count < 0)
      throw ConfigError("CountRecord: negative count for " + e.setting + "/" +
                        e.outcome);
    if (!seen.emplace(e.setting, e.outcome).second)
      throw ConfigError("CountRecord: duplicate counter " + e.setting + "/" +
                        e.outcome);
  }
}

long long CountRecord::count_of(const std::string& setting,
                                const std::string& outcome) const {
  for (const CountEntry& e : entries)
    if (e.setting == setting && e.outcome == outcome) return e.count;
  throw ConfigError("CountRecord: no counter " + setting + "/" + outcome);
}

nlohmann::json CountRecord::to_json() const {
  nlohmann::json ents = nlohmann::json::array();
  for (const CountEntry& e : entries)
    ents.push_back(nlohmann::json{
        {"setting", e.setting}, {"outcome", e.outcome}, {"count", e.count}});
  return nlohmann::json{
      {"kind", kind}, {"entries", std::move(ents)}, {"metadata", metadata}};
}

CountRecord CountRecord::from_json(const nlohmann::json& j) {
  const std::string ctx = "CountRecord";
  require_object(j, ctx);
  require_keys(j, {"kind", "entries", "metadata"}, ctx);
  CountRecord r;
  r.kind = get_required<std::string>(j, "kind", ctx);
  const nlohmann::json& ents = j.at("entries");
  if (!ents.is_array()) throw ConfigError(ctx + ": entries must be an array");
  for (const nlohmann::json& je : ents) {
    require_object(je, ctx + " entry");
    require_keys(je, {"setting", "outcome", "count"}, ctx + " entry");
    CountEntry e;
    e.setting = get_required<std::string>(je, "setting", ctx);
    e.outcome = get_required<std::string>(je, "outcome", ctx);
    e.count = get_required<long long>(je, "count", ctx);
    r.entries.push_back(std::move(e));
  }
  if (!j.at("metadata").is_object())
    throw ConfigError(ctx + ": metadata must be an object");
  r.metadata = j.at("metadata");
  r.validate();
  return r;
}

std::string CountRecord::truth_table_csv() const {
  if (kind != kKindCnot)
    throw ConfigError("truth_table_csv: record kind '" + kind +
                      "' is not a truth table");
  std::ostringstream out;
  out << "# qfp-truth-table";
  for (const char* key : {"mu", "integration_seconds", "seed"})
    if (metadata.contains(key))
      out << " " << key << "=" << metadata.at(key).dump();
  out << "\ninput,output,count\n";
  for (const char* input : {"00", "01", "10", "11"})
    for (const char* output : {"00", "01", "10", "11"})
      out << input << "," << output << ","
          << count_of(std::string("input_") + input,
                      std::string("coinc_") + output)
          << "\n";
  return out.str();
}

std::pair<double, double> projection_probs(const CMat& rho,
                                           const MeasurementSetting& setting) {
  setting.validate();
  DensityMatrix dm{rho};
  dm.validate();
  if (rho.rows() != 2)
    throw ConfigError("projection_probs: expected a qubit state");
  const CMat g = setting.demux_rotation();
  const CMat rotated = g * rho * g.adjoint();
  double p0 = rotated(0, 0).real();
  double p1 = rotated(1, 1).real();
  // Guard against rounding pushing a projection just outside [0, 1].
  p0 = std::min(1.0, std::max(0.0, p0));
  p1 = std::min(1.0, std::max(0.0, p1));
  const double norm = p0 + p1;
  return {p0 / norm, p1 / norm};
}

CountRecord simulate_qst_counts(const CMat& rho,
                                const std::vector<MeasurementSetting>& settings,
                                double flux_hz, const DetectorModel& detector,
                                std::uint64_t seed) {
  if (!std::isfinite(flux_hz) || flux_hz < 0.0)
    throw ConfigError("simulate_qst_counts: flux must be finite and >= 0");
  detector.validate();
  if (settings.empty())
    throw ConfigError("simulate_qst_counts: no measurement settings");
  std::set<std::string> labels;
  for (const MeasurementSetting& s : settings) {
    s.validate();
    if (!labels.insert(axis_label(s.axis)).second)
      throw ConfigError("simulate_qst_counts: duplicate axis " +
                        axis_label(s.axis));
    // Both outcome counters of a setting share the photon stream, so the
    // per-frame expectation sums the photon term once plus both dark terms.
    check_linear(flux_hz * detector.frame_seconds * s.success *
                         detector.efficiency +
                     2.0 * detector.dark_prob,
                 "clicks", "simulate_qst_counts");
  }

  const std::size_t n = settings.size();
  std::vector<std::array<long long, 2>> counts(n);
  std::vector<std::array<double, 2>> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [p0, p1] = projection_probs(rho, settings[i]);
    probs[i] = {p0, p1};
  }

  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      Rng rng = Rng::substream(seed, "qst-setting",
                               static_cast<std::uint64_t>(i));
      for (int o = 0; o < 2; ++o) {
        const double mean = flux_hz * detector.integration_seconds *
                                settings[i].success * detector.efficiency *
                                probs[i][o] +
                            detector.dark_rate_hz() *
                                detector.integration_seconds;
        counts[i][o] = rng.poisson(mean);
      }
    } catch (...) {
#pragma omp critical(qfp_counts_qst_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  CountRecord rec;
  rec.kind = kKindQst;
  nlohmann::json jsettings = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string label = axis_label(settings[i].axis);
    rec.entries.push_back({label, "0", counts[i][0]});
    rec.entries.push_back({label, "1", counts[i][1]});
    jsettings.push_back(nlohmann::json{{"axis", label},
                                       {"success", settings[i].success}});
  }
  rec.metadata = nlohmann::json{{"flux_hz", flux_hz},
                                {"detector", detector.to_json()},
                                {"settings", std::move(jsettings)},
                                {"seed", seed}};
  rec.validate();
  return rec;
}

CMat pauli_eigenstate(PauliAxis axis, int sign) {
  if (sign != 1 && sign != -1)
    throw ConfigError("pauli_eigenstate: sign must be +1 or -1");
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Vector2cd psi;
  switch (axis) {
    case PauliAxis::Z:
      psi << (sign == 1 ? 1.0 : 0.0), (sign == 1 ? 0.0 : 1.0);
      break;
    case PauliAxis::X:
      psi << r, (sign == 1 ? r : -r);
      break;
    case PauliAxis::Y:
      psi << r, cplx(0.0, sign == 1 ? r : -r);
      break;
  }
  return psi * psi.adjoint();
}

std::vector<std::string> qpt_input_labels() {
  return {"Z+", "Z-", "X+", "X-", "Y+", "Y-"};
}

CMat qpt_input_state(const std::string& label) {
  if (label.size() != 2 || (label[1] != '+' && label[1] != '-'))
    throw ConfigError("qpt_input_state: unknown input label '" + label + "'");
  return pauli_eigenstate(axis_from_label(label.substr(0, 1)),
                          label[1] == '+' ? 1 : -1);
}

CountRecord simulate_qpt_counts(const KrausSet& channel, double flux_hz,
                                const DetectorModel& detector,
                                double hadamard_success, std::uint64_t seed) {
  channel.validate();
  if (channel.dim_in() != 2 || channel.dim_out() != 2)
    throw ConfigError("simulate_qpt_counts: expected a qubit channel");
  if (!std::isfinite(flux_hz) || flux_hz < 0.0)
    throw ConfigError("simulate_qpt_counts: flux must be finite and >= 0");
  detector.validate();
  const std::vector<MeasurementSetting> axes = qst_settings(hadamard_success);
  for (const MeasurementSetting& s : axes)
    check_linear(flux_hz * detector.frame_seconds * s.success *
                         detector.efficiency +
                     2.0 * detector.dark_prob,
                 "clicks", "simulate_qpt_counts");

  const std::vector<std::string> inputs = qpt_input_labels();
  std::array<std::array<std::array<long long, 2>, 3>, 6> counts{};
  std::array<std::array<std::array<double, 2>, 3>, 6> probs{};
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const CMat rho_out = apply_channel(channel, DensityMatrix{qpt_input_state(inputs[i])}).rho;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto [p0, p1] = projection_probs(rho_out, axes[a]);
      probs[i][a] = {p0, p1};
    }
  }

  std::exception_ptr failure;
#pragma omp parallel for schedule(static) collapse(2)
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      try {
        Rng rng = Rng::substream(seed, "qpt-setting",
                                 static_cast<std::uint64_t>(3 * i + a));
        for (int o = 0; o < 2; ++o) {
          const double mean = flux_hz * detector.integration_seconds *
                                  axes[a].success * detector.efficiency *
                                  probs[i][a][o] +
                              detector.dark_rate_hz() *
                                  detector.integration_seconds;
          counts[i][a][o] = rng.poisson(mean);
        }
      } catch (...) {
#pragma omp critical(qfp_counts_qpt_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  CountRecord rec;
  rec.kind = kKindQpt;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t a = 0; a < 3; ++a) {
      const std::string setting = inputs[i] + "/" + axis_label(axes[a].axis);
      rec.entries.push_back({setting, "0", counts[i][a][0]});
      rec.entries.push_back({setting, "1", counts[i][a][1]});
    }
  rec.metadata = nlohmann::json{{"flux_hz", flux_hz},
                                {"detector", detector.to_json()},
                                {"hadamard_success", hadamard_success},
                                {"seed", seed}};
  rec.validate();
  return rec;
}

void CnotBins::validate(const Window& window) const {
  const int b[4] = {control0, control1, target0, target1};
  std::set<int> uniq(b, b + 4);
  if (uniq.size() != 4)
    throw ConfigError("CnotBins: the four logical bins must be distinct");
  for (int bin : b)
    if (bin < window.lo || bin > window.hi)
      throw ConfigError("CnotBins: bin " + std::to_string(bin) +
                        " is not a declared window bin");
}

ClickProbs cnot_click_probs(const ModeMatrix& v, int input_control,
                            int input_target, int monitored_control,
                            int monitored_target,
                            const PairSourceModel& source,
                            const CnotBins& bins) {
  source.validate();
  bins.validate(v.window);
  if (v.m.rows() != v.window.size() || v.m.cols() != v.window.size())
    throw ConfigError("cnot_click_probs: matrix does not match its window");
  for (int flag : {input_control, input_target, monitored_control,
                   monitored_target})
    if (flag != 0 && flag != 1)
      throw ConfigError("cnot_click_probs: qubit indices must be 0 or 1");

  const int ck = bins.control_bin(input_control);
  const int tl = bins.target_bin(input_target);
  const int cr = bins.control_bin(monitored_control);
  const int ts = bins.target_bin(monitored_target);

  // Singles: each photon of the pair routed independently through its own
  // input column; phases cannot enter.
  const double q_a = std::norm(v.at(cr, ck));
  const double q_b = std::norm(v.at(ts, tl));
  // Coincidences: the two-photon transfer amplitude, direct plus exchange
  // pathway; relative phases of the multiport shift the interference.
  const double q_ab =
      std::norm(v.at(cr, ck) * v.at(ts, tl) + v.at(ts, ck) * v.at(cr, tl));

  ClickProbs p;
  p.p_a = source.mu * source.detector_a.efficiency * q_a +
          source.detector_a.dark_prob;
  p.p_b = source.mu * source.detector_b.efficiency * q_b +
          source.detector_b.dark_prob;
  p.p_ab = source.mu * source.detector_a.efficiency *
               source.detector_b.efficiency * q_ab +
           2.0 * p.p_a * p.p_b;
  check_linear(p.p_a, "detector-A clicks", "cnot_click_probs");
  check_linear(p.p_b, "detector-B clicks", "cnot_click_probs");
  check_linear(p.p_ab, "coincidences", "cnot_click_probs");
  return p;
}

CountRecord simulate_cnot_truth_table(const ModeMatrix& v,
                                      const PairSourceModel& source,
                                      double integration_seconds,
                                      std::uint64_t seed,
                                      const CnotBins& bins) {
  source.validate();
  bins.validate(v.window);
  if (!std::isfinite(integration_seconds) || integration_seconds <= 0.0)
    throw ConfigError(
        "simulate_cnot_truth_table: integration time must be positive");
  const double frames =
      integration_seconds / source.detector_a.frame_seconds;

  // Per-input counters in a fixed order: 4 coincidences, A singles, B
  // singles.  Eight Poisson draws per input, drawn in this order from the
  // input's own substream.
  std::array<std::array<long long, 8>, 4> counts{};
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int input = 0; input < 4; ++input) {
    try {
      const int k = input >> 1;
      const int l = input & 1;
      Rng rng =
          Rng::substream(seed, "cnot-input", static_cast<std::uint64_t>(input));
      for (int out = 0; out < 4; ++out) {
        const ClickProbs p =
            cnot_click_probs(v, k, l, out >> 1, out & 1, source, bins);
        counts[input][out] = rng.poisson(frames * p.p_ab);
      }
      for (int r = 0; r < 2; ++r) {
        const ClickProbs p = cnot_click_probs(v, k, l, r, 0, source, bins);
        counts[input][4 + r] = rng.poisson(frames * p.p_a);
      }
      for (int s = 0; s < 2; ++s) {
        const ClickProbs p = cnot_click_probs(v, k, l, 0, s, source, bins);
        counts[input][6 + s] = rng.poisson(frames * p.p_b);
      }
    } catch (...) {
#pragma omp critical(qfp_counts_cnot_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  CountRecord rec;
  rec.kind = kKindCnot;
  const char* bit[2] = {"0", "1"};
  for (int input = 0; input < 4; ++input) {
    const std::string in_label =
        std::string("input_") + bit[input >> 1] + bit[input & 1];
    for (int out = 0; out < 4; ++out)
      rec.entries.push_back({in_label,
                             std::string("coinc_") + bit[out >> 1] +
                                 bit[out & 1],
                             counts[input][out]});
    for (int r = 0; r < 2; ++r)
      rec.entries.push_back(
          {in_label, std::string("single_a_") + bit[r], counts[input][4 + r]});
    for (int s = 0; s < 2; ++s)
      rec.entries.push_back(
          {in_label, std::string("single_b_") + bit[s], counts[input][6 + s]});
  }
  rec.metadata =
      nlohmann::json{{"mu", source.mu},
                     {"detector_a", source.detector_a.to_json()},
                     {"detector_b", source.detector_b.to_json()},
                     {"integration_seconds", integration_seconds},
                     {"seed", seed},
                     {"bins", nlohmann::json::array({bins.control0,
                                                     bins.control1,
                                                     bins.target0,
                                                     bins.target1})}};
  rec.validate();
  return rec;
}

}  // namespace qfp
