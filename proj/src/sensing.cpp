#include "surftrap/sensing.hpp"

#include "surftrap/constants.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace surftrap {

namespace {

constexpr double kSensitivityConstant = 2.33;

int ceil_with_tolerance(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, r)) return static_cast<int>(r);
  return static_cast<int>(std::ceil(x));
}

void require_positive_time(double t, const char* name) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidParameter(std::string(name) + " must be positive");
}

}  // namespace

void SensitivitySpec::check() const {
  if (n < 1) throw InvalidParameter("ion count must be >= 1");
  require_positive_time(t2_s, "t2");
  require_positive_time(t_tot_s, "t_tot");
}

double sensitivity_prefactor() {
  return kSensitivityConstant * constants::kHbar / constants::kBohrMagneton;
}

double sensitivity(const SensitivitySpec& spec) {
  spec.check();
  const double n = spec.n;
  double s = sensitivity_prefactor() / std::sqrt(n * spec.t_tot_s * spec.t2_s);
  if (spec.entangled) s /= std::sqrt(n);
  return s;
}

std::string_view to_string(Resource r) {
  switch (r) {
    case Resource::IonCount: return "n";
    case Resource::CoherenceTime: return "t2";
    case Resource::TotalTime: return "t_tot";
    case Resource::EqualTimes: return "t2=t_tot";
  }
  return "n";
}

Resource resource_from_string(std::string_view name) {
  if (name == "n") return Resource::IonCount;
  if (name == "t2") return Resource::CoherenceTime;
  if (name == "t_tot") return Resource::TotalTime;
  if (name == "t2=t_tot" || name == "times") return Resource::EqualTimes;
  throw InvalidParameter("unknown resource '" + std::string(name) + "' (expected n, t2, t_tot or t2=t_tot)");
}

ResourceResult required_resources(const ResourceRequest& request) {
  if (!(request.target_T > 0.0) || !std::isfinite(request.target_T)) {
    throw InvalidParameter("target sensitivity must be positive");
  }
  const double p = sensitivity_prefactor();
  const double target = request.target_T;
  SensitivitySpec spec = request.fixed;
  // Power of n in the denominator of the squared sensitivity.
  const double n_power = spec.entangled ? 2.0 : 1.0;

  switch (request.solve_for) {
    case Resource::IonCount: {
      require_positive_time(spec.t2_s, "t2");
      require_positive_time(spec.t_tot_s, "t_tot");
      const double ratio_sq = p * p / (target * target * spec.t_tot_s * spec.t2_s);
      const double n_real = std::pow(ratio_sq, 1.0 / n_power);
      if (!(n_real <= static_cast<double>(request.n_max))) {
        std::ostringstream os;
        os << "target needs " << n_real << " ions, more than the allowed " << request.n_max;
        throw Infeasible(os.str(), {"n"});
      }
      spec.n = std::max(1, ceil_with_tolerance(n_real));
      break;
    }
    case Resource::CoherenceTime:
      if (spec.n < 1) throw InvalidParameter("ion count must be >= 1");
      require_positive_time(spec.t_tot_s, "t_tot");
      spec.t2_s = p * p / (target * target * std::pow(spec.n, n_power) * spec.t_tot_s);
      break;
    case Resource::TotalTime:
      if (spec.n < 1) throw InvalidParameter("ion count must be >= 1");
      require_positive_time(spec.t2_s, "t2");
      spec.t_tot_s = p * p / (target * target * std::pow(spec.n, n_power) * spec.t2_s);
      break;
    case Resource::EqualTimes: {
      if (spec.n < 1) throw InvalidParameter("ion count must be >= 1");
      const double t = p / (target * std::pow(spec.n, 0.5 * n_power));
      spec.t2_s = t;
      spec.t_tot_s = t;
      break;
    }
  }
  return {spec, sensitivity(spec)};
}

std::string_view to_string(Band b) { return b == Band::RF ? "rf" : "microwave"; }

Band band_from_string(std::string_view name) {
  if (name == "rf" || name == "RF") return Band::RF;
  if (name == "microwave" || name == "Microwave" || name == "mw") return Band::Microwave;
  throw InvalidParameter("unknown band '" + std::string(name) + "' (expected rf or microwave)");
}

TuningMap tune(double bias_field_T, Band band, const TuningConfig& config) {
  if (!(bias_field_T >= 0.0) || !std::isfinite(bias_field_T)) {
    throw InvalidParameter("bias field must be >= 0");
  }
  TuningMap m;
  m.bias_field_T = bias_field_T;
  m.band = band;
  const double shift = config.gamma_hz_per_tesla * bias_field_T;
  if (band == Band::RF) {
    m.f_zero_hz = 0.0;
    m.f_plus_hz = shift;
    m.f_minus_hz = -shift;
    m.sensing_frequency_hz = shift;
    m.in_range = shift >= config.rf_band_lo_hz && shift <= config.rf_band_hi_hz;
  } else {
    m.f_zero_hz = config.microwave_center_hz;
    m.f_plus_hz = config.microwave_center_hz + shift;
    m.f_minus_hz = config.microwave_center_hz - shift;
    m.sensing_frequency_hz = m.f_plus_hz;
    auto inside = [&](double f) { return f >= config.microwave_band_lo_hz && f <= config.microwave_band_hi_hz; };
    m.in_range = inside(m.f_plus_hz) && inside(m.f_minus_hz);
  }
  return m;
}

void ZoneArray::check() const {
  if (positions_um.size() < 2) throw InvalidParameter("gradiometry needs at least 2 zones");
  if (positions_um.size() != sensitivity_T.size()) {
    throw InvalidParameter("zone positions and sensitivities differ in length");
  }
  for (double s : sensitivity_T) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidParameter("zone sensitivities must be >= 0");
  }
}

std::string_view to_string(Pairing p) { return p == Pairing::Adjacent ? "adjacent" : "all-pairs"; }

Pairing pairing_from_string(std::string_view name) {
  if (name == "adjacent") return Pairing::Adjacent;
  if (name == "all-pairs" || name == "all") return Pairing::AllPairs;
  throw InvalidParameter("unknown pairing '" + std::string(name) + "' (expected adjacent or all-pairs)");
}

std::vector<GradientPair> gradiometer_resolution(const ZoneArray& array, Pairing pairing) {
  array.check();
  const int n = static_cast<int>(array.positions_um.size());
  std::vector<GradientPair> out;
  auto add = [&](int i, int j) {
    const double d_um = (array.positions_um[i] - array.positions_um[j]).norm();
    if (d_um == 0.0) {
      std::ostringstream os;
      os << "zones " << i << " and " << j << " coincide; gradient baseline is zero";
      throw ZeroBaseline(os.str());
    }
    const double combined = std::hypot(array.sensitivity_T[i], array.sensitivity_T[j]);
    out.push_back({i, j, d_um, combined / (d_um * kMicron)});
  };
  if (pairing == Pairing::Adjacent) {
    for (int i = 0; i + 1 < n; ++i) add(i, i + 1);
  } else {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) add(i, j);
    }
  }
  return out;
}

}  // namespace surftrap
