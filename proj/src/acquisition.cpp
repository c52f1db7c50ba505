#include "pipescan/acquisition.h"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace pipescan {

namespace {
// Point count of an inclusive arithmetic progression, validated to be integral
// within 1e-6 of a step.
int grid_point_count(double f_min, double f_max, double step) {
  const double span = f_max - f_min;
  const double steps = span / step;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-6)
    throw std::runtime_error("frequency grid: (f_max - f_min)/f_step is not an integer");
  return static_cast<int>(rounded) + 1;
}
}  // namespace

void AcquisitionConfig::validate() const {
  if (!(f_min_hz <= f_max_hz)) throw std::invalid_argument("AcquisitionConfig: f_min > f_max");
  if (f_min_hz < f_max_hz && !(f_step_hz > 0.0))
    throw std::invalid_argument("AcquisitionConfig: f_step_hz must be > 0");
  if (n_positions < 2) throw std::invalid_argument("AcquisitionConfig: n_positions must be >= 2");
  if (!(scan_length_m > 0.0))
    throw std::invalid_argument("AcquisitionConfig: scan_length_m must be > 0");
  if (antenna_height_m < 0.0)
    throw std::invalid_argument("AcquisitionConfig: antenna_height_m must be >= 0");
  if (f_min_hz < f_max_hz) grid_point_count(f_min_hz, f_max_hz, f_step_hz);
}

int AcquisitionConfig::n_frequencies() const {
  if (f_min_hz == f_max_hz) return 1;
  return grid_point_count(f_min_hz, f_max_hz, f_step_hz);
}

std::vector<double> frequency_grid(const AcquisitionConfig& config) {
  config.validate();
  const int n = config.n_frequencies();
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = config.f_min_hz + i * config.f_step_hz;
  return f;
}

std::vector<double> scan_positions(const AcquisitionConfig& config) {
  config.validate();
  std::vector<double> x(config.n_positions);
  const double dx = config.scan_length_m / (config.n_positions - 1);
  for (int i = 0; i < config.n_positions; ++i) x[i] = i * dx;
  return x;
}

BandPlan make_band_plan(const AcquisitionConfig& config, int n_bands, double band_spacing_hz) {
  config.validate();
  if (n_bands < 1) throw std::invalid_argument("make_band_plan: n_bands must be >= 1");
  if (n_bands > 1 && !(band_spacing_hz > 0.0))
    throw std::invalid_argument("make_band_plan: band_spacing_hz must be > 0");
  const double span = config.f_max_hz - config.f_min_hz;
  if ((n_bands - 1) * band_spacing_hz >= span)
    throw std::runtime_error("make_band_plan: bands would have non-positive bandwidth");

  BandPlan plan;
  plan.n_bands = n_bands;
  plan.band_spacing_hz = band_spacing_hz;
  plan.bands.resize(n_bands);
  for (int b = 0; b < n_bands; ++b) {
    plan.bands[b].f_start_hz = config.f_min_hz + b * band_spacing_hz;
    plan.bands[b].f_stop_hz = config.f_max_hz - (n_bands - 1 - b) * band_spacing_hz;
  }
  return plan;
}

AcquisitionConfig band_config(const AcquisitionConfig& config, const Band& band) {
  if (band.f_start_hz < config.f_min_hz - 1e-3 || band.f_stop_hz > config.f_max_hz + 1e-3)
    throw std::runtime_error("band_config: band outside configured span");
  AcquisitionConfig bc = config;
  bc.f_min_hz = band.f_start_hz;
  // The band resamples its own arithmetic grid at f_step_hz from the band
  // start; the stop is trimmed to the last full step.
  const int n = static_cast<int>(std::floor(band.bandwidth_hz() / config.f_step_hz + 1e-9)) + 1;
  bc.f_max_hz = band.f_start_hz + (n - 1) * config.f_step_hz;
  return bc;
}

std::string to_json(const AcquisitionConfig& c) {
  nlohmann::json j;
  j["scan_length_m"] = c.scan_length_m;
  j["n_positions"] = c.n_positions;
  j["f_min_hz"] = static_cast<std::int64_t>(std::llround(c.f_min_hz));
  j["f_max_hz"] = static_cast<std::int64_t>(std::llround(c.f_max_hz));
  j["f_step_hz"] = static_cast<std::int64_t>(std::llround(c.f_step_hz));
  j["antenna_height_m"] = c.antenna_height_m;
  j["metadata"] = {{"tx_power_dbm", c.metadata.tx_power_dbm},
                   {"gain_tx_db", c.metadata.gain_tx_db},
                   {"gain_rx_db", c.metadata.gain_rx_db},
                   {"gain_lna_db", c.metadata.gain_lna_db},
                   {"scan_duration_min", c.metadata.scan_duration_min}};
  return j.dump(2);
}

AcquisitionConfig acquisition_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("acquisition_from_json: ") + e.what());
  }
  AcquisitionConfig c;
  c.scan_length_m = j.value("scan_length_m", c.scan_length_m);
  c.n_positions = j.value("n_positions", c.n_positions);
  c.f_min_hz = j.value("f_min_hz", c.f_min_hz);
  c.f_max_hz = j.value("f_max_hz", c.f_max_hz);
  c.f_step_hz = j.value("f_step_hz", c.f_step_hz);
  c.antenna_height_m = j.value("antenna_height_m", c.antenna_height_m);
  if (j.contains("metadata")) {
    const auto& m = j["metadata"];
    c.metadata.tx_power_dbm = m.value("tx_power_dbm", c.metadata.tx_power_dbm);
    c.metadata.gain_tx_db = m.value("gain_tx_db", c.metadata.gain_tx_db);
    c.metadata.gain_rx_db = m.value("gain_rx_db", c.metadata.gain_rx_db);
    c.metadata.gain_lna_db = m.value("gain_lna_db", c.metadata.gain_lna_db);
    c.metadata.scan_duration_min = m.value("scan_duration_min", c.metadata.scan_duration_min);
  }
  c.validate();
  return c;
}

std::string to_json(const BandPlan& plan) {
  nlohmann::json j;
  j["n_bands"] = plan.n_bands;
  j["band_spacing_hz"] = static_cast<std::int64_t>(std::llround(plan.band_spacing_hz));
  j["bands"] = nlohmann::json::array();
  for (const auto& b : plan.bands)
    j["bands"].push_back({{"f_start_hz", static_cast<std::int64_t>(std::llround(b.f_start_hz))},
                          {"f_stop_hz", static_cast<std::int64_t>(std::llround(b.f_stop_hz))}});
  return j.dump(2);
}

}  // namespace pipescan
