#pragma once

#include <string>
#include <vector>

namespace pipescan {

struct AcqMetadata {
  double tx_power_dbm = 15.0;
  double gain_tx_db = 7.0;
  double gain_rx_db = 7.0;
  double gain_lna_db = 21.0;
  double scan_duration_min = 14.0;
};

// SFCW scan geometry and frequency sweep. Metadata fields describe the rig
// and do not scale the simulated field.
struct AcquisitionConfig {
  double scan_length_m = 1.2;
  int n_positions = 45;
  double f_min_hz = 1.2e9;
  double f_max_hz = 3.775e9;
  double f_step_hz = 25e6;
  double antenna_height_m = 0.0;  // monostatic antenna at (x, -height)
  AcqMetadata metadata;

  void validate() const;
  int n_frequencies() const;
};

struct Band {
  double f_start_hz = 0.0;
  double f_stop_hz = 0.0;
  double bandwidth_hz() const { return f_stop_hz - f_start_hz; }
};

// Equal-bandwidth sliding windows: band b spans
// [f_min + b*spacing, f_max - (n_bands-1-b)*spacing], each sampled at the
// config's f_step_hz starting from its own band start.
struct BandPlan {
  int n_bands = 1;
  double band_spacing_hz = 0.0;
  std::vector<Band> bands;
};

std::vector<double> frequency_grid(const AcquisitionConfig& config);
std::vector<double> scan_positions(const AcquisitionConfig& config);
BandPlan make_band_plan(const AcquisitionConfig& config, int n_bands, double band_spacing_hz);

// Config restricted to one band of the plan (same positions, band's sweep).
AcquisitionConfig band_config(const AcquisitionConfig& config, const Band& band);

std::string to_json(const AcquisitionConfig& config);
AcquisitionConfig acquisition_from_json(const std::string& text);
std::string to_json(const BandPlan& plan);

}  // namespace pipescan
