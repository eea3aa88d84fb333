#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wte/common.hpp"
#include "wte/signal.hpp"

namespace wte {

// One synthetic cross-frequency-coupling trial: a slow message m(t) and the
// fast signal s(t) modulated by it with a built-in interaction delay.
struct ModulationTrial {
  TimeSeries message;
  TimeSeries modulated;
  int u_samples = 0;
  std::uint64_t seed = 0;
};

enum class ModulationKind { am, pm };

inline const char* modulation_name(ModulationKind k) {
  return k == ModulationKind::am ? "am" : "pm";
}

namespace detail {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct ToneBank {
  std::vector<double> amp;
  std::vector<double> freq;

  double eval(double t) const {
    double v = 0.0;
    for (std::size_t i = 0; i < amp.size(); ++i)
      v += amp[i] * std::cos(kTwoPi * freq[i] * t);
    return v;
  }
};

// Six Rayleigh(0.5) amplitudes, then six uniform frequencies, drawn in that
// fixed order so trials are reproducible from the seed alone.
inline ToneBank draw_tones(Rng& rng, double f_lo, double f_hi) {
  ToneBank bank;
  bank.amp.resize(6);
  bank.freq.resize(6);
  for (auto& a : bank.amp) a = rng.rayleigh(0.5);
  for (auto& f : bank.freq) f = rng.uniform(f_lo, f_hi);
  return bank;
}

// The built-in delay preserves the physical 9.8 ms the base rate implies:
// 10 samples at 1024 Hz, scaled proportionally elsewhere.
inline int builtin_delay_samples(double fs) {
  return static_cast<int>(std::lround(fs * 0.0098));
}

}  // namespace detail

// Amplitude-modulation trial: message with components in (1-8) Hz, carrier
// with six components in (33-64) Hz, s(t) = (1 + m(t-u)) * c(t).
inline ModulationTrial gen_am_trial(double fs, double duration_s,
                                    std::uint64_t seed) {
  if (!(fs >= 256.0))
    throw std::invalid_argument("gen_am_trial: fs must be at least 256 Hz");
  Rng rng(seed);
  const auto message = detail::draw_tones(rng, 1.0, 8.0);
  const auto carrier = detail::draw_tones(rng, 33.0, 64.0);
  const int u = detail::builtin_delay_samples(fs);
  const auto n = static_cast<std::size_t>(std::lround(fs * duration_s));

  ModulationTrial trial;
  trial.seed = seed;
  trial.u_samples = u;
  trial.message.fs = fs;
  trial.message.label = "message";
  trial.modulated.fs = fs;
  trial.modulated.label = "modulated";
  trial.message.samples.resize(n);
  trial.modulated.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double t_delayed = (static_cast<double>(i) - u) / fs;
    trial.message.samples[i] = message.eval(t);
    trial.modulated.samples[i] =
        (1.0 + message.eval(t_delayed)) * carrier.eval(t);
  }
  return trial;
}

// Phase-modulation trial: same message model, single Rayleigh(0.5) carrier
// amplitude, s(t) = a_c cos(2 pi 50 t + 3 m(t-u)).
inline ModulationTrial gen_pm_trial(double fs, double duration_s,
                                    std::uint64_t seed) {
  if (!(fs >= 256.0))
    throw std::invalid_argument("gen_pm_trial: fs must be at least 256 Hz");
  Rng rng(seed);
  const auto message = detail::draw_tones(rng, 1.0, 8.0);
  const double a_c = rng.rayleigh(0.5);
  const int u = detail::builtin_delay_samples(fs);
  const auto n = static_cast<std::size_t>(std::lround(fs * duration_s));

  ModulationTrial trial;
  trial.seed = seed;
  trial.u_samples = u;
  trial.message.fs = fs;
  trial.message.label = "message";
  trial.modulated.fs = fs;
  trial.modulated.label = "modulated";
  trial.message.samples.resize(n);
  trial.modulated.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double t_delayed = (static_cast<double>(i) - u) / fs;
    trial.message.samples[i] = message.eval(t);
    trial.modulated.samples[i] = a_c * std::cos(detail::kTwoPi * 50.0 * t +
                                                3.0 * message.eval(t_delayed));
  }
  return trial;
}

// One generated pair ready for analysis: x carries the message, y the
// modulated signal, both with independent white noise at the trial's SNR.
struct TrialPair {
  double snr_db = 0.0;
  std::size_t trial_index = 0;
  TimeSeries x;
  TimeSeries y;
  ModulationTrial clean;
};

// Full experiment grid: trials_per_snr fresh trials at every SNR. Each trial
// derives its generator seed and two independent noise seeds from the
// experiment seed and the flat trial index.
inline std::vector<TrialPair> gen_experiment(ModulationKind kind,
                                             const std::vector<double>& snr_grid_db,
                                             std::size_t trials_per_snr,
                                             double fs, double duration_s,
                                             std::uint64_t seed) {
  std::vector<TrialPair> out;
  for (std::size_t si = 0; si < snr_grid_db.size(); ++si) {
    for (std::size_t ti = 0; ti < trials_per_snr; ++ti) {
      const std::uint64_t trial_seed =
          derive_seed(seed, 3, si * trials_per_snr + ti);
      TrialPair pair;
      pair.snr_db = snr_grid_db[si];
      pair.trial_index = ti;
      pair.clean = kind == ModulationKind::am
                       ? gen_am_trial(fs, duration_s, derive_seed(trial_seed, 0))
                       : gen_pm_trial(fs, duration_s, derive_seed(trial_seed, 0));
      Rng noise_x(derive_seed(trial_seed, 1));
      Rng noise_y(derive_seed(trial_seed, 2));
      pair.x = add_noise_at_snr(pair.clean.message, pair.snr_db, noise_x);
      pair.y = add_noise_at_snr(pair.clean.modulated, pair.snr_db, noise_y);
      pair.x.label = "x";
      pair.y.label = "y";
      out.push_back(std::move(pair));
    }
  }
  return out;
}

}  // namespace wte
