//! Synthetic PMU windows for the three event classes.
//!
//! The feeder is reduced to a Thevenin source `E` behind impedance `Z`
//! feeding a constant-current load at a fixed power factor. Steady phasors
//! satisfy `V = E − I·Z`; with the load current expressed relative to the
//! bus voltage angle, `I = c·e^{jθv}`, the solve is closed form:
//!
//! ```text
//! a + jb = Z·c
//! |V|    = sqrt(E² − b²) − a
//! θv     = −atan2(b, |V| + a)
//! ```
//!
//! Event signatures (noise free):
//!
//! * capacitor switching: `|V|` ramps by `cap_step_v` over
//!   `cap_transition_s`; the capacitor's leading current is added to the
//!   measured current.
//! * OLTC malfunction: the effective source voltage moves one tap so that
//!   `|V|` ramps by `±tap_step_v`, dwells, then ramps back to the original
//!   level.
//! * abrupt load change: the load current steps by `load_step_fraction`
//!   between two samples.
//!
//! Gaussian noise proportional to each channel's value is added afterwards.

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::phasor::{
    sample_times, wrap_deg, Dataset, EventClass, EventRecord, LoadLevel, PhasorSample,
    ScenarioParams, LOAD_COUNT, SUPPORTED_SPS,
};
use crate::rng::{self, stream};

/// Generator parameters. Field names double as keys of the flat config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub sps: u32,
    /// Source voltage magnitude, pu.
    pub thevenin_source: f64,
    /// Source impedance magnitude, pu.
    pub thevenin_impedance_mag: f64,
    pub thevenin_impedance_angle_deg: f64,
    /// Load current at 100 % aggregate loading, pu.
    pub base_load_current: f64,
    /// Range of the per-load power-factor angles (lagging), drawn once from
    /// `master_seed`.
    pub load_pf_angle_range_deg: [f64; 2],
    pub cap_step_v: f64,
    pub cap_transition_s: f64,
    pub tap_step_v: f64,
    pub oltc_transition_range_s: [f64; 2],
    pub oltc_dwell_range_s: [f64; 2],
    pub event_time_range_s: [f64; 2],
    pub noise_std_fraction: f64,
    pub master_seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            sps: 60,
            thevenin_source: 1.02,
            thevenin_impedance_mag: 0.05,
            thevenin_impedance_angle_deg: 70.0,
            base_load_current: 0.8,
            load_pf_angle_range_deg: [15.0, 35.0],
            cap_step_v: 0.015,
            cap_transition_s: 1.0 / 60.0,
            tap_step_v: 0.00625,
            oltc_transition_range_s: [0.030, 0.200],
            oltc_dwell_range_s: [0.100, 0.500],
            event_time_range_s: [0.2, 0.6],
            noise_std_fraction: 0.01,
            master_seed: 0,
        }
    }
}

/// Time of the last sample in a window; every event must settle by then.
fn window_end(sps: u32) -> f64 {
    (sps - 1) as f64 / sps as f64
}

impl GeneratorConfig {
    pub fn with_sps(mut self, sps: u32) -> Self {
        self.sps = sps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::format("generator config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_SPS.contains(&self.sps) {
            return Err(Error::invalid(format!(
                "sps must be one of {SUPPORTED_SPS:?}, got {}",
                self.sps
            )));
        }
        let positive = [
            ("thevenin_source", self.thevenin_source),
            ("thevenin_impedance_mag", self.thevenin_impedance_mag),
            ("base_load_current", self.base_load_current),
            ("cap_transition_s", self.cap_transition_s),
            ("oltc_transition_range_s", self.oltc_transition_range_s[0]),
            ("oltc_dwell_range_s", self.oltc_dwell_range_s[0]),
            ("event_time_range_s", self.event_time_range_s[0]),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, [lo, hi]) in [
            ("load_pf_angle_range_deg", self.load_pf_angle_range_deg),
            ("oltc_transition_range_s", self.oltc_transition_range_s),
            ("oltc_dwell_range_s", self.oltc_dwell_range_s),
            ("event_time_range_s", self.event_time_range_s),
        ] {
            if !(lo <= hi && hi.is_finite()) {
                return Err(Error::invalid(format!("{name} must satisfy lo <= hi")));
            }
        }
        if !(self.noise_std_fraction >= 0.0 && self.noise_std_fraction.is_finite()) {
            return Err(Error::invalid("noise_std_fraction must be >= 0"));
        }
        if !(self.cap_step_v.is_finite() && self.tap_step_v.is_finite()) {
            return Err(Error::invalid("step sizes must be finite"));
        }
        let end = window_end(self.sps);
        let latest = self.event_time_range_s[1];
        if latest >= end
            || latest + self.cap_transition_s > end
            || latest + 2.0 * self.oltc_transition_range_s[0] + self.oltc_dwell_range_s[0] > end
        {
            return Err(Error::invalid(
                "latest event time plus shortest transitions and dwell must fit in the window",
            ));
        }
        Ok(())
    }

    fn impedance(&self) -> Complex64 {
        Complex64::from_polar(
            self.thevenin_impedance_mag,
            self.thevenin_impedance_angle_deg.to_radians(),
        )
    }

    /// Lagging power-factor angle (degrees) of each of the 15 loads.
    pub fn load_pf_angles(&self) -> [f64; LOAD_COUNT] {
        let mut r = rng::rng(rng::derive(self.master_seed, stream::LOADS, 0));
        let [lo, hi] = self.load_pf_angle_range_deg;
        std::array::from_fn(|_| if lo == hi { lo } else { r.random_range(lo..hi) })
    }

    /// Pre-event aggregate loading of a class-3 scenario on `load_index`:
    /// spread evenly over 50–95 % across the loads.
    pub fn class3_loading(load_index: usize) -> f64 {
        0.50 + 0.45 * load_index as f64 / (LOAD_COUNT - 1) as f64
    }
}

/// A steady phasor state of the measured bus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub v_mag: f64,
    pub v_ang: f64,
    pub i_mag: f64,
    pub i_ang: f64,
}

impl SteadyState {
    fn lerp(&self, to: &SteadyState, rho: f64) -> SteadyState {
        let l = |a: f64, b: f64| if rho == 0.0 { a } else if rho == 1.0 { b } else { a + rho * (b - a) };
        SteadyState {
            v_mag: l(self.v_mag, to.v_mag),
            v_ang: l(self.v_ang, to.v_ang),
            i_mag: l(self.i_mag, to.i_mag),
            i_ang: l(self.i_ang, to.i_ang),
        }
    }
}

/// Closed-form solve of `V = E − I·Z` with `I = current_rel · e^{jθv}`.
pub fn thevenin_solve(source: f64, z: Complex64, current_rel: Complex64) -> Result<SteadyState> {
    let w = z * current_rel;
    let disc = source * source - w.im * w.im;
    if disc <= 0.0 {
        return Err(Error::invalid("load current too large for the source (voltage collapse)"));
    }
    let v_mag = disc.sqrt() - w.re;
    if v_mag <= 0.0 {
        return Err(Error::invalid("load current too large for the source (voltage collapse)"));
    }
    let theta_v = -(w.im).atan2(v_mag + w.re);
    Ok(SteadyState {
        v_mag,
        v_ang: wrap_deg(theta_v.to_degrees()),
        i_mag: current_rel.norm(),
        i_ang: wrap_deg((theta_v + current_rel.arg()).to_degrees()),
    })
}

fn load_current(magnitude: f64, pf_angle_deg: f64) -> Complex64 {
    Complex64::from_polar(magnitude, -pf_angle_deg.to_radians())
}

/// Reactive (leading) current that raises `|V|` by `dv` above `pre`.
fn capacitor_current(source: f64, z: Complex64, load: Complex64, target: f64) -> Result<f64> {
    let v_at = |iq: f64| thevenin_solve(source, z, load + Complex64::new(0.0, iq)).map(|s| s.v_mag);
    let mut hi = 0.1;
    while v_at(hi)? < target {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::invalid("capacitor step not reachable"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if v_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Piecewise-linear event envelope, 0 before the event and 1 at full
/// deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Envelope {
    Step { at: f64 },
    Ramp { at: f64, width: f64 },
    Pulse { at: f64, width: f64, dwell: f64 },
}

impl Envelope {
    fn value(&self, t: f64) -> f64 {
        let ramp = |x: f64, w: f64| (x / w).clamp(0.0, 1.0);
        match *self {
            Envelope::Step { at } => {
                if t >= at {
                    1.0
                } else {
                    0.0
                }
            }
            Envelope::Ramp { at, width } => ramp(t - at, width),
            Envelope::Pulse { at, width, dwell } => {
                let fall = at + width + dwell;
                if t < fall {
                    ramp(t - at, width)
                } else {
                    1.0 - ramp(t - fall, width)
                }
            }
        }
    }
}

/// Drawn OLTC timing: ramp duration, dwell, and tap direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OltcTiming {
    pub transition_s: f64,
    pub dwell_s: f64,
    pub direction: f64,
}

fn draw_oltc_timing(cfg: &GeneratorConfig, event_time: f64, seed: u64) -> Result<OltcTiming> {
    let mut r = rng::rng(rng::derive(seed, stream::SIGNAL, 0));
    let room = window_end(cfg.sps) - event_time;
    let [tr_lo, tr_hi] = cfg.oltc_transition_range_s;
    let [dw_lo, dw_hi] = cfg.oltc_dwell_range_s;
    let tr_hi = tr_hi.min((room - dw_lo) / 2.0);
    if tr_hi < tr_lo {
        return Err(Error::invalid(format!(
            "OLTC event at {event_time} s cannot dislocate, dwell and relocate inside the window"
        )));
    }
    let uniform = |r: &mut rng::Rng, lo: f64, hi: f64| if hi > lo { r.random_range(lo..hi) } else { lo };
    let transition_s = uniform(&mut r, tr_lo, tr_hi);
    let dwell_s = uniform(&mut r, dw_lo, dw_hi.min(room - 2.0 * transition_s));
    let direction = if r.random::<bool>() { 1.0 } else { -1.0 };
    Ok(OltcTiming {
        transition_s,
        dwell_s,
        direction,
    })
}

/// OLTC timing that [`synth_clean_record`] uses for this scenario and seed.
pub fn oltc_timing(cfg: &GeneratorConfig, scenario: &ScenarioParams, seed: u64) -> Result<OltcTiming> {
    draw_oltc_timing(cfg, scenario.event_time, seed)
}

/// Noise-free window for `class` under `scenario`.
pub fn synth_clean_record(
    class: EventClass,
    scenario: &ScenarioParams,
    cfg: &GeneratorConfig,
    seed: u64,
) -> Result<EventRecord> {
    cfg.validate()?;
    scenario.validate_for(class)?;
    let z = cfg.impedance();
    let e = cfg.thevenin_source;
    let pf = cfg.load_pf_angles()[scenario.load_index];
    let at = scenario.event_time;
    let end = window_end(cfg.sps);

    let (pre, post, envelope) = match class {
        EventClass::CapacitorSwitchMalfunction => {
            if at + cfg.cap_transition_s > end {
                return Err(Error::invalid(format!(
                    "capacitor event at {at} s does not settle inside the window"
                )));
            }
            let loading = scenario.loading_fraction().expect("validated");
            let load = load_current(loading * cfg.base_load_current, pf);
            let pre = thevenin_solve(e, z, load)?;
            let iq = capacitor_current(e, z, load, pre.v_mag + cfg.cap_step_v)?;
            let mut post = thevenin_solve(e, z, load + Complex64::new(0.0, iq))?;
            // pin the level exactly; the bisection leaves ~1 ulp
            post.v_mag = pre.v_mag + cfg.cap_step_v;
            let envelope = Envelope::Ramp {
                at,
                width: cfg.cap_transition_s,
            };
            (pre, post, envelope)
        }
        EventClass::OltcSwitchMalfunction => {
            let timing = draw_oltc_timing(cfg, at, seed)?;
            let loading = scenario.loading_fraction().expect("validated");
            let load = load_current(loading * cfg.base_load_current, pf);
            let pre = thevenin_solve(e, z, load)?;
            let target = pre.v_mag + timing.direction * cfg.tap_step_v;
            let w = z * load;
            let tapped_source = ((target + w.re).powi(2) + w.im * w.im).sqrt();
            let mut post = thevenin_solve(tapped_source, z, load)?;
            post.v_mag = target;
            let envelope = Envelope::Pulse {
                at,
                width: timing.transition_s,
                dwell: timing.dwell_s,
            };
            (pre, post, envelope)
        }
        EventClass::AbruptLoadChange => {
            let step = scenario.load_step_fraction().expect("validated");
            let i0 = GeneratorConfig::class3_loading(scenario.load_index) * cfg.base_load_current;
            let pre = thevenin_solve(e, z, load_current(i0, pf))?;
            let post = thevenin_solve(e, z, load_current(i0 * (1.0 + step), pf))?;
            (pre, post, Envelope::Step { at })
        }
    };

    let samples = sample_times(cfg.sps)
        .map(|t| {
            let s = pre.lerp(&post, envelope.value(t));
            PhasorSample {
                t,
                v_mag: s.v_mag,
                v_ang: wrap_deg(s.v_ang),
                i_mag: s.i_mag,
                i_ang: wrap_deg(s.i_ang),
            }
        })
        .collect();
    Ok(EventRecord {
        label: class,
        sps: cfg.sps,
        samples,
        scenario: *scenario,
        seed,
    })
}

/// Full synthetic record: the noise-free window plus measurement noise at
/// `cfg.noise_std_fraction`, deterministic in `seed`.
pub fn synth_record(
    class: EventClass,
    scenario: &ScenarioParams,
    cfg: &GeneratorConfig,
    seed: u64,
) -> Result<EventRecord> {
    let clean = synth_clean_record(class, scenario, cfg, seed)?;
    add_noise(&clean, cfg.noise_std_fraction, rng::derive(seed, stream::NOISE, 0))
}

/// Adds independent zero-mean Gaussian noise to all four channels, with
/// per-sample standard deviation `noise_std_fraction · |value|`.
pub fn add_noise(record: &EventRecord, noise_std_fraction: f64, seed: u64) -> Result<EventRecord> {
    if !(noise_std_fraction >= 0.0 && noise_std_fraction.is_finite()) {
        return Err(Error::invalid("noise_std_fraction must be >= 0"));
    }
    if noise_std_fraction == 0.0 {
        return Ok(record.clone());
    }
    let mut r = rng::rng(seed);
    let mut noisy = |x: f64| {
        let n: f64 = StandardNormal.sample(&mut r);
        x + noise_std_fraction * x.abs() * n
    };
    let samples = record
        .samples
        .iter()
        .map(|s| PhasorSample {
            t: s.t,
            v_mag: noisy(s.v_mag).max(0.0),
            v_ang: wrap_deg(noisy(s.v_ang)),
            i_mag: noisy(s.i_mag).max(0.0),
            i_ang: wrap_deg(noisy(s.i_ang)),
        })
        .collect();
    Ok(EventRecord {
        samples,
        ..record.clone()
    })
}

/// Loading levels 50 %, 55 %, …, 95 %.
pub fn loading_levels() -> [f64; 10] {
    std::array::from_fn(|j| (50 + 5 * j) as f64 / 100.0)
}

/// Signed class-3 load steps: −25 % … −5 %, +5 % … +25 %.
pub fn load_steps() -> [f64; 10] {
    std::array::from_fn(|j| {
        let pct = if j < 5 { -25 + 5 * j as i32 } else { 5 * (j as i32 - 4) };
        pct as f64 / 100.0
    })
}

/// The 150 (load, level) combinations per class, in generation order.
fn scenario_grid(class: EventClass) -> Vec<(usize, LoadLevel)> {
    let levels: Vec<LoadLevel> = match class {
        EventClass::AbruptLoadChange => load_steps().into_iter().map(LoadLevel::Step).collect(),
        _ => loading_levels().into_iter().map(LoadLevel::Loading).collect(),
    };
    (0..LOAD_COUNT)
        .flat_map(|load| levels.iter().map(move |&l| (load, l)))
        .collect()
}

/// Seed stored in the `index`-th record of a dataset built from `master_seed`.
pub fn record_seed(master_seed: u64, index: usize) -> u64 {
    rng::derive(master_seed, stream::RECORD, index as u64)
}

/// Builds the 450-record dataset: 150 scenarios per class, event times
/// uniform over `cfg.event_time_range_s`.
pub fn build_dataset(cfg: &GeneratorConfig, exec: Exec) -> Result<Dataset> {
    cfg.validate()?;
    let jobs: Vec<(EventClass, usize, LoadLevel)> = EventClass::ALL
        .iter()
        .flat_map(|&c| scenario_grid(c).into_iter().map(move |(load, l)| (c, load, l)))
        .collect();
    let [t_lo, t_hi] = cfg.event_time_range_s;
    let records = exec.map_range(jobs.len(), |n| {
        let (class, load_index, level) = jobs[n];
        let seed = record_seed(cfg.master_seed, n);
        let mut r = rng::rng(rng::derive(seed, stream::EVENT_TIME, 0));
        let event_time = if t_hi > t_lo { r.random_range(t_lo..t_hi) } else { t_lo };
        let scenario = ScenarioParams {
            load_index,
            level,
            event_time,
        };
        synth_record(class, &scenario, cfg, seed)
    });
    Dataset::new(cfg.sps, records.into_iter().collect::<Result<_>>()?)
}

/// Re-synthesizes a stored record from its scenario and seed.
pub fn regenerate(record: &EventRecord, cfg: &GeneratorConfig) -> Result<EventRecord> {
    synth_record(record.label, &record.scenario, cfg, record.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasor::class_counts;

    fn quiet() -> GeneratorConfig {
        GeneratorConfig {
            noise_std_fraction: 0.0,
            ..GeneratorConfig::default()
        }
        .with_seed(11)
    }

    fn scenario(level: LoadLevel, event_time: f64) -> ScenarioParams {
        ScenarioParams {
            load_index: 4,
            level,
            event_time,
        }
    }

    /// Runs of consecutive nonzero differences.
    fn level_changes(x: &[f64]) -> usize {
        let mut runs = 0;
        let mut inside = false;
        for w in x.windows(2) {
            let moving = (w[1] - w[0]).abs() > 1e-12;
            if moving && !inside {
                runs += 1;
            }
            inside = moving;
        }
        runs
    }

    #[test]
    fn capacitor_window_shape() {
        let cfg = quiet();
        let r = synth_clean_record(
            EventClass::CapacitorSwitchMalfunction,
            &scenario(LoadLevel::Loading(0.7), 0.5),
            &cfg,
            3,
        )
        .unwrap();
        let v0 = r.samples[0].v_mag;
        for s in &r.samples {
            let expected = if s.t < 0.5 {
                v0
            } else if s.t >= 0.5 + 1.0 / 60.0 {
                v0 + 0.015
            } else {
                v0 + 0.015 * (s.t - 0.5) * 60.0
            };
            assert!((s.v_mag - expected).abs() < 1e-12, "t={} v={}", s.t, s.v_mag);
        }
        // leading reactive injection moves the current angle forward
        assert!(r.samples[59].i_ang > r.samples[0].i_ang + 1.0);
        assert_eq!(level_changes(&r.v_mag()), 1);
    }

    #[test]
    fn oltc_returns_to_baseline() {
        let cfg = quiet();
        for seed in 0..40 {
            let sc = scenario(LoadLevel::Loading(0.9), 0.2 + 0.01 * seed as f64);
            let r = synth_clean_record(EventClass::OltcSwitchMalfunction, &sc, &cfg, seed).unwrap();
            let v = r.v_mag();
            assert!((v[59] - v[0]).abs() < 1e-12);
            assert_eq!(level_changes(&v), 2, "seed {seed}");
            let peak = v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
            assert!((peak - cfg.tap_step_v).abs() < 1e-12);
        }
    }

    #[test]
    fn late_oltc_event_is_rejected() {
        let cfg = quiet();
        let sc = scenario(LoadLevel::Loading(0.6), 0.9);
        assert!(synth_clean_record(EventClass::OltcSwitchMalfunction, &sc, &cfg, 1).is_err());
        let sc = scenario(LoadLevel::Loading(0.6), 0.98);
        assert!(synth_clean_record(EventClass::CapacitorSwitchMalfunction, &sc, &cfg, 1).is_err());
    }

    /// Independent oracle: fixed-point iteration of `V = E − I·Z` with the
    /// load current locked to the voltage angle.
    fn fixed_point_solve(e: f64, z: Complex64, i_mag: f64, pf_deg: f64) -> (f64, f64) {
        let mut v = Complex64::new(e, 0.0);
        for _ in 0..500 {
            let i = Complex64::from_polar(i_mag, v.arg() - pf_deg.to_radians());
            v = Complex64::new(e, 0.0) - i * z;
        }
        (v.norm(), v.arg().to_degrees())
    }

    #[test]
    fn load_step_matches_thevenin_oracle() {
        let cfg = quiet();
        let sc = scenario(LoadLevel::Step(0.25), 0.4);
        let r = synth_clean_record(EventClass::AbruptLoadChange, &sc, &cfg, 9).unwrap();
        let pre = r.samples[0];
        let post = r.samples[59];
        assert!((post.i_mag / pre.i_mag - 1.25).abs() < 1e-9);

        let pf = cfg.load_pf_angles()[4];
        let i0 = GeneratorConfig::class3_loading(4) * cfg.base_load_current;
        for (s, i) in [(pre, i0), (post, 1.25 * i0)] {
            let (vm, va) = fixed_point_solve(cfg.thevenin_source, cfg.impedance(), i, pf);
            assert!((s.v_mag - vm).abs() < 1e-12);
            assert!((s.v_ang - va).abs() < 1e-9);
            assert!((s.i_ang - (va - pf)).abs() < 1e-9);
        }
        // single-sample transition
        assert_eq!(level_changes(&r.i_mag()), 1);
        let jumps = r.i_mag().windows(2).filter(|w| (w[1] - w[0]).abs() > 1e-12).count();
        assert_eq!(jumps, 1);
    }

    #[test]
    fn zero_noise_is_identity() {
        let cfg = quiet();
        let r = synth_clean_record(
            EventClass::AbruptLoadChange,
            &scenario(LoadLevel::Step(-0.1), 0.3),
            &cfg,
            2,
        )
        .unwrap();
        assert_eq!(add_noise(&r, 0.0, 99).unwrap(), r);
        assert!(add_noise(&r, -0.1, 99).is_err());
    }

    #[test]
    fn noise_is_deterministic() {
        let cfg = quiet();
        let r = synth_clean_record(
            EventClass::AbruptLoadChange,
            &scenario(LoadLevel::Step(-0.1), 0.3),
            &cfg,
            2,
        )
        .unwrap();
        assert_eq!(add_noise(&r, 0.01, 5).unwrap(), add_noise(&r, 0.01, 5).unwrap());
        assert_ne!(add_noise(&r, 0.01, 5).unwrap(), add_noise(&r, 0.01, 6).unwrap());
    }

    #[test]
    fn noise_std_matches_fraction() {
        // constant 1.0 pu window; pool (noisy − clean) over enough seeds to
        // reach 10⁵ samples
        let flat = EventRecord {
            label: EventClass::OltcSwitchMalfunction,
            sps: 120,
            samples: sample_times(120)
                .map(|t| PhasorSample {
                    t,
                    v_mag: 1.0,
                    v_ang: 0.0,
                    i_mag: 0.5,
                    i_ang: -20.0,
                })
                .collect(),
            scenario: scenario(LoadLevel::Loading(0.5), 0.3),
            seed: 0,
        };
        let mut diffs = Vec::new();
        let mut seed = 0;
        while diffs.len() < 100_000 {
            let n = add_noise(&flat, 0.01, seed).unwrap();
            diffs.extend(n.samples.iter().map(|s| s.v_mag - 1.0));
            seed += 1;
        }
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
        let std = var.sqrt();
        assert!((0.0099..=0.0101).contains(&std), "std = {std}");
        assert!(mean.abs() < 1e-4);
    }

    #[test]
    fn default_dataset_protocol() {
        let cfg = GeneratorConfig::default().with_seed(7);
        let ds = build_dataset(&cfg, Exec::Parallel).unwrap();
        assert_eq!(ds.len(), 450);
        assert!(class_counts(&ds).values().all(|&n| n == 150));
        for r in &ds.records {
            assert_eq!(r.samples.len(), 60);
            assert!((0.2..0.6).contains(&r.scenario.event_time));
            assert!(r.samples.iter().all(|s| s.v_mag > 0.8 && s.v_mag < 1.1));
        }
        let again = build_dataset(&cfg, Exec::Sequential).unwrap();
        assert_eq!(ds, again);
        for i in [0, 149, 150, 299, 300, 449] {
            assert_eq!(regenerate(&ds.records[i], &cfg).unwrap(), ds.records[i]);
        }
    }

    #[test]
    fn clean_dataset_signatures() {
        let cfg = quiet();
        let ds = build_dataset(&cfg, Exec::Parallel).unwrap();
        for r in &ds.records {
            let v = r.v_mag();
            match r.label {
                EventClass::OltcSwitchMalfunction => {
                    assert_eq!(level_changes(&v), 2);
                    assert!((v[v.len() - 1] - v[0]).abs() < 1e-12);
                }
                _ => assert_eq!(level_changes(&v), 1),
            }
        }
    }

    #[test]
    fn scenario_grids() {
        assert_eq!(loading_levels()[0], 0.5);
        assert_eq!(loading_levels()[9], 0.95);
        assert_eq!(load_steps(), [-0.25, -0.2, -0.15, -0.1, -0.05, 0.05, 0.1, 0.15, 0.2, 0.25]);
        for c in EventClass::ALL {
            assert_eq!(scenario_grid(c).len(), 150);
        }
    }

    #[test]
    fn config_file_round_trip_and_validation() {
        let cfg = GeneratorConfig::default().with_seed(3).with_sps(120);
        let text = cfg.to_toml_string();
        assert_eq!(GeneratorConfig::from_toml_str(&text).unwrap(), cfg);

        let partial = GeneratorConfig::from_toml_str("sps = 120\nnoise_std_fraction = 0.0\n").unwrap();
        assert_eq!(partial.sps, 120);
        assert_eq!(partial.tap_step_v, 0.00625);

        assert!(GeneratorConfig::from_toml_str("sps = 50\n").is_err());
        assert!(GeneratorConfig::from_toml_str("bogus_key = 1\n").is_err());
        assert!(GeneratorConfig::from_toml_str("noise_std_fraction = -1.0\n").is_err());
        assert!(GeneratorConfig::from_toml_str("event_time_range_s = [0.2, 0.95]\n").is_err());
    }
}
