use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{fsoc_rx_power, OpticalLinkSpec, ScintParams};
use crate::domain::RngStream;
use crate::telemetry::WeatherSample;

/// Angular size of one motor microstep.
pub const MICROSTEP_RAD: f64 = 0.23e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentMode {
    SearchCoarse,
    AlignFine,
    AlignUltrafine,
    Locked,
}

impl AlignmentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AlignmentMode::SearchCoarse => "search_coarse",
            AlignmentMode::AlignFine => "align_fine",
            AlignmentMode::AlignUltrafine => "align_ultrafine",
            AlignmentMode::Locked => "locked",
        }
    }
}

/// Coordinate hill-climb bookkeeping: the axis under test (0 = az, 1 = el),
/// probe direction, whether this axis improved, and how many consecutive
/// axes finished without improvement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimbState {
    pub axis: u8,
    pub dir: i8,
    pub improved: bool,
    pub idle_axes: u8,
    pub best_dbm: f64,
}

impl Default for ClimbState {
    fn default() -> Self {
        Self {
            axis: 0,
            dir: 1,
            improved: false,
            idle_axes: 0,
            best_dbm: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentState {
    pub mode: AlignmentMode,
    /// Controller's latest pointing-error estimate (az, el), rad.
    pub pointing_error: (f64, f64),
    /// Motor position in microsteps.
    pub motor_position: (i64, i64),
    pub spiral_index: u64,
    pub spiral_origin: (i64, i64),
    pub climb: ClimbState,
    pub hold_count: u32,
}

impl Default for AlignmentState {
    fn default() -> Self {
        Self {
            mode: AlignmentMode::SearchCoarse,
            pointing_error: (0.0, 0.0),
            motor_position: (0, 0),
            spiral_index: 0,
            spiral_origin: (0, 0),
            climb: ClimbState::default(),
            hold_count: 0,
        }
    }
}

impl AlignmentState {
    pub fn locked() -> Self {
        Self {
            mode: AlignmentMode::Locked,
            ..Default::default()
        }
    }

    fn enter_coarse(&mut self) {
        self.mode = AlignmentMode::SearchCoarse;
        self.spiral_index = 0;
        self.spiral_origin = self.motor_position;
        self.hold_count = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub apd_voltage: f64,
    /// Spot centroid offset from the boresight pixel, if the spot is on the sensor.
    pub cmos_centroid: Option<(f64, f64)>,
    pub cmos_mean_pixel: f64,
    pub rx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignmentThresholds {
    pub apd_threshold_v: f64,
    pub fine_exit_rad: f64,
    pub cmos_rad_per_px: f64,
    pub relock_dbm: f64,
    pub hold_frames: u32,
    pub coarse_step_rad: f64,
    pub coarse_range_rad: f64,
    pub climb_epsilon_db: f64,
}

impl Default for AlignmentThresholds {
    fn default() -> Self {
        Self {
            apd_threshold_v: 0.3,
            fine_exit_rad: 30e-6,
            cmos_rad_per_px: 10e-6,
            relock_dbm: -21.0,
            hold_frames: 3,
            // A quarter of the 4 mrad APD field of view.
            coarse_step_rad: 1e-3,
            coarse_range_rad: 6f64.to_radians(),
            climb_epsilon_db: 1e-9,
        }
    }
}

impl AlignmentThresholds {
    fn coarse_step_microsteps(&self) -> i64 {
        (self.coarse_step_rad / MICROSTEP_RAD).round() as i64
    }

    fn spiral_len(&self) -> u64 {
        let rings = (self.coarse_range_rad / self.coarse_step_rad).ceil() as u64;
        (2 * rings + 1).pow(2)
    }
}

/// The `k`-th point of an outward square spiral on the integer grid.
fn spiral_point(k: u64) -> (i64, i64) {
    if k == 0 {
        return (0, 0);
    }
    let mut r = (((k + 1) as f64).sqrt() - 1.0) / 2.0;
    r = r.ceil();
    let mut r = r as i64;
    // Guard against float rounding at ring boundaries.
    while ((2 * r - 1) * (2 * r - 1)) as u64 > k {
        r -= 1;
    }
    while ((2 * r + 1) * (2 * r + 1)) as u64 <= k {
        r += 1;
    }
    let o = k as i64 - (2 * r - 1) * (2 * r - 1);
    let side = 2 * r;
    match o / side {
        0 => (r, -r + 1 + o),
        1 => (r - 1 - (o - side), r),
        2 => (-r, r - 1 - (o - 2 * side)),
        _ => (-r + 1 + (o - 3 * side), -r),
    }
}

fn axis_move(axis: u8, n: i64) -> (i64, i64) {
    if axis == 0 {
        (n, 0)
    } else {
        (0, n)
    }
}

/// Advances the controller by one sensor frame. Returns the new state and
/// the motor command in microsteps; the returned state's motor position
/// already includes the command.
pub fn step_alignment(
    state: &AlignmentState,
    frame: &SensorFrame,
    thr: &AlignmentThresholds,
) -> (AlignmentState, (i64, i64)) {
    let mut s = state.clone();
    let beacon = frame.apd_voltage > thr.apd_threshold_v;
    let mut cmd = (0i64, 0i64);
    match s.mode {
        AlignmentMode::SearchCoarse => {
            if beacon {
                s.mode = AlignmentMode::AlignFine;
            } else {
                s.spiral_index = (s.spiral_index + 1) % thr.spiral_len();
                let (i, j) = spiral_point(s.spiral_index);
                let step = thr.coarse_step_microsteps();
                let target = (s.spiral_origin.0 + i * step, s.spiral_origin.1 + j * step);
                cmd = (target.0 - s.motor_position.0, target.1 - s.motor_position.1);
            }
        }
        AlignmentMode::AlignFine => match frame.cmos_centroid {
            None => s.enter_coarse(),
            Some((cx, cy)) => {
                let e = (cx * thr.cmos_rad_per_px, cy * thr.cmos_rad_per_px);
                s.pointing_error = e;
                if e.0.hypot(e.1) < thr.fine_exit_rad {
                    s.mode = AlignmentMode::AlignUltrafine;
                    s.climb = ClimbState {
                        best_dbm: frame.rx_power_dbm,
                        ..Default::default()
                    };
                    cmd = axis_move(0, 1);
                } else {
                    cmd = (
                        (-e.0 / MICROSTEP_RAD).round() as i64,
                        (-e.1 / MICROSTEP_RAD).round() as i64,
                    );
                }
            }
        },
        AlignmentMode::AlignUltrafine => {
            if !beacon {
                s.enter_coarse();
            } else {
                let c = &mut s.climb;
                let dir = c.dir as i64;
                if frame.rx_power_dbm > c.best_dbm + thr.climb_epsilon_db {
                    c.best_dbm = frame.rx_power_dbm;
                    c.improved = true;
                    cmd = axis_move(c.axis, dir);
                } else {
                    let undo = axis_move(c.axis, -dir);
                    if c.dir == 1 && !c.improved {
                        c.dir = -1;
                        cmd = axis_move(c.axis, -2);
                    } else {
                        c.idle_axes = if c.improved { 0 } else { c.idle_axes + 1 };
                        if c.idle_axes >= 2 {
                            s.mode = AlignmentMode::Locked;
                            s.pointing_error = (0.0, 0.0);
                            s.hold_count = 0;
                            cmd = undo;
                        } else {
                            c.axis ^= 1;
                            c.dir = 1;
                            c.improved = false;
                            let probe = axis_move(c.axis, 1);
                            cmd = (undo.0 + probe.0, undo.1 + probe.1);
                        }
                    }
                }
            }
        }
        AlignmentMode::Locked => {
            if !beacon {
                s.enter_coarse();
            } else if frame.rx_power_dbm < thr.relock_dbm {
                s.hold_count += 1;
                if s.hold_count >= thr.hold_frames {
                    s.mode = AlignmentMode::AlignFine;
                    s.hold_count = 0;
                }
            } else {
                s.hold_count = 0;
            }
        }
    }
    s.motor_position = (s.motor_position.0 + cmd.0, s.motor_position.1 + cmd.1);
    (s, cmd)
}

/// The physical side of the loop: a terminal whose boresight is off the
/// remote beacon by `motor * MICROSTEP_RAD - target_rad`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSim {
    pub spec: OpticalLinkSpec,
    pub scint: ScintParams,
    pub distance_km: f64,
    pub target_rad: (f64, f64),
    pub weather: WeatherSample,
    /// 1/e^2 radius of the beacon footprint seen by the APD.
    pub beacon_radius_rad: f64,
    pub cmos_half_fov_rad: f64,
    pub centroid_noise_rad: f64,
    pub frame_dt_s: f64,
}

impl AlignmentSim {
    pub fn new(initial_error_rad: (f64, f64)) -> Self {
        Self {
            spec: OpticalLinkSpec::default(),
            scint: ScintParams::default(),
            distance_km: 10.15,
            target_rad: (-initial_error_rad.0, -initial_error_rad.1),
            weather: WeatherSample::clear(),
            beacon_radius_rad: 2e-3,
            cmos_half_fov_rad: 2.5e-3,
            centroid_noise_rad: 10e-6,
            frame_dt_s: 0.01,
        }
    }

    pub fn error(&self, motor: (i64, i64)) -> (f64, f64) {
        (
            motor.0 as f64 * MICROSTEP_RAD - self.target_rad.0,
            motor.1 as f64 * MICROSTEP_RAD - self.target_rad.1,
        )
    }

    pub fn frame(&self, motor: (i64, i64), fade_db: f64, rng: &mut impl Rng) -> SensorFrame {
        let e = self.error(motor);
        let mag = e.0.hypot(e.1);
        let x = mag / self.beacon_radius_rad;
        let beacon_db = -2.0 * x * x * 10.0 * std::f64::consts::LOG10_E - fade_db;
        let on_sensor = mag < self.cmos_half_fov_rad;
        let px = self.centroid_noise_rad / 10e-6;
        let centroid = on_sensor.then(|| {
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            (e.0 / 10e-6 + px * nx, e.1 / 10e-6 + px * ny)
        });
        SensorFrame {
            apd_voltage: self.scint.apd_voltage(beacon_db),
            cmos_centroid: centroid,
            cmos_mean_pixel: if on_sensor { self.scint.pixel(beacon_db) } else { 0.0 },
            rx_power_dbm: fsoc_rx_power(&self.spec, self.distance_km, mag, &self.weather, fade_db),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLog {
    pub time_s: f64,
    pub mode: AlignmentMode,
    pub apd_voltage: f64,
    pub cmos_mean_pixel: f64,
    pub rx_power_dbm: f64,
    pub error_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub frame: usize,
    pub from: AlignmentMode,
    pub to: AlignmentMode,
    pub error_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRun {
    pub log: Vec<FrameLog>,
    pub transitions: Vec<Transition>,
    pub locked_frame: Option<usize>,
    pub final_state: AlignmentState,
}

/// Runs the closed loop for up to `max_frames`. `fades_db` supplies the
/// scintillation fade per frame (cycled); `None` means no scintillation.
pub fn run_alignment(
    sim: &AlignmentSim,
    thr: &AlignmentThresholds,
    initial: AlignmentState,
    max_frames: usize,
    fades_db: Option<&[f64]>,
    stop_on_lock: bool,
    rng: RngStream,
) -> AlignmentRun {
    let mut r = rng.rng();
    let mut state = initial;
    let mut log = Vec::new();
    let mut transitions = Vec::new();
    let mut locked_frame = None;
    for k in 0..max_frames {
        let fade = fades_db.filter(|f| !f.is_empty()).map(|f| f[k % f.len()]).unwrap_or(0.0);
        let frame = sim.frame(state.motor_position, fade, &mut r);
        let e = sim.error(state.motor_position);
        log.push(FrameLog {
            time_s: k as f64 * sim.frame_dt_s,
            mode: state.mode,
            apd_voltage: frame.apd_voltage,
            cmos_mean_pixel: frame.cmos_mean_pixel,
            rx_power_dbm: frame.rx_power_dbm,
            error_rad: e.0.hypot(e.1),
        });
        let (next, _) = step_alignment(&state, &frame, thr);
        if next.mode != state.mode {
            let e = sim.error(next.motor_position);
            transitions.push(Transition {
                frame: k,
                from: state.mode,
                to: next.mode,
                error_rad: e.0.hypot(e.1),
            });
            if next.mode == AlignmentMode::Locked && locked_frame.is_none() {
                locked_frame = Some(k);
            }
        }
        state = next;
        if stop_on_lock && state.mode == AlignmentMode::Locked {
            break;
        }
    }
    AlignmentRun {
        log,
        transitions,
        locked_frame,
        final_state: state,
    }
}

/// `time_s,apd_voltage,cmos_mean_pixel,rx_power_dbm,mode`.
pub fn write_alignment_csv(w: impl Write, log: &[FrameLog]) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["time_s", "apd_voltage", "cmos_mean_pixel", "rx_power_dbm", "mode"])?;
    for f in log {
        wr.write_record([
            format!("{:.3}", f.time_s),
            format!("{:.5}", f.apd_voltage),
            format!("{:.3}", f.cmos_mean_pixel),
            format!("{:.4}", f.rx_power_dbm),
            f.mode.as_str().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
