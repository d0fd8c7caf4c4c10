//! Step-back synchronization: constant-acceleration lead-ins that bring every
//! vehicle from rest to its first observed speed at the same instant.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepBackEntry {
    /// Target speed at first appearance, m/s.
    pub v_t: f64,
    /// Time to reach `v_t` from rest.
    pub t_s: f64,
    /// Distance covered while accelerating.
    pub d_s: f64,
    /// Total lead-in distance including the constant-speed cruise.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepBack {
    pub accel: f64,
    pub entries: Vec<StepBackEntry>,
    /// Fleet maximum of `t_s`; every lead-in lasts this long.
    pub t_s_max: f64,
}

pub fn compute_stepback(targets: &[f64], accel: f64) -> Result<StepBack> {
    if !(accel > 0.0 && accel.is_finite()) {
        return Err(Error::Parameter(format!("acceleration {accel} must be positive")));
    }
    if let Some(v) = targets.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Parameter(format!("target speed {v} must be non-negative")));
    }
    let t_s_max = targets.iter().map(|v| v / accel).fold(0.0, f64::max);
    let entries = targets
        .iter()
        .map(|&v_t| {
            let t_s = v_t / accel;
            let d_s = v_t * v_t / (2.0 * accel);
            StepBackEntry { v_t, t_s, d_s, total: d_s + (t_s_max - t_s) * v_t }
        })
        .collect();
    Ok(StepBack { accel, entries, t_s_max })
}

/// Straight lead-in sampled in time. The last sample is the merge point.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadIn {
    pub times: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub speeds: Vec<f64>,
}

impl LeadIn {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Speed and distance travelled at time `t` of the ramp-then-cruise profile.
fn profile(entry: &StepBackEntry, accel: f64, t: f64) -> (f64, f64) {
    if t < entry.t_s {
        (accel * t, 0.5 * accel * t * t)
    } else {
        (entry.v_t, entry.d_s + (t - entry.t_s) * entry.v_t)
    }
}

/// Lead-in ending at `merge` with heading `heading`, sampled at
/// `frame_rate` plus the ramp breakpoints (start, end of acceleration,
/// merge), so piecewise-linear speed integrates exactly. Empty when the
/// total distance is zero.
pub fn build_leadin(
    merge: [f64; 2],
    heading: f64,
    entry: &StepBackEntry,
    t_s_max: f64,
    accel: f64,
    frame_rate: f64,
) -> Result<LeadIn> {
    if !(frame_rate > 0.0) {
        return Err(Error::Parameter(format!("frame rate {frame_rate} must be positive")));
    }
    if !(entry.total >= 0.0) {
        return Err(Error::Parameter(format!("lead-in distance {} must be non-negative", entry.total)));
    }
    if entry.total == 0.0 {
        return Ok(LeadIn { times: vec![], points: vec![], speeds: vec![] });
    }
    let mut times: Vec<f64> = (0..).map(|k| k as f64 / frame_rate).take_while(|&t| t < t_s_max).collect();
    times.push(entry.t_s);
    times.push(t_s_max);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    // keep the exact breakpoint values after dedup
    for t in &mut times {
        if (*t - t_s_max).abs() < 1e-12 {
            *t = t_s_max;
        } else if (*t - entry.t_s).abs() < 1e-12 {
            *t = entry.t_s;
        }
    }
    let (s, c) = heading.sin_cos();
    let mut points = Vec::with_capacity(times.len());
    let mut speeds = Vec::with_capacity(times.len());
    for &t in &times {
        let (v, travelled) = profile(entry, accel, t);
        let back = entry.total - travelled;
        points.push([merge[0] - c * back, merge[1] - s * back]);
        speeds.push(v);
    }
    // the merge sample sits exactly on the first pose
    *points.last_mut().unwrap() = merge;
    Ok(LeadIn { times, points, speeds })
}

/// Trapezoid integral of a sampled speed profile.
pub fn integrate_speeds(times: &[f64], speeds: &[f64]) -> f64 {
    times.windows(2).zip(speeds.windows(2)).map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_vehicle() {
        let sb = compute_stepback(&[20.0], 2.0).unwrap();
        let e = sb.entries[0];
        assert_eq!((e.t_s, e.d_s, e.total, sb.t_s_max), (10.0, 100.0, 100.0, 10.0));
    }

    #[test]
    fn two_vehicles() {
        let sb = compute_stepback(&[20.0, 10.0], 2.0).unwrap();
        assert_eq!(sb.entries[1].t_s, 5.0);
        assert_eq!(sb.entries[1].d_s, 25.0);
        assert_eq!(sb.entries[1].total, 75.0);
    }

    #[test]
    fn stationary_vehicle_has_no_leadin() {
        let sb = compute_stepback(&[0.0, 12.0], 2.0).unwrap();
        assert_eq!(sb.entries[0].total, 0.0);
        let l = build_leadin([1.0, 2.0], 0.3, &sb.entries[0], sb.t_s_max, 2.0, 10.0).unwrap();
        assert!(l.is_empty());
        assert!(compute_stepback(&[1.0], 0.0).is_err());
        assert!(compute_stepback(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn merge_at_first_pose_at_t_s_max() {
        let sb = compute_stepback(&[20.0], 2.0).unwrap();
        let l = build_leadin([5.0, -1.0], 0.0, &sb.entries[0], sb.t_s_max, 2.0, 10.0).unwrap();
        assert_eq!(*l.times.last().unwrap(), 10.0);
        assert_eq!(*l.points.last().unwrap(), [5.0, -1.0]);
        assert_eq!(l.points[0], [-95.0, -1.0]);
        assert_eq!(*l.speeds.last().unwrap(), 20.0);
        assert_eq!(l.speeds[0], 0.0);
    }

    #[test]
    fn leadin_follows_heading() {
        let sb = compute_stepback(&[15.0], 2.5).unwrap();
        let h = std::f64::consts::FRAC_PI_4;
        let l = build_leadin([3.0, 4.0], h, &sb.entries[0], sb.t_s_max, 2.5, 15.0).unwrap();
        for p in &l.points {
            let (dx, dy) = (p[0] - 3.0, p[1] - 4.0);
            assert!((dx * h.sin() - dy * h.cos()).abs() < 1e-9);
            assert!(dx <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn leadin_integrates_to_total(
            targets in proptest::collection::vec(0.0f64..35.0, 1..8), accel in 1.0f64..4.0, fps in 5.0f64..60.0,
        ) {
            let sb = compute_stepback(&targets, accel).unwrap();
            for e in &sb.entries {
                let l = build_leadin([0.0, 0.0], 0.0, e, sb.t_s_max, accel, fps).unwrap();
                if e.total == 0.0 {
                    prop_assert!(l.is_empty());
                    continue;
                }
                let d = integrate_speeds(&l.times, &l.speeds);
                prop_assert!((d - e.total).abs() <= 1e-6 * e.total);
                let span = l.points[0][0].abs();
                prop_assert!((span - e.total).abs() <= 1e-9 * e.total.max(1.0));
                prop_assert_eq!(*l.times.last().unwrap(), sb.t_s_max);
                prop_assert_eq!(*l.speeds.last().unwrap(), e.v_t);
            }
        }
    }
}
