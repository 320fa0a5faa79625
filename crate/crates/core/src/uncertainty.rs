//! Set-valued situation information about the uncontrolled agent.
//!
//! Everything the controlled agent knows about agent 1 is condensed into the
//! set of occupation-time pairs `<t_in, t_out>` (clamped at the current time)
//! that are consistent with the observations so far. The set is stored in
//! envelope form: an entry-time interval `[tin_lo, tin_hi]` plus two knot
//! polylines giving, for each entry time, the smallest and largest achievable
//! exit time. The lower envelope keeps a positive, non-decreasing gap
//! `lower(t) - t`; the upper envelope is non-decreasing in value (its gap may
//! shrink where the horizon cap bites).

use crate::kinematics::{
    self, acc_dec_entry_time, acc_entry, dec_acc_window, dec_entry, throttle_cover_time,
    AgentParams, State,
};
use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-12;
/// Width of the synthetic knot used to represent an envelope jump.
const JUMP_EPS: f64 = 1e-9;
/// Default number of knots per envelope curve.
const TARGET_KNOTS: usize = 128;

/// Union of all possible occupation intervals: the single open interval the
/// controlled agent must keep its own window disjoint from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub lo: f64,
    pub hi: f64,
}

impl TimeWindow {
    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    /// Lebesgue measure of `(a, b) \ self`.
    pub fn excluded_measure(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let overlap = (b.min(self.hi) - a.max(self.lo)).max(0.0);
        (b - a) - overlap
    }
}

/// Monotone knot polyline with linear interpolation; knots strictly ordered.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Envelope {
    knots: Vec<(f64, f64)>,
}

impl Envelope {
    fn new(knots: Vec<(f64, f64)>) -> Self {
        debug_assert!(!knots.is_empty());
        debug_assert!(knots.windows(2).all(|w| w[1].0 > w[0].0));
        Self { knots }
    }

    fn value(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|&(kt, _)| kt <= t);
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn first(&self) -> (f64, f64) {
        self.knots[0]
    }

    fn last(&self) -> (f64, f64) {
        *self.knots.last().unwrap()
    }

    /// Knots strictly after `from_t`, preceded by `(from_t, from_value)`.
    fn tail_knots(&self, from_t: f64, from_value: f64) -> Vec<(f64, f64)> {
        let mut out = vec![(from_t, from_value)];
        for &(t, v) in &self.knots {
            if t > from_t + EPS {
                out.push((t, v));
            }
        }
        out
    }
}

/// Sorts by entry time, merges duplicate entries keeping the smallest exit,
/// then takes the largest envelope below the samples whose gap is
/// non-decreasing (suffix-minimum of the gaps).
fn build_lower(mut points: Vec<(f64, f64)>) -> Envelope {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for (t, v) in points {
        match knots.last_mut() {
            Some(last) if t - last.0 <= EPS => last.1 = last.1.min(v),
            _ => knots.push((t, v)),
        }
    }
    let mut gap = f64::INFINITY;
    for k in knots.iter_mut().rev() {
        gap = gap.min(k.1 - k.0);
        k.1 = k.0 + gap;
    }
    Envelope::new(knots)
}

/// Sorts by entry time, merges duplicate entries keeping the largest exit,
/// then takes the smallest envelope above the samples that is non-decreasing
/// in value (prefix-maximum of the values).
fn build_upper(mut points: Vec<(f64, f64)>) -> Envelope {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for (t, v) in points {
        match knots.last_mut() {
            Some(last) if t - last.0 <= EPS => last.1 = last.1.max(v),
            _ => knots.push((t, v)),
        }
    }
    let mut run = f64::NEG_INFINITY;
    for k in knots.iter_mut() {
        run = run.max(k.1);
        k.1 = run;
    }
    Envelope::new(knots)
}

/// Situation information: the set of occupation-time pairs of the other agent
/// consistent with everything observed, referenced to `t_cur`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UncertaintySet {
    t_cur: f64,
    horizon: f64,
    tin_lo: f64,
    tin_hi: f64,
    lower: Envelope,
    upper: Envelope,
}

impl UncertaintySet {
    fn from_envelopes(t_cur: f64, horizon: f64, lower: Envelope, upper: Envelope) -> Self {
        let tin_lo = lower.first().0.min(upper.first().0);
        let tin_hi = lower.last().0.max(upper.last().0);
        Self { t_cur, horizon, tin_lo, tin_hi, lower, upper }
    }

    /// The maximally ignorant set: entry anywhere from now to the horizon,
    /// exit bounded below by the full-speed crossing time and above by the
    /// horizon.
    pub fn unconstrained(t_cur: f64, horizon: f64, params1: &AgentParams) -> Self {
        let min_gap = params1.length / params1.v_max;
        assert!(
            horizon > t_cur + min_gap,
            "horizon {horizon} too small for an unconstrained set at t = {t_cur}"
        );
        let tin_hi = horizon - min_gap;
        let lower = Envelope::new(vec![(t_cur, t_cur + min_gap), (tin_hi, horizon)]);
        let upper = Envelope::new(vec![(t_cur, horizon), (tin_hi, horizon)]);
        Self::from_envelopes(t_cur, horizon, lower, upper)
    }

    /// Degenerate set for an agent already past the resource.
    pub fn passed(t_cur: f64, horizon: f64) -> Self {
        Self::window(t_cur, t_cur, t_cur, horizon)
    }

    /// Set whose occupied window is exactly `(u, o)`.
    pub fn window(t_cur: f64, u: f64, o: f64, horizon: f64) -> Self {
        assert!(t_cur <= u + 1e-9 && u <= o + 1e-9 && o <= horizon + 1e-9);
        let lower = Envelope::new(vec![(u, o)]);
        let upper = Envelope::new(vec![(u, o)]);
        Self::from_envelopes(t_cur, horizon, lower, upper)
    }

    /// Uncertainty set implied by an accurate state observation of agent 1 at
    /// `t_obs <= t_cur`.
    ///
    /// Positions split three ways: still approaching (`p <= 0`), inside the
    /// resource, and already past it. In the approaching case the envelopes
    /// come from sweeping the one-switch extremal families: the
    /// brake-then-throttle trajectory entering at `t` has the smallest exit,
    /// the throttle-then-brake one the largest.
    pub fn from_observation(
        x_obs: State,
        t_obs: f64,
        t_cur: f64,
        params1: &AgentParams,
        horizon: f64,
    ) -> Self {
        assert!(t_obs <= t_cur + 1e-9, "observation from the future");
        if x_obs.p >= params1.length {
            return Self::passed(t_cur, horizon);
        }
        if x_obs.p > 0.0 {
            // inside the resource: entry already happened, exit bracketed by
            // the max-throttle and max-brake exits
            let rest = params1.length - x_obs.p;
            let out_acc = t_obs + throttle_cover_time(x_obs.v, rest, params1);
            let stop_dist = x_obs.v * x_obs.v / (2.0 * params1.a_dec);
            let out_dec = if stop_dist > rest {
                let disc = (x_obs.v * x_obs.v - 2.0 * params1.a_dec * rest).max(0.0);
                t_obs + 2.0 * rest / (x_obs.v + disc.sqrt())
            } else {
                f64::INFINITY // may stop inside and never leave
            };
            let lo = out_acc.clamp(t_cur, horizon);
            let hi = out_dec.clamp(t_cur, horizon);
            let lower = Envelope::new(vec![(t_cur, lo)]);
            let upper = Envelope::new(vec![(t_cur, hi.max(lo))]);
            return Self::from_envelopes(t_cur, horizon, lower, upper);
        }
        Self::from_approach_observation(x_obs, t_obs, t_cur, params1, horizon)
    }

    fn from_approach_observation(
        x_obs: State,
        t_obs: f64,
        t_cur: f64,
        params1: &AgentParams,
        horizon: f64,
    ) -> Self {
        let min_gap = params1.length / params1.v_max;
        let tin_cap = horizon - min_gap;
        let (acc_in, _) = acc_entry(x_obs, t_obs, params1);
        let de = dec_entry(x_obs, t_obs, params1);
        let acc_in = acc_in.min(tin_cap);
        let tin_hi_raw = de.min(tin_cap);

        // Lower curve: sweep the brake-then-throttle switch. Entry time is
        // continuous and non-decreasing in the switch, so the parametric
        // samples are ordered in entry time.
        let s_hi = if de.is_finite() && de <= tin_cap {
            de
        } else {
            let mut step = 1.0;
            let mut hi = t_obs + step;
            while dec_acc_window(x_obs, t_obs, hi, params1, params1.length).0 < tin_hi_raw {
                step *= 2.0;
                hi = t_obs + step;
                if step > 1e12 {
                    break;
                }
            }
            hi
        };
        let gap_target = ((tin_hi_raw - acc_in) / TARGET_KNOTS as f64).max(1e-7);
        let lower_raw = sample_monotone(
            |s| dec_acc_window(x_obs, t_obs, s, params1, params1.length),
            t_obs,
            s_hi,
            gap_target,
        );

        // Upper curve: sweep the throttle-then-brake switch (entry time is
        // non-increasing in it). When max braking stops short of the
        // resource, switches below the critical one never enter at all and
        // the exit bound degenerates to the horizon.
        let u_lo = if de.is_finite() {
            t_obs
        } else {
            critical_acc_dec_switch(x_obs, t_obs, params1) + 1e-9
        };
        let u_hi = acc_in.max(t_obs) + 1e-6;
        let upper_raw = sample_monotone(
            |u| {
                let ti = acc_dec_entry_time(x_obs, t_obs, u, params1);
                let to = kinematics::acc_dec_window(x_obs, t_obs, u, params1, params1.length).1;
                (ti, to)
            },
            u_lo,
            u_hi,
            gap_target,
        );

        // entries whose smallest exit would overrun the horizon are
        // infeasible outright; the entry domain ends where the lower curve
        // meets the horizon
        let tin_cap = tin_cap.min(entry_cap_by_exit(&lower_raw, horizon)).max(acc_in);
        let lower_pts = clamp_points(lower_raw, t_cur, horizon, tin_cap);
        let mut upper_pts = clamp_points(upper_raw, t_cur, horizon, tin_cap);
        // extend the upper curve across entry times the throttle-then-brake
        // family cannot reach: only the horizon bounds the exit there
        let covered = upper_pts.iter().fold(t_cur, |m, p| m.max(p.0));
        let lo_dom = lower_pts.iter().fold(f64::INFINITY, |m, p| m.min(p.0));
        let hi_dom = lower_pts.iter().fold(t_cur, |m, p| m.max(p.0));
        if hi_dom > covered + 2.0 * JUMP_EPS {
            upper_pts.push((covered + JUMP_EPS, horizon));
            upper_pts.push((hi_dom, horizon));
        }
        upper_pts.retain(|p| p.0 <= hi_dom + EPS);
        if upper_pts.is_empty() {
            upper_pts.push((lo_dom.min(hi_dom), horizon));
        }

        Self::from_envelopes(t_cur, horizon, build_lower(lower_pts), build_upper(upper_pts))
    }

    /// Smallest envelope-form superset of a bag of occupation pairs.
    pub fn rectify(points: &[(f64, f64)], t_cur: f64, horizon: f64) -> Result<Self, String> {
        if points.is_empty() {
            return Err("rectify requires at least one occupation pair".into());
        }
        for &(u, o) in points {
            if !(t_cur - 1e-9 <= u && u <= o + 1e-9 && o <= horizon + 1e-9) {
                return Err(format!("occupation pair ({u}, {o}) outside [{t_cur}, {horizon}]"));
            }
        }
        let pts: Vec<(f64, f64)> =
            points.iter().map(|&(u, o)| (u.max(t_cur), o.clamp(u.max(t_cur), horizon))).collect();
        Ok(Self::from_envelopes(t_cur, horizon, build_lower(pts.clone()), build_upper(pts)))
    }

    /// Envelope-wise intersection of two sets (information fusion), rectified
    /// back into envelope form. `None` when the sets are inconsistent.
    pub fn intersect(a: &Self, b: &Self, samples: usize) -> Option<Self> {
        let lo = a.tin_lo.max(b.tin_lo);
        let hi = a.tin_hi.min(b.tin_hi);
        if hi < lo {
            return None;
        }
        let t_cur = a.t_cur.max(b.t_cur);
        let horizon = a.horizon.min(b.horizon);
        let n = samples.max(2);
        let mut pts = Vec::new();
        for i in 0..n {
            let u = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let l = a.lower.value(u).max(b.lower.value(u));
            let h = a.upper.value(u).min(b.upper.value(u));
            if l <= h + EPS {
                pts.push((u, l.min(h)));
                pts.push((u, h));
            }
        }
        if pts.is_empty() {
            return None;
        }
        Self::rectify(&pts, t_cur, horizon).ok()
    }

    pub fn t_cur(&self) -> f64 {
        self.t_cur
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tin_lo(&self) -> f64 {
        self.tin_lo
    }

    pub fn tin_hi(&self) -> f64 {
        self.tin_hi
    }

    /// Achievable exit-time interval for entry time `u`.
    pub fn slice(&self, u: f64) -> (f64, f64) {
        (self.lower.value(u), self.upper.value(u))
    }

    /// Union of the possible occupation intervals, as one open interval.
    pub fn occupied_window(&self) -> TimeWindow {
        TimeWindow { lo: self.tin_lo, hi: self.upper.last().1 }
    }

    pub fn contains(&self, u: f64, o: f64, tol: f64) -> bool {
        u >= self.tin_lo - tol
            && u <= self.tin_hi + tol
            && o >= self.lower.value(u) - tol
            && o <= self.upper.value(u) + tol
    }

    /// Clamps both coordinates of every member at `t_new` and moves the
    /// reference time forward.
    pub fn advance(&self, t_new: f64) -> Self {
        // clamping at a time already passed changes nothing
        let t_new = t_new.max(self.t_cur);
        if t_new <= self.tin_lo {
            let mut out = self.clone();
            out.t_cur = t_new;
            return out;
        }
        if t_new >= self.tin_hi {
            let lo = self.lower.first().1.max(t_new);
            let hi = self.upper.last().1.max(t_new).max(lo);
            let lower = Envelope::new(vec![(t_new, lo)]);
            let upper = Envelope::new(vec![(t_new, hi)]);
            return Self::from_envelopes(t_new, self.horizon, lower, upper);
        }
        // entry times below t_new collapse onto the slice at t_new
        let collapsed_min = self.lower.first().1.max(t_new);
        let resumed = self.lower.value(t_new + JUMP_EPS);
        let mut lower_knots = vec![(t_new, collapsed_min.min(resumed))];
        if resumed > collapsed_min + EPS {
            lower_knots.push((t_new + JUMP_EPS, resumed));
        }
        for &(t, v) in &self.lower.knots {
            if t > t_new + JUMP_EPS + EPS {
                lower_knots.push((t, v));
            }
        }
        let upper_knots = self.upper.tail_knots(t_new, self.upper.value(t_new).max(t_new));
        Self::from_envelopes(
            t_new,
            self.horizon,
            Envelope::new(lower_knots),
            Envelope::new(upper_knots),
        )
    }

    /// The set of achievable `<earliest entry, latest exit>` bounds over all
    /// future refinements of this information: entry range unchanged, each
    /// slice stretched up to the global exit maximum.
    pub fn reachable_bounds(&self) -> ReachableBounds {
        let top = self.upper.last().1;
        let upper = if self.tin_hi - self.tin_lo > EPS {
            Envelope::new(vec![(self.tin_lo, top), (self.tin_hi, top)])
        } else {
            Envelope::new(vec![(self.tin_lo, top)])
        };
        ReachableBounds {
            set: Self::from_envelopes(self.t_cur, self.horizon, self.lower.clone(), upper),
        }
    }

    /// Structural invariants; returns a description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let tol = 1e-6;
        if self.tin_lo < self.t_cur - tol {
            return Err(format!("tin_lo {} before t_cur {}", self.tin_lo, self.t_cur));
        }
        if self.tin_hi < self.tin_lo - tol {
            return Err("empty entry range".into());
        }
        let n = 64;
        let mut prev_gap = f64::NEG_INFINITY;
        let mut prev_up = f64::NEG_INFINITY;
        for i in 0..=n {
            let u = self.tin_lo + (self.tin_hi - self.tin_lo) * i as f64 / n as f64;
            let (lo, hi) = self.slice(u);
            if lo > hi + tol {
                return Err(format!("lower {lo} above upper {hi} at {u}"));
            }
            if hi > self.horizon + tol {
                return Err(format!("upper {hi} beyond horizon at {u}"));
            }
            if lo < u - tol {
                return Err(format!("exit before entry at {u}: {lo}"));
            }
            let gap = lo - u;
            if gap < prev_gap - tol {
                return Err(format!("lower gap decreasing at {u}: {gap} < {prev_gap}"));
            }
            if hi < prev_up - tol {
                return Err(format!("upper value decreasing at {u}"));
            }
            prev_gap = gap;
            prev_up = hi;
        }
        Ok(())
    }
}

/// Set of achievable `<min entry, max exit>` pairs, in the same envelope form
/// as the underlying uncertainty set.
#[derive(Debug, Clone, Serialize)]
pub struct ReachableBounds {
    set: UncertaintySet,
}

impl ReachableBounds {
    pub fn tin_lo(&self) -> f64 {
        self.set.tin_lo
    }

    pub fn tin_hi(&self) -> f64 {
        self.set.tin_hi
    }

    pub fn out_max(&self) -> f64 {
        self.set.upper.last().1
    }

    pub fn slice(&self, u: f64) -> (f64, f64) {
        self.set.slice(u)
    }

    pub fn contains(&self, u: f64, o: f64, tol: f64) -> bool {
        self.set.contains(u, o, tol)
    }
}

/// Critical throttle-then-brake switch below which max braking stops short of
/// the resource: the stop position is continuous and strictly increasing in
/// the switch, so a plain bisection suffices.
fn critical_acc_dec_switch(x: State, t_obs: f64, params: &AgentParams) -> f64 {
    let stop_pos = |u: f64| {
        let hold = (u - t_obs).max(0.0);
        let clip_t = (params.v_max - x.v) / params.a_acc;
        let (p1, v1) = if hold < clip_t {
            (x.p + x.v * hold + 0.5 * params.a_acc * hold * hold, x.v + params.a_acc * hold)
        } else {
            let d_clip = (params.v_max * params.v_max - x.v * x.v) / (2.0 * params.a_acc);
            (x.p + d_clip + params.v_max * (hold - clip_t), params.v_max)
        };
        p1 + v1 * v1 / (2.0 * params.a_dec)
    };
    let mut lo = t_obs;
    let mut hi = t_obs + 1.0;
    let mut step = 1.0;
    while stop_pos(hi) <= 0.0 {
        step *= 2.0;
        hi = t_obs + step;
        if step > 1e12 {
            return hi;
        }
    }
    for _ in 0..kinematics::BISECT_MAX_ITER {
        if hi - lo <= kinematics::BISECT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if stop_pos(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Samples a parametric curve `s -> (t_in, t_out)` whose first coordinate is
/// monotone in `s`. Intervals are split where the midpoint deviates from the
/// chord, so knots concentrate at the curve's bends and linear stretches stay
/// sparse. Non-finite entries are dropped.
fn sample_monotone(
    eval: impl Fn(f64) -> (f64, f64),
    s_lo: f64,
    s_hi: f64,
    _gap_target: f64,
) -> Vec<(f64, f64)> {
    const INITIAL: usize = 32;
    const MAX_KNOTS: usize = 1024;
    const MAX_DEPTH: u32 = 9;
    const ERR_TOL: f64 = 5e-5;
    if s_hi <= s_lo {
        let v = eval(s_lo);
        return if v.0.is_finite() { vec![v] } else { Vec::new() };
    }
    fn chord_err(v0: (f64, f64), vm: (f64, f64), v1: (f64, f64)) -> f64 {
        let et = if v0.0.is_finite() && v1.0.is_finite() && vm.0.is_finite() {
            (vm.0 - 0.5 * (v0.0 + v1.0)).abs()
        } else {
            f64::INFINITY
        };
        let eo = if v0.1.is_finite() && v1.1.is_finite() {
            if vm.1.is_finite() { (vm.1 - 0.5 * (v0.1 + v1.1)).abs() } else { f64::INFINITY }
        } else {
            0.0 // both-capped stretch: nothing to interpolate
        };
        et.max(eo)
    }
    #[allow(clippy::too_many_arguments)]
    fn refine(
        eval: &impl Fn(f64) -> (f64, f64),
        s0: f64,
        v0: (f64, f64),
        s1: f64,
        v1: (f64, f64),
        depth: u32,
        count: &mut usize,
        out: &mut Vec<(f64, f64)>,
    ) {
        if *count >= MAX_KNOTS || s1 - s0 <= 1e-9 {
            return;
        }
        let sm = 0.5 * (s0 + s1);
        let vm = eval(sm);
        if depth == 0 || chord_err(v0, vm, v1) <= ERR_TOL {
            if vm.0.is_finite() {
                out.push(vm);
                *count += 1;
            }
            return;
        }
        refine(eval, s0, v0, sm, vm, depth - 1, count, out);
        if vm.0.is_finite() {
            out.push(vm);
            *count += 1;
        }
        refine(eval, sm, vm, s1, v1, depth - 1, count, out);
    }
    let mut out = Vec::with_capacity(INITIAL * 2);
    let mut count = 0usize;
    let mut prev_s = s_lo;
    let mut prev_v = eval(s_lo);
    if prev_v.0.is_finite() {
        out.push(prev_v);
        count += 1;
    }
    for i in 1..INITIAL {
        let s = s_lo + (s_hi - s_lo) * i as f64 / (INITIAL - 1) as f64;
        let v = eval(s);
        refine(&eval, prev_s, prev_v, s, v, MAX_DEPTH, &mut count, &mut out);
        if v.0.is_finite() {
            out.push(v);
            count += 1;
        }
        prev_s = s;
        prev_v = v;
    }
    out
}

/// Largest entry time whose smallest exit still fits under the horizon, given
/// samples of the lower curve sorted by entry with non-decreasing exits.
fn entry_cap_by_exit(points: &[(f64, f64)], horizon: f64) -> f64 {
    let mut prev: Option<(f64, f64)> = None;
    for &(u, o) in points {
        if o > horizon {
            if let Some((pu, po)) = prev {
                if o > po {
                    return pu + (u - pu) * (horizon - po) / (o - po);
                }
            }
            return u;
        }
        prev = Some((u, o));
    }
    f64::INFINITY
}

/// Clamps raw occupation pairs into the hat convention: both coordinates at
/// least `t_cur`, exits capped at the horizon, entries beyond
/// `horizon - length/v_max` dropped (they would force an exit past the
/// horizon). A boundary knot is interpolated where the cap cuts the curve.
fn clamp_points(
    points: Vec<(f64, f64)>,
    t_cur: f64,
    horizon: f64,
    tin_cap: f64,
) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len() + 1);
    let mut prev_kept: Option<(f64, f64)> = None;
    for (u, o) in points {
        if u > tin_cap + EPS {
            if let Some((pu, po)) = prev_kept {
                if u > pu + EPS {
                    // interpolate the raw curve at the cap, then clamp
                    let f = (tin_cap - pu) / (u - pu);
                    let ob = if o.is_finite() && po.is_finite() { po + (o - po) * f } else { horizon };
                    let uu = tin_cap.max(t_cur);
                    out.push((uu, ob.clamp(uu, horizon)));
                }
            }
            prev_kept = None;
            continue;
        }
        let uu = u.max(t_cur);
        let oo = o.clamp(uu, horizon);
        out.push((uu, oo));
        prev_kept = Some((u, o));
    }
    out
}
