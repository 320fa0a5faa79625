//! Constant-acceleration trajectory primitives.
//!
//! Trajectories are stored symbolically as piecewise-constant-acceleration
//! segments plus a terminal rule, and every query (state, resource entry/exit
//! time) is answered in closed form. Velocity clipping at `0` and `v_max` is
//! resolved at construction time by splitting segments at the clip instant, so
//! each stored piece really has constant acceleration.
//!
//! Times at which an event never happens are represented by `f64::INFINITY`,
//! which compares greater than every finite time and propagates through
//! min/max. No arithmetic is performed on infinite times.

use serde::{Deserialize, Serialize};

/// Convergence tolerance for the monotone bisections (time and position).
pub const BISECT_TOL: f64 = 1e-9;
/// Iteration cap for the monotone bisections; exhausting it means a
/// monotonicity assumption was violated.
pub const BISECT_MAX_ITER: u32 = 200;

const EPS: f64 = 1e-12;

/// Kinematic bounds and resource demand of one agent.
///
/// `a_dec` and `a_acc` are the magnitudes of the strongest allowed
/// deceleration and acceleration; `length` is how much of the shared resource
/// the agent occupies (its position axis crosses the resource on `(0, length)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub v_max: f64,
    pub a_dec: f64,
    pub a_acc: f64,
    pub length: f64,
}

impl AgentParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("v_max", self.v_max),
            ("a_dec", self.a_dec),
            ("a_acc", self.a_acc),
            ("length", self.length),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("agent parameter `{name}` must be finite and > 0, got {v}"));
            }
        }
        Ok(())
    }
}

/// Position/velocity pair of an agent at one instant.
///
/// Position `0` is the resource entry, `length` the resource exit; positions
/// are signed, so an approaching agent has `p < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub p: f64,
    pub v: f64,
}

impl State {
    pub fn new(p: f64, v: f64) -> Self {
        Self { p, v }
    }
}

/// One constant-acceleration span of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub duration: f64,
    pub accel: f64,
}

/// Behaviour after the last stored segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TerminalRule {
    /// Keep the final velocity forever.
    Hold,
    /// Accelerate at `accel` until `v_max`, then cruise forever.
    AccelToVmax { accel: f64, v_max: f64 },
    /// Decelerate at `decel` until stopped, then stand still forever.
    DecelToStop { decel: f64 },
}

/// Fully resolved constant-acceleration span; the last piece of a trajectory
/// has infinite duration and zero acceleration.
#[derive(Debug, Clone, Copy)]
struct Piece {
    t0: f64,
    p0: f64,
    v0: f64,
    a: f64,
    dur: f64,
}

impl Piece {
    fn state_at(&self, t: f64) -> State {
        let dt = t - self.t0;
        State {
            p: self.p0 + self.v0 * dt + 0.5 * self.a * dt * dt,
            v: (self.v0 + self.a * dt).max(0.0),
        }
    }

    fn end_time(&self) -> f64 {
        self.t0 + self.dur
    }

    fn end_state(&self) -> State {
        self.state_at(self.end_time())
    }
}

/// First time within the piece at which position reaches `x`.
///
/// Position is non-decreasing (velocities are never negative), so the
/// crossing, if any, is unique. Returns the offset from the piece start.
fn piece_reach_offset(v0: f64, a: f64, need: f64, dur: f64) -> Option<f64> {
    debug_assert!(need >= 0.0);
    if need <= 0.0 {
        return if v0 > EPS || a > EPS { Some(0.0) } else { None };
    }
    let tau = if a.abs() <= EPS {
        if v0 <= EPS {
            return None;
        }
        need / v0
    } else {
        let disc = v0 * v0 + 2.0 * a * need;
        if disc < 0.0 {
            return None; // braking piece stops short of the target
        }
        let denom = v0 + disc.sqrt();
        if denom <= EPS {
            return None;
        }
        2.0 * need / denom
    };
    (tau <= dur + BISECT_TOL).then_some(tau.min(dur))
}

/// inf{ t : p(t) > x } over a resolved piece list; `INFINITY` when never.
fn pieces_first_above(pieces: &[Piece], x: f64) -> f64 {
    for piece in pieces {
        if piece.p0 > x {
            return piece.t0;
        }
        let end_p = if piece.dur.is_finite() {
            piece.end_state().p
        } else if piece.v0 > EPS || piece.a > EPS {
            f64::INFINITY
        } else {
            piece.p0
        };
        if end_p > x {
            if let Some(tau) = piece_reach_offset(piece.v0, piece.a, x - piece.p0, piece.dur) {
                return piece.t0 + tau;
            }
        }
    }
    f64::INFINITY
}

/// inf{ t : p(t) >= x } over a resolved piece list; `INFINITY` when never.
fn pieces_first_at_or_above(pieces: &[Piece], x: f64) -> f64 {
    for piece in pieces {
        if piece.p0 >= x {
            return piece.t0;
        }
        let end_p = if piece.dur.is_finite() {
            piece.end_state().p
        } else if piece.v0 > EPS || piece.a > EPS {
            f64::INFINITY
        } else {
            piece.p0
        };
        if end_p >= x {
            // need > 0 here, so the offset solver cannot take its need<=0 path
            if let Some(tau) = piece_reach_offset(piece.v0, piece.a, x - piece.p0, piece.dur) {
                return piece.t0 + tau;
            }
        }
    }
    f64::INFINITY
}

/// Resource entry/exit times of a trajectory: entry is the first instant with
/// `p > 0`, exit the first instant with `p >= length` (`sup{p < length}` for a
/// non-decreasing position). Either may be `INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationWindow {
    pub t_in: f64,
    pub t_out: f64,
}

impl OccupationWindow {
    /// Open-interval disjointness of two occupation windows.
    pub fn disjoint(&self, other: &OccupationWindow) -> bool {
        // (a,b) and (c,d) open intervals: empty intervals never conflict.
        self.t_out <= other.t_in
            || other.t_out <= self.t_in
            || self.t_in >= self.t_out
            || other.t_in >= other.t_out
    }
}

/// Piecewise-constant-acceleration motion profile with closed-form queries.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    start_time: f64,
    start_state: State,
    segments: Vec<Segment>,
    terminal: TerminalRule,
    #[serde(skip)]
    pieces: Vec<Piece>,
}

impl Trajectory {
    /// Builds a trajectory from explicit segments. Segments must already be
    /// clip-free: velocity may touch but not cross `0` inside a segment.
    pub fn from_segments(
        start_time: f64,
        start_state: State,
        segments: Vec<Segment>,
        terminal: TerminalRule,
    ) -> Self {
        let mut pieces = Vec::with_capacity(segments.len() + 2);
        let mut t = start_time;
        let mut p = start_state.p;
        let mut v = start_state.v;
        for seg in &segments {
            if seg.duration <= EPS {
                continue;
            }
            pieces.push(Piece { t0: t, p0: p, v0: v, a: seg.accel, dur: seg.duration });
            p += v * seg.duration + 0.5 * seg.accel * seg.duration * seg.duration;
            v += seg.accel * seg.duration;
            t += seg.duration;
            debug_assert!(v >= -1e-9, "segment crosses v = 0 without a split");
            v = v.max(0.0);
        }
        match terminal {
            TerminalRule::Hold => {
                pieces.push(Piece { t0: t, p0: p, v0: v, a: 0.0, dur: f64::INFINITY });
            }
            TerminalRule::AccelToVmax { accel, v_max } => {
                if v < v_max - EPS {
                    let dur = (v_max - v) / accel;
                    pieces.push(Piece { t0: t, p0: p, v0: v, a: accel, dur });
                    p += v * dur + 0.5 * accel * dur * dur;
                    t += dur;
                    v = v_max;
                }
                pieces.push(Piece { t0: t, p0: p, v0: v, a: 0.0, dur: f64::INFINITY });
            }
            TerminalRule::DecelToStop { decel } => {
                if v > EPS {
                    let dur = v / decel;
                    pieces.push(Piece { t0: t, p0: p, v0: v, a: -decel, dur });
                    p += v * dur - 0.5 * decel * dur * dur;
                    t += dur;
                }
                pieces.push(Piece { t0: t, p0: p, v0: 0.0, a: 0.0, dur: f64::INFINITY });
            }
        }
        Self { start_time, start_state, segments, terminal, pieces }
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn start_state(&self) -> State {
        self.start_state
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn terminal(&self) -> TerminalRule {
        self.terminal
    }

    /// Exact state at time `t`. Panics if `t` precedes the start time.
    pub fn state_at(&self, t: f64) -> State {
        assert!(
            t >= self.start_time - BISECT_TOL,
            "state_at queried at t = {t} before trajectory start {}",
            self.start_time
        );
        let t = t.max(self.start_time);
        for piece in &self.pieces {
            if t < piece.end_time() {
                return piece.state_at(t);
            }
        }
        // unreachable: the final piece is infinite
        self.pieces.last().expect("trajectory has pieces").state_at(t)
    }

    /// Acceleration applied at time `t` (right-continuous at boundaries).
    pub fn accel_at(&self, t: f64) -> f64 {
        for piece in &self.pieces {
            if t < piece.end_time() {
                return piece.a;
            }
        }
        0.0
    }

    /// Exact resource entry/exit times for a resource demand `length`.
    pub fn entry_exit(&self, length: f64) -> OccupationWindow {
        OccupationWindow {
            t_in: pieces_first_above(&self.pieces, 0.0),
            t_out: pieces_first_at_or_above(&self.pieces, length),
        }
    }

    /// Constant-acceleration spans of this trajectory restricted to `[a, b]`.
    pub fn segments_between(&self, a: f64, b: f64) -> Vec<Segment> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            let lo = piece.t0.max(a);
            let hi = piece.end_time().min(b);
            if hi - lo > EPS {
                out.push(Segment { duration: hi - lo, accel: piece.a });
            }
        }
        out
    }

    /// Finite spans from `from_t` on, plus the rule describing the infinite tail.
    pub fn tail_from(&self, from_t: f64) -> (Vec<Segment>, TerminalRule) {
        let mut out = Vec::new();
        for piece in &self.pieces {
            if piece.dur.is_finite() {
                let lo = piece.t0.max(from_t);
                let hi = piece.end_time();
                if hi - lo > EPS {
                    out.push(Segment { duration: hi - lo, accel: piece.a });
                }
            }
        }
        (out, TerminalRule::Hold)
    }

    /// Start of the first braking span, if the trajectory brakes at all.
    pub fn first_decel_onset(&self) -> Option<f64> {
        self.pieces.iter().find(|p| p.a < -1e-9 && p.dur > 1e-9).map(|p| p.t0)
    }

    /// Start of the first accelerating span that follows a braking span.
    pub fn decel_to_accel_switch(&self) -> Option<f64> {
        let mut braked = false;
        for piece in &self.pieces {
            if piece.dur <= 1e-9 {
                continue;
            }
            if piece.a < -1e-9 {
                braked = true;
            } else if braked && piece.a > 1e-9 {
                return Some(piece.t0);
            }
        }
        None
    }
}

/// Whether the agent can come to a stop without touching the resource:
/// `p + v^2 / (2 a_dec) <= 0`.
pub fn can_stop_before(x: State, params: &AgentParams) -> bool {
    x.p + x.v * x.v / (2.0 * params.a_dec) <= 0.0
}

/// Max-throttle trajectory: accelerate at `a_acc` until `v_max`, then cruise.
pub fn acc_trajectory(x: State, t0: f64, params: &AgentParams) -> Trajectory {
    Trajectory::from_segments(
        t0,
        x,
        Vec::new(),
        TerminalRule::AccelToVmax { accel: params.a_acc, v_max: params.v_max },
    )
}

/// Max-brake trajectory: decelerate at `a_dec` until stopped, then stand still.
pub fn dec_trajectory(x: State, t0: f64, params: &AgentParams) -> Trajectory {
    Trajectory::from_segments(t0, x, Vec::new(), TerminalRule::DecelToStop { decel: params.a_dec })
}

/// Brake-then-throttle trajectory with the switch at `t_switch`: max braking
/// (holding a standstill once stopped) until the switch, max throttle after.
pub fn dec_acc_trajectory(x: State, t0: f64, t_switch: f64, params: &AgentParams) -> Trajectory {
    let hold = (t_switch - t0).max(0.0);
    let stop_t = x.v / params.a_dec;
    let mut segments = Vec::new();
    if hold <= stop_t {
        if hold > EPS {
            segments.push(Segment { duration: hold, accel: -params.a_dec });
        }
    } else {
        if stop_t > EPS {
            segments.push(Segment { duration: stop_t, accel: -params.a_dec });
        }
        segments.push(Segment { duration: hold - stop_t, accel: 0.0 });
    }
    Trajectory::from_segments(
        t0,
        x,
        segments,
        TerminalRule::AccelToVmax { accel: params.a_acc, v_max: params.v_max },
    )
}

/// Throttle-then-brake trajectory with the switch at `t_switch` (an infinite
/// switch time degenerates to the max-throttle trajectory).
pub fn acc_dec_trajectory(x: State, t0: f64, t_switch: f64, params: &AgentParams) -> Trajectory {
    if !t_switch.is_finite() {
        return acc_trajectory(x, t0, params);
    }
    let hold = (t_switch - t0).max(0.0);
    let clip_t = (params.v_max - x.v) / params.a_acc;
    let mut segments = Vec::new();
    if hold <= clip_t {
        if hold > EPS {
            segments.push(Segment { duration: hold, accel: params.a_acc });
        }
    } else {
        if clip_t > EPS {
            segments.push(Segment { duration: clip_t, accel: params.a_acc });
        }
        segments.push(Segment { duration: hold - clip_t, accel: 0.0 });
    }
    Trajectory::from_segments(t0, x, segments, TerminalRule::DecelToStop { decel: params.a_dec })
}

/// Builds the clipped trajectory obtained by applying each requested
/// acceleration for its duration, saturating at the velocity bounds: a
/// positive request is zeroed while at `v_max`, a negative one while at rest.
pub fn clipped_trajectory(
    x: State,
    t0: f64,
    spans: &[(f64, f64)],
    params: &AgentParams,
) -> Trajectory {
    let mut segments = Vec::new();
    let mut v = x.v;
    for &(dur, a) in spans {
        let mut left = dur;
        while left > EPS {
            if a > EPS && v < params.v_max - EPS {
                let hit = (params.v_max - v) / a;
                let d = hit.min(left);
                segments.push(Segment { duration: d, accel: a });
                v = (v + a * d).min(params.v_max);
                left -= d;
            } else if a < -EPS && v > EPS {
                let hit = v / (-a);
                let d = hit.min(left);
                segments.push(Segment { duration: d, accel: a });
                v = (v + a * d).max(0.0);
                left -= d;
            } else {
                // saturated (or zero request): hold velocity
                segments.push(Segment { duration: left, accel: 0.0 });
                left = 0.0;
            }
        }
    }
    Trajectory::from_segments(t0, x, segments, TerminalRule::Hold)
}

// ---------------------------------------------------------------------------
// Scalar closed forms. These answer the same questions as the trajectory
// objects without allocating; the hot loops in `valuation` and `uncertainty`
// are built on them, and tests pin them against the trajectory path.
// ---------------------------------------------------------------------------

/// Time to cover `dist >= 0` starting at velocity `v` under max throttle.
pub(crate) fn throttle_cover_time(v: f64, dist: f64, params: &AgentParams) -> f64 {
    debug_assert!(dist >= 0.0);
    if dist <= 0.0 {
        return 0.0;
    }
    let vm = params.v_max;
    let d_clip = (vm * vm - v * v) / (2.0 * params.a_acc);
    if dist <= d_clip {
        let s = (v * v + 2.0 * params.a_acc * dist).sqrt();
        2.0 * dist / (v + s)
    } else {
        (vm - v) / params.a_acc + (dist - d_clip) / vm
    }
}

/// Entry time and entry velocity of the max-throttle trajectory from
/// `x` (with `x.p <= 0`) at `t0`.
pub(crate) fn acc_entry(x: State, t0: f64, params: &AgentParams) -> (f64, f64) {
    let d = -x.p;
    if d <= 0.0 {
        return (t0, x.v);
    }
    let vm = params.v_max;
    let d_clip = (vm * vm - x.v * x.v) / (2.0 * params.a_acc);
    if d <= d_clip {
        let s = (x.v * x.v + 2.0 * params.a_acc * d).sqrt();
        (t0 + 2.0 * d / (x.v + s), s)
    } else {
        (t0 + (vm - x.v) / params.a_acc + (d - d_clip) / vm, vm)
    }
}

/// Entry time, entry velocity and exit time of the max-throttle trajectory.
pub(crate) fn acc_entry_exit(x: State, t0: f64, params: &AgentParams, length: f64) -> (f64, f64, f64) {
    let (t_in, v_in) = acc_entry(x, t0, params);
    (t_in, v_in, t_in + throttle_cover_time(v_in, length, params))
}

/// Entry time of the max-brake trajectory; `INFINITY` when the agent stops at
/// or before the resource boundary.
pub(crate) fn dec_entry(x: State, t0: f64, params: &AgentParams) -> f64 {
    if can_stop_before(x, params) {
        return f64::INFINITY;
    }
    let d = -x.p;
    if d <= 0.0 {
        return t0;
    }
    let disc = x.v * x.v - 2.0 * params.a_dec * d;
    // positive because the stop point is strictly past the boundary
    t0 + 2.0 * d / (x.v + disc.max(0.0).sqrt())
}

/// Entry time of the brake-then-throttle trajectory with switch `t_switch`.
pub(crate) fn dec_acc_entry_time(x: State, t0: f64, t_switch: f64, params: &AgentParams) -> f64 {
    let de = dec_entry(x, t0, params);
    if de <= t_switch {
        return de;
    }
    let hold = (t_switch - t0).max(0.0);
    let stop_t = x.v / params.a_dec;
    let (p1, v1) = if hold < stop_t {
        (x.p + x.v * hold - 0.5 * params.a_dec * hold * hold, x.v - params.a_dec * hold)
    } else {
        (x.p + x.v * x.v / (2.0 * params.a_dec), 0.0)
    };
    acc_entry(State::new(p1.min(0.0), v1), t_switch.max(t0), params).0
}

/// Entry time of the throttle-then-brake trajectory with switch `t_switch`.
pub(crate) fn acc_dec_entry_time(x: State, t0: f64, t_switch: f64, params: &AgentParams) -> f64 {
    let (ae, _) = acc_entry(x, t0, params);
    if ae <= t_switch {
        return ae;
    }
    let hold = (t_switch - t0).max(0.0);
    let clip_t = (params.v_max - x.v) / params.a_acc;
    let (p1, v1) = if hold < clip_t {
        (x.p + x.v * hold + 0.5 * params.a_acc * hold * hold, x.v + params.a_acc * hold)
    } else {
        let d_clip = (params.v_max * params.v_max - x.v * x.v) / (2.0 * params.a_acc);
        (x.p + d_clip + params.v_max * (hold - clip_t), params.v_max)
    };
    dec_entry(State::new(p1, v1), t_switch.max(t0), params)
}

/// Entry and exit times of the brake-then-throttle trajectory with switch
/// `t_switch`, for resource demand `length`. Allocation-free.
pub(crate) fn dec_acc_window(
    x: State,
    t0: f64,
    t_switch: f64,
    params: &AgentParams,
    length: f64,
) -> (f64, f64) {
    let mut pieces = [Piece { t0: 0.0, p0: 0.0, v0: 0.0, a: 0.0, dur: 0.0 }; 4];
    let n = dec_acc_pieces(x, t0, t_switch, params, &mut pieces);
    (pieces_first_above(&pieces[..n], 0.0), pieces_first_at_or_above(&pieces[..n], length))
}

/// Entry and exit times of the throttle-then-brake trajectory with switch
/// `t_switch`, for resource demand `length`. Allocation-free.
pub(crate) fn acc_dec_window(
    x: State,
    t0: f64,
    t_switch: f64,
    params: &AgentParams,
    length: f64,
) -> (f64, f64) {
    let mut pieces = [Piece { t0: 0.0, p0: 0.0, v0: 0.0, a: 0.0, dur: 0.0 }; 4];
    let n = acc_dec_pieces(x, t0, t_switch, params, &mut pieces);
    (pieces_first_above(&pieces[..n], 0.0), pieces_first_at_or_above(&pieces[..n], length))
}

/// Running construction state for a stack-allocated piece list.
struct PieceCursor {
    t: f64,
    p: f64,
    v: f64,
    n: usize,
}

impl PieceCursor {
    fn push(&mut self, out: &mut [Piece], a: f64, dur: f64) {
        if dur > EPS && dur.is_finite() {
            out[self.n] = Piece { t0: self.t, p0: self.p, v0: self.v, a, dur };
            self.n += 1;
            self.p += self.v * dur + 0.5 * a * dur * dur;
            self.v = (self.v + a * dur).max(0.0);
            self.t += dur;
        }
    }

    fn finish(mut self, out: &mut [Piece]) -> usize {
        out[self.n] = Piece { t0: self.t, p0: self.p, v0: self.v, a: 0.0, dur: f64::INFINITY };
        self.n += 1;
        self.n
    }
}

fn dec_acc_pieces(x: State, t0: f64, t_switch: f64, params: &AgentParams, out: &mut [Piece; 4]) -> usize {
    let hold = (t_switch - t0).max(0.0);
    let stop_t = x.v / params.a_dec;
    let mut c = PieceCursor { t: t0, p: x.p, v: x.v, n: 0 };
    if hold <= stop_t {
        c.push(out, -params.a_dec, hold);
    } else {
        c.push(out, -params.a_dec, stop_t);
        c.v = 0.0;
        c.push(out, 0.0, hold - stop_t);
    }
    if c.v < params.v_max - EPS {
        let dur = (params.v_max - c.v) / params.a_acc;
        c.push(out, params.a_acc, dur);
        c.v = params.v_max;
    }
    c.finish(out)
}

fn acc_dec_pieces(x: State, t0: f64, t_switch: f64, params: &AgentParams, out: &mut [Piece; 4]) -> usize {
    let hold = if t_switch.is_finite() { (t_switch - t0).max(0.0) } else { f64::INFINITY };
    let clip_t = (params.v_max - x.v) / params.a_acc;
    let mut c = PieceCursor { t: t0, p: x.p, v: x.v, n: 0 };
    if !hold.is_finite() {
        if c.v < params.v_max - EPS {
            c.push(out, params.a_acc, clip_t);
            c.v = params.v_max;
        }
        return c.finish(out);
    }
    if hold <= clip_t {
        c.push(out, params.a_acc, hold);
    } else {
        c.push(out, params.a_acc, clip_t);
        c.v = params.v_max;
        c.push(out, 0.0, hold - clip_t);
    }
    if c.v > EPS {
        let dur = c.v / params.a_dec;
        c.push(out, -params.a_dec, dur);
        c.v = 0.0;
    }
    c.finish(out)
}

/// Largest velocity any trajectory from `x` at `t0` can have when entering the
/// resource exactly at `t_entry`; the brake-then-throttle trajectory attains
/// it. `None` when no such trajectory exists (`t_entry` is earlier than the
/// max-throttle entry or later than the max-brake entry).
pub(crate) fn dec_acc_entry_velocity(
    x: State,
    t0: f64,
    t_entry: f64,
    params: &AgentParams,
) -> Option<f64> {
    if !t_entry.is_finite() {
        return None;
    }
    let d = -x.p;
    if d < 0.0 {
        return None;
    }
    let tau = t_entry - t0;
    if tau < -BISECT_TOL {
        return None;
    }
    let tau = tau.max(0.0);
    let (am, acc, vm, v0) = (params.a_dec, params.a_acc, params.v_max, x.v);
    let tol = 1e-9;

    // brake for `delta`, then throttle; entry mid-throttle below v_max
    let disc = tau * tau - 2.0 * (v0 * tau + 0.5 * acc * tau * tau - d) / (am + acc);
    if disc >= -tol {
        let delta = tau - disc.max(0.0).sqrt();
        if delta >= -tol {
            let delta = delta.max(0.0).min(tau);
            let v_s = v0 - am * delta;
            let w = v_s + acc * (tau - delta);
            if v_s >= -tol && w <= vm + tol {
                return Some(w.clamp(0.0, vm));
            }
        }
    }

    let stop_dist = v0 * v0 / (2.0 * am);
    // brake to rest, hold, then throttle; entry below v_max
    if d >= stop_dist - tol {
        let rho = (2.0 * (d - stop_dist).max(0.0) / acc).sqrt();
        let hold = tau - v0 / am - rho;
        if hold >= -tol {
            let w = acc * rho;
            if w <= vm + tol {
                return Some(w.min(vm));
            }
        }
    }

    // brake for `delta`, throttle to v_max, cruise into the entry
    {
        let a2 = -am * (am + acc) / (2.0 * acc);
        let a1 = (v0 - vm) * (am + acc) / acc;
        let a0 = (vm * vm - v0 * v0) / (2.0 * acc) + vm * tau - vm * (vm - v0) / acc - d;
        let disc = a1 * a1 - 4.0 * a2 * a0;
        if disc >= -tol {
            let s = disc.max(0.0).sqrt();
            for delta in [(-a1 + s) / (2.0 * a2), (-a1 - s) / (2.0 * a2)] {
                if delta >= -tol {
                    let delta = delta.max(0.0);
                    let v_s = v0 - am * delta;
                    if v_s >= -tol && v_s <= vm + tol {
                        let cruise = tau - delta - (vm - v_s) / acc;
                        if cruise >= -tol {
                            return Some(vm);
                        }
                    }
                }
            }
        }
    }

    // brake to rest, hold, throttle to v_max, cruise into the entry
    if d >= stop_dist + vm * vm / (2.0 * acc) - tol {
        let cruise = (d - stop_dist - vm * vm / (2.0 * acc)).max(0.0) / vm;
        let hold = tau - v0 / am - vm / acc - cruise;
        if hold >= -tol {
            return Some(vm);
        }
    }

    None
}

fn bisect_nondecreasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECT_MAX_ITER {
        if hi - lo <= BISECT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn bisect_nonincreasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECT_MAX_ITER {
        if hi - lo <= BISECT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Brake-then-throttle trajectory whose entry time equals `target_t_in`,
/// found by monotone bisection over the switch time (entry time is continuous
/// and non-decreasing in the switch). Returns the smallest-switch witness with
/// entry >= target; `None` when the target is outside the achievable range
/// `[t_in(max throttle), t_in(max brake)]`.
pub fn dec_acc_for_entry(
    x: State,
    t0: f64,
    target_t_in: f64,
    params: &AgentParams,
) -> Option<Trajectory> {
    dec_acc_switch_for_entry(x, t0, target_t_in, params)
        .map(|s| dec_acc_trajectory(x, t0, s, params))
}

/// Switch time of the brake-then-throttle trajectory entering at `target_t_in`.
pub fn dec_acc_switch_for_entry(
    x: State,
    t0: f64,
    target_t_in: f64,
    params: &AgentParams,
) -> Option<f64> {
    if !target_t_in.is_finite() || target_t_in < t0 - BISECT_TOL {
        return None;
    }
    let (acc_in, _) = acc_entry(x, t0, params);
    if target_t_in < acc_in - BISECT_TOL {
        return None;
    }
    if target_t_in <= acc_in + BISECT_TOL {
        return Some(t0);
    }
    let de = dec_entry(x, t0, params);
    let hi = if de.is_finite() {
        if target_t_in > de + BISECT_TOL {
            return None;
        }
        if target_t_in >= de - BISECT_TOL {
            return Some(de);
        }
        de
    } else {
        let mut step = 1.0;
        let mut hi = t0 + step;
        let mut guard = 0;
        while dec_acc_entry_time(x, t0, hi, params) < target_t_in {
            step *= 2.0;
            hi = t0 + step;
            guard += 1;
            if guard > 200 {
                return None;
            }
        }
        hi
    };
    Some(bisect_nondecreasing(
        |s| dec_acc_entry_time(x, t0, s, params),
        target_t_in,
        t0,
        hi,
    ))
}

/// Throttle-then-brake trajectory whose entry time equals `target_t_in`
/// (mirrored monotonicity: entry is continuous and non-increasing in the
/// switch on the feasible side). `None` when unachievable — including targets
/// inside the gap left when braking after the critical switch stops short.
pub fn acc_dec_for_entry(
    x: State,
    t0: f64,
    target_t_in: f64,
    params: &AgentParams,
) -> Option<Trajectory> {
    acc_dec_switch_for_entry(x, t0, target_t_in, params)
        .map(|s| acc_dec_trajectory(x, t0, s, params))
}

/// Switch time of the throttle-then-brake trajectory entering at `target_t_in`.
pub fn acc_dec_switch_for_entry(
    x: State,
    t0: f64,
    target_t_in: f64,
    params: &AgentParams,
) -> Option<f64> {
    if !target_t_in.is_finite() || target_t_in < t0 - BISECT_TOL {
        return None;
    }
    let (acc_in, _) = acc_entry(x, t0, params);
    if target_t_in < acc_in - BISECT_TOL {
        return None;
    }
    if target_t_in <= acc_in + BISECT_TOL {
        return Some(acc_in.max(t0));
    }
    let de = dec_entry(x, t0, params); // equals entry at switch = t0
    if de.is_finite() {
        if target_t_in > de + BISECT_TOL {
            return None;
        }
        if target_t_in >= de - BISECT_TOL {
            return Some(t0);
        }
    }
    let hi = acc_in.max(t0) + 1.0;
    let s = bisect_nonincreasing(|u| acc_dec_entry_time(x, t0, u, params), target_t_in, t0, hi);
    let achieved = acc_dec_entry_time(x, t0, s, params);
    // When max braking stops short, entry times jump from a finite supremum to
    // infinity as the switch shrinks; targets inside the gap are unreachable.
    if (achieved - target_t_in).abs() <= 1e-6 {
        Some(s)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AgentParams {
        AgentParams { v_max: 20.0, a_dec: 4.0, a_acc: 3.0, length: 5.0 }
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        if a.is_infinite() || b.is_infinite() {
            assert_eq!(a, b, "expected {b}, got {a}");
        } else {
            assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
        }
    }

    /// Fine-step numeric integration of a control law `a(t, v)`; independent
    /// of the symbolic piece machinery.
    pub(crate) fn integrate_window(
        x: State,
        t0: f64,
        rule: impl Fn(f64, f64) -> f64,
        params: &AgentParams,
        length: f64,
        t_end: f64,
        dt: f64,
    ) -> (f64, f64) {
        let mut t = t0;
        let mut p = x.p;
        let mut v = x.v;
        let mut t_in = f64::INFINITY;
        let mut t_out = f64::INFINITY;
        if p > 0.0 {
            t_in = t0;
        }
        if p >= length {
            t_out = t0;
        }
        while t < t_end && (t_in.is_infinite() || t_out.is_infinite()) {
            let a = rule(t, v).clamp(-params.a_dec, params.a_acc);
            let v_next = (v + a * dt).clamp(0.0, params.v_max);
            let p_next = p + 0.5 * (v + v_next) * dt;
            if t_in.is_infinite() && p_next > 0.0 {
                let frac = if p_next - p > 0.0 { (0.0 - p) / (p_next - p) } else { 1.0 };
                t_in = t + frac * dt;
            }
            if t_out.is_infinite() && p_next >= length {
                let frac = if p_next - p > 0.0 { (length - p) / (p_next - p) } else { 1.0 };
                t_out = t + frac * dt;
            }
            p = p_next;
            v = v_next;
            t += dt;
        }
        (t_in, t_out)
    }

    #[test]
    fn state_at_clips_at_vmax() {
        let p = params();
        let traj = acc_trajectory(State::new(-200.0, 15.0), 0.0, &p);
        let s = traj.state_at(5.0 / 3.0);
        assert_close(s.p, -170.0 - 5.0 / 6.0, 1e-9);
        assert_close(s.v, 20.0, 1e-12);
        // past the clip instant the velocity stays at v_max
        let s2 = traj.state_at(3.0);
        assert_close(s2.v, 20.0, 1e-12);
        assert_close(s2.p, -170.0 - 5.0 / 6.0 + 20.0 * (3.0 - 5.0 / 3.0), 1e-9);
    }

    #[test]
    fn state_at_identity_at_start() {
        let p = params();
        let traj = clipped_trajectory(State::new(0.0, 10.0), 2.0, &[(4.0, 0.0)], &p);
        let s = traj.state_at(2.0);
        assert_close(s.p, 0.0, 0.0);
        assert_close(s.v, 10.0, 0.0);
    }

    #[test]
    fn state_at_clamps_at_standstill() {
        let p = params();
        let traj = dec_trajectory(State::new(-200.0, 15.0), 0.0, &p);
        let s = traj.state_at(3.75);
        assert_close(s.p, -171.875, 1e-9);
        assert_close(s.v, 0.0, 0.0);
        let s2 = traj.state_at(100.0);
        assert_close(s2.p, -171.875, 1e-9);
        assert_close(s2.v, 0.0, 0.0);
    }

    #[test]
    #[should_panic]
    fn state_at_before_start_panics() {
        let p = params();
        let traj = acc_trajectory(State::new(-10.0, 5.0), 1.0, &p);
        let _ = traj.state_at(0.5);
    }

    #[test]
    fn acc_trajectory_entry_times() {
        let p = params();
        let w = acc_trajectory(State::new(-200.0, 15.0), 0.0, &p).entry_exit(p.length);
        assert_close(w.t_in, 10.0 + 25.0 / 120.0, 1e-9); // 10.2083
        assert_close(w.t_out, w.t_in + 0.25, 1e-9);
        let w2 = acc_trajectory(State::new(-200.0, 20.0), 0.0, &p).entry_exit(p.length);
        assert_close(w2.t_in, 10.0, 1e-12);
        let w3 = acc_trajectory(State::new(0.0, 20.0), 0.0, &p).entry_exit(p.length);
        assert_close(w3.t_in, 0.0, 0.0);
    }

    #[test]
    fn dec_trajectory_entry_times() {
        let p = params();
        let w = dec_trajectory(State::new(-200.0, 15.0), 0.0, &p).entry_exit(p.length);
        assert!(w.t_in.is_infinite() && w.t_out.is_infinite());
        let w2 = dec_trajectory(State::new(-10.0, 0.0), 0.0, &p).entry_exit(p.length);
        assert!(w2.t_in.is_infinite());
        // stops past the boundary: crosses while braking
        let w3 = dec_trajectory(State::new(-1.0, 4.0), 0.0, &p).entry_exit(p.length);
        assert_close(w3.t_in, 1.0 - (2.0f64).sqrt() / 2.0, 1e-9);
    }

    #[test]
    fn past_resource_conventions() {
        let p = params();
        let traj = clipped_trajectory(State::new(7.0, 3.0), 1.0, &[(1.0, 0.0)], &p);
        let w = traj.entry_exit(p.length);
        assert_close(w.t_in, 1.0, 0.0);
        assert_close(w.t_out, 1.0, 0.0);
    }

    #[test]
    fn grazing_stop_at_boundary_never_enters() {
        let p = params();
        // stop distance exactly reaches p = 0
        let traj = dec_trajectory(State::new(-2.0, 4.0), 0.0, &p).entry_exit(p.length);
        assert!(traj.t_in.is_infinite());
        assert!(!can_stop_before(State::new(-1.9, 4.0), &p));
        assert!(can_stop_before(State::new(-2.0, 4.0), &p));
    }

    #[test]
    fn dec_acc_trajectory_matches_hand_computation() {
        let p = params();
        let traj = dec_acc_trajectory(State::new(-200.0, 15.0), 0.0, 1.0, &p);
        let s = traj.state_at(1.0);
        assert_close(s.p, -187.0, 1e-9);
        assert_close(s.v, 11.0, 1e-9);
        // throttle covers 46.5 up to v_max, remaining 140.5 at cruise speed
        let w = traj.entry_exit(p.length);
        assert_close(w.t_in, 1.0 + 3.0 + 140.5 / 20.0, 1e-9);
        let (ti, _) = integrate_window(
            State::new(-200.0, 15.0),
            0.0,
            |t, v| if t < 1.0 { if v > 0.0 { -4.0 } else { 0.0 } } else if v < 20.0 { 3.0 } else { 0.0 },
            &p,
            p.length,
            40.0,
            1e-5,
        );
        assert_close(w.t_in, ti, 1e-4);
    }

    #[test]
    fn dec_acc_degenerate_switch_equals_acc() {
        let p = params();
        let x = State::new(-200.0, 15.0);
        let a = acc_trajectory(x, 0.0, &p);
        let da = dec_acc_trajectory(x, 0.0, 0.0, &p);
        for t in [0.0, 0.7, 5.0 / 3.0, 4.0, 30.0] {
            let (sa, sd) = (a.state_at(t), da.state_at(t));
            assert_close(sd.p, sa.p, 1e-9);
            assert_close(sd.v, sa.v, 1e-9);
        }
    }

    #[test]
    fn dec_acc_holds_standstill_until_late_switch() {
        let p = params();
        let x = State::new(-200.0, 15.0);
        let traj = dec_acc_trajectory(x, 0.0, 10.0, &p);
        let s = traj.state_at(5.0); // stopped at 3.75, holding
        assert_close(s.p, -171.875, 1e-9);
        assert_close(s.v, 0.0, 0.0);
        let s2 = traj.state_at(11.0);
        assert_close(s2.v, 3.0, 1e-9);
    }

    #[test]
    fn acc_dec_trajectory_cases() {
        let p = params();
        let x = State::new(-200.0, 15.0);
        // switch at t0 is max braking
        let ad0 = acc_dec_trajectory(x, 0.0, 0.0, &p);
        let d = dec_trajectory(x, 0.0, &p);
        for t in [0.0, 2.0, 3.75, 10.0] {
            assert_close(ad0.state_at(t).p, d.state_at(t).p, 1e-9);
        }
        // infinite switch is max throttle
        let adi = acc_dec_trajectory(x, 0.0, f64::INFINITY, &p);
        let a = acc_trajectory(x, 0.0, &p);
        for t in [0.0, 2.0, 10.0] {
            assert_close(adi.state_at(t).p, a.state_at(t).p, 1e-9);
        }
        // clip at v_max before the switch
        let ad = acc_dec_trajectory(x, 0.0, 2.0, &p);
        let s = ad.state_at(2.0);
        assert_close(s.v, 20.0, 1e-12);
        assert_close(s.p, -164.0 - 1.0 / 6.0, 1e-9);
        assert!(ad.state_at(3.0).v < 20.0);
    }

    #[test]
    fn can_stop_before_examples() {
        let p = params();
        assert!(can_stop_before(State::new(-200.0, 15.0), &p));
        assert!(can_stop_before(State::new(0.0, 0.0), &p));
        assert!(!can_stop_before(State::new(-1.0, 4.0), &p));
    }

    #[test]
    fn dec_acc_for_entry_inverts_forward_computation() {
        let p = params();
        let x = State::new(-200.0, 15.0);
        let target = 1.0 + 3.0 + 140.5 / 20.0;
        let traj = dec_acc_for_entry(x, 0.0, target, &p).expect("achievable entry");
        assert_close(traj.entry_exit(p.length).t_in, target, 1e-6);
        // recovered switch time
        let s = dec_acc_switch_for_entry(x, 0.0, target, &p).unwrap();
        assert_close(s, 1.0, 1e-6);
    }

    #[test]
    fn dec_acc_for_entry_boundaries() {
        let p = params();
        let x = State::new(-200.0, 15.0);
        let (acc_in, _) = acc_entry(x, 0.0, &p);
        let traj = dec_acc_for_entry(x, 0.0, acc_in, &p).unwrap();
        assert_close(traj.entry_exit(p.length).t_in, acc_in, 1e-9);
        // earlier than max throttle: impossible
        assert!(dec_acc_for_entry(x, 0.0, 5.0, &p).is_none());
        // the agent can stop short, so arbitrarily late entries are achievable
        let late = dec_acc_for_entry(x, 0.0, 500.0, &p).unwrap();
        assert_close(late.entry_exit(p.length).t_in, 500.0, 1e-6);
    }

    #[test]
    fn acc_dec_for_entry_mirrors() {
        let p = params();
        // cannot stop short from here: every entry between the two extremes works
        let x = State::new(-20.0, 15.0);
        let (acc_in, _) = acc_entry(x, 0.0, &p);
        let de = dec_entry(x, 0.0, &p);
        assert!(de.is_finite());
        for target in [acc_in, 0.5 * (acc_in + de), de] {
            let traj = acc_dec_for_entry(x, 0.0, target, &p).expect("achievable");
            assert_close(traj.entry_exit(p.length).t_in, target, 1e-6);
        }
        assert!(acc_dec_for_entry(x, 0.0, de + 1.0, &p).is_none());
    }

    #[test]
    fn acc_dec_for_entry_gap_when_stopping_short() {
        let p = params();
        let x = State::new(-200.0, 15.0);
        let (acc_in, _) = acc_entry(x, 0.0, &p);
        // entries just above the max-throttle entry are reachable
        let t = acc_dec_for_entry(x, 0.0, acc_in + 0.5, &p).expect("achievable");
        assert_close(t.entry_exit(p.length).t_in, acc_in + 0.5, 1e-6);
        // far beyond the finite supremum the throttle-then-brake family
        // cannot enter at all (it stops short instead)
        assert!(acc_dec_for_entry(x, 0.0, 200.0, &p).is_none());
    }

    #[test]
    fn scalar_forms_match_trajectory_path() {
        let p = params();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let x = State::new(rng.gen_range(-300.0..0.0), rng.gen_range(0.0..=20.0));
            let s = rng.gen_range(0.0..30.0);
            let da = dec_acc_trajectory(x, 0.0, s, &p).entry_exit(p.length);
            let (ti, to) = dec_acc_window(x, 0.0, s, &p, p.length);
            if da.t_in.is_finite() {
                assert_close(ti, da.t_in, 1e-9);
                assert_close(to, da.t_out, 1e-9);
                assert_close(dec_acc_entry_time(x, 0.0, s, &p), da.t_in, 1e-9);
            } else {
                assert!(ti.is_infinite());
            }
            let ad = acc_dec_trajectory(x, 0.0, s, &p).entry_exit(p.length);
            let (ti2, to2) = acc_dec_window(x, 0.0, s, &p, p.length);
            if ad.t_in.is_finite() {
                assert_close(ti2, ad.t_in, 1e-9);
                assert_close(to2, ad.t_out, 1e-9);
                assert_close(acc_dec_entry_time(x, 0.0, s, &p), ad.t_in, 1e-9);
            } else {
                assert!(ti2.is_infinite());
            }
        }
    }

    #[test]
    fn entry_velocity_closed_form_matches_bisection() {
        let p = params();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = State::new(rng.gen_range(-250.0..-0.01), rng.gen_range(0.0..=20.0));
            let (acc_in, _) = acc_entry(x, 0.0, &p);
            let de = dec_entry(x, 0.0, &p);
            let span_hi = if de.is_finite() { de } else { acc_in + 60.0 };
            let target = rng.gen_range(acc_in..=span_hi);
            let w = dec_acc_entry_velocity(x, 0.0, target, &p);
            let traj = dec_acc_for_entry(x, 0.0, target, &p);
            match (w, traj) {
                (Some(w), Some(traj)) => {
                    let t_in = traj.entry_exit(p.length).t_in;
                    let v_at = traj.state_at(t_in).v;
                    assert_close(w, v_at, 1e-5);
                }
                (None, None) => {}
                (w, t) => panic!(
                    "closed form and bisection disagree at x={x:?} target={target}: {w:?} vs {:?}",
                    t.map(|t| t.entry_exit(p.length).t_in)
                ),
            }
        }
    }

    #[test]
    fn entry_velocity_rejects_unreachable_targets() {
        let p = params();
        let x = State::new(-200.0, 15.0);
        let (acc_in, _) = acc_entry(x, 0.0, &p);
        assert!(dec_acc_entry_velocity(x, 0.0, acc_in - 0.1, &p).is_none());
        assert!(dec_acc_entry_velocity(x, 0.0, f64::INFINITY, &p).is_none());
        // generous deadline: enters at cruise speed
        assert_close(dec_acc_entry_velocity(x, 0.0, 100.0, &p).unwrap(), 20.0, 1e-9);
    }

    #[test]
    fn clipped_trajectory_respects_bounds() {
        let p = params();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = State::new(rng.gen_range(-100.0..0.0), rng.gen_range(0.0..=20.0));
            let spans: Vec<(f64, f64)> = (0..6)
                .map(|_| (rng.gen_range(0.0..4.0), rng.gen_range(-4.0..=3.0)))
                .collect();
            let traj = clipped_trajectory(x, 0.0, &spans, &p);
            let mut t = 0.0;
            while t < 25.0 {
                let s = traj.state_at(t);
                assert!(s.v >= -1e-9 && s.v <= 20.0 + 1e-9, "velocity out of bounds: {s:?}");
                t += 0.37;
            }
        }
    }

    #[test]
    fn segments_between_reassembles_states() {
        let p = params();
        let x = State::new(-100.0, 12.0);
        let traj = dec_acc_trajectory(x, 0.0, 2.5, &p);
        let segs = traj.segments_between(1.0, 6.0);
        let rebuilt = Trajectory::from_segments(1.0, traj.state_at(1.0), segs, TerminalRule::Hold);
        for t in [1.0, 2.0, 3.3, 5.9] {
            assert_close(rebuilt.state_at(t).p, traj.state_at(t).p, 1e-9);
            assert_close(rebuilt.state_at(t).v, traj.state_at(t).v, 1e-9);
        }
    }
}
