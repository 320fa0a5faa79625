//! Minimax scheduling for two inertially constrained agents that share a
//! one-lane resource.
//!
//! One agent (agent 0) is controlled; the other (agent 1) follows an unknown
//! trajectory subject only to velocity and acceleration bounds. Agent 0 must
//! cross the resource interval `(0, L)` on its own axis without ever occupying
//! it at the same time as agent 1, while keeping the scheduling cost
//! `v_max * t_in + (v_max - v(t_in))^2 / (2 a_acc)` low.
//!
//! The crate is organised as a stack:
//!
//! * [`kinematics`] — closed-form constant-acceleration trajectory primitives
//!   and the extremal trajectory families (max-brake, max-throttle and the
//!   one-switch combinations).
//! * [`uncertainty`] — set-valued situation information: everything the
//!   controlled agent can conclude about the other agent's occupation window.
//! * [`valuation`] — scheduling cost, manageable cost, the state value
//!   function and its worst case over future information.
//! * [`policy`] — the per-step minimax decision plus the queueing/following
//!   baseline policies.
//! * [`simulation`] — two-agent episode engine, Monte-Carlo batches and
//!   parameter sweeps.
//! * [`oracle`] — brute-force reference implementations used by tests and the
//!   `oracle` CLI subcommand to validate every closed form.

pub mod kinematics;
pub mod oracle;
pub mod policy;
pub mod simulation;
pub mod uncertainty;
pub mod valuation;

pub use kinematics::{AgentParams, OccupationWindow, Segment, State, TerminalRule, Trajectory};
