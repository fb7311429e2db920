//! Numerical laboratory for zero-noise limits of ODEs whose drift jumps across
//! the hyperplane `H = {x_d = 0}`.
//!
//! The small-noise SDE `dX = b(t, X) dt + ε dW` with
//! `b = b⁺·1{x_d ≥ 0} + b⁻·1{x_d < 0}` is simulated, and its behaviour as
//! `ε → 0` is compared with the limits predicted by the signs of the normal
//! components `b_d^±` near the starting point:
//!
//! * repelling (`A1`): the limit picks one of the two branch solutions with
//!   probabilities `p± = ±b_d^± / (b_d⁺ − b_d⁻)`;
//! * one-sided (`A2±`): the limit follows the branch on the pushing side;
//! * attracting (`A3`, `A3±`): the limit slides along `H` with Filippov weights;
//! * tangential (`A4`): `(X̄, X_d/ε)` converges to a coupled limit system whose
//!   tangential part can be non-Markov.
//!
//! Modules: [`dsl`] (scenario files and expressions), [`field`] (drift
//! evaluation and regime classification), [`integrate`] (time stepping and
//! stopping times), [`predict`] (closed-form limits) and [`montecarlo`]
//! (ensembles, estimates and sweeps).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsl;
pub mod field;
pub mod integrate;
pub mod montecarlo;
pub mod predict;
