//! Default numerical parameters shared by every subcommand.
//!
//! | flag          | default   | meaning                                       |
//! |---------------|-----------|-----------------------------------------------|
//! | `--tgrid`     | 256       | quasimomentum samples on `[0, pi]` or `(-pi, pi)` |
//! | `--nmax`      | 10        | bands `|n| <= nmax`                           |
//! | `--tol`       | 1e-10     | integrator tolerance                          |
//! | `--eps-sing`  | 1e-3      | exclusion radius around singular quasimomenta |
//! | `--Q`         | 10000     | denominator bound for the odd-integer search  |
//! | `--nx`        | 256       | samples per unit length in the expansion      |
//! | `--cross-tol` | 1e-3      | Bloch/direct agreement relative to `||f||`    |
//! | `--interval`  | -2 2      | reconstruction interval                       |

pub const TGRID: usize = 256;
pub const NMAX: usize = 10;
pub const TOL: f64 = 1e-10;
pub const EPS_SING: f64 = 1e-3;
pub const Q: u64 = 10_000;
pub const NX: usize = 256;
pub const CROSS_TOL: f64 = 1e-3;
pub const INTERVAL: [f64; 2] = [-2.0, 2.0];
/// Singularity search range used by `expand` when no report is given.
pub const SING_NMAX: usize = 10;
