//! Coupling profile and field-correlation kernels.

pub mod correlation;
pub mod displacement;
pub mod potential;
pub mod radial;
pub mod table;

pub use correlation::{eval_g, eval_g_with, eval_m, eval_m_c, eval_v, eval_v_c, g_small_k_limit, M_TAIL, V_TAIL};
pub use displacement::{eval_ab, eval_ab_weight, eval_psi, grad_kernel, hess_apply, DisplacementSeries, Vec3};
pub use potential::{CouplingConstants, Profile, RadialPotential};
pub use radial::{RadialSeries, RadialWeight};
pub use table::{KernelTable, TailDescriptor};
