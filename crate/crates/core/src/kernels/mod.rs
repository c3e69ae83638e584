//! Input-side ANOVA kernels, the set kernel, bandwidth rules and the
//! marginal quantile transform.

mod input;
mod marginal;
pub mod quadrature;
mod set;

pub use input::{
    anovaize_gram, base_kernel, empirical_std, sobolev_kernel, AnovaKernel, BaseFamily,
    InputKernelFamily, InputKernelSpec,
};
pub use marginal::{quantile_transform, MarginalDistribution};
pub use set::{bandwidth_heuristic, set_kernel_gram, Bandwidth, OutputKernelSpec};
