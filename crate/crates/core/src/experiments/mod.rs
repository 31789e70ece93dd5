//! Measurements built on the spectral kernels: maximal functions, convergence
//! diagnostics, the modulated counterexample family, scaling fits and
//! smoothing estimators.

mod counterexample;
mod fit;
mod lee;
mod maximal;
mod scaling;
mod smoothing;

pub use counterexample::{
    build_counterexample, counterexample_scaling, counterexample_spacing, maximal_ratio, Counterexample,
    CounterexampleGrid, CounterexamplePoint, CounterexampleReport, MaximalRatio,
};
pub use fit::{rate_fit, RateFit};
pub use lee::{lee_inequality_check, lee_optimal_alpha, LeeCheck, LEE_CONSTANT};
pub use maximal::{
    linear_convergence_diag, max_active_wavenumber, maximal_function, nonlinear_truncation_diag, MaximalAccumulator,
    TimeGrid,
};
pub use scaling::{
    fit_gaussian_tail, strichartz_admissible_p, strichartz_ratio, strichartz_scaling, tail_scaling, GaussianTailFit,
    StrichartzCorpus, StrichartzReport, TailScalingPoint, MIN_TAIL_SAMPLES,
};
pub use smoothing::{shell_slope, smoothing_estimate, ShellSlope, SmoothingData, SmoothingReport};
