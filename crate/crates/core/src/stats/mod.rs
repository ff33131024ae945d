//! Distribution functions, quadrature and covariance kernels.

pub mod chi2;
pub mod cov;
pub mod gamma;
pub mod normal;
pub mod quadrature;

pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf, noncentral_chi2_sf};
pub use cov::{
    hac_covariance, outer_covariance, quad_form, solve_spd, CovMatrix, HacConfig, HacEstimate,
    HacWeights,
};
pub use normal::{folded_normal_mean, normal_cdf, normal_pdf};
