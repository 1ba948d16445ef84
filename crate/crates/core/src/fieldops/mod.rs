//! Grids, the unitary Fourier transform, the elementary operators and the
//! exact propagator identities.

pub mod gaussian;
pub mod grid;
pub mod identities;

pub use gaussian::{gaussian_propagate, ComplexGaussian, Op};
pub use grid::{
    chirp_mul, chirp_mul_refined, dilate, dilate_to, dilation_factor, free_propagate, quadratic_phase, resample, spectral_pad,
    unitary_fft, ComplexField, Direction, SpectralGrid, MAX_GRID_POINTS, NYQUIST_FRACTION,
};
pub use identities::{
    abc_coefficients, factorization_residual, lens_identity_residual, mdfm_apply, mdfm_ops, ABCCoefficients,
};
