//! Numerics for variable-exponent Lebesgue spaces `L^{p(·)}` and the Zygmund
//! spaces `L(log L)^α`, `exp(L^α)` on finite-measure domains.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: piecewise-constant functions, distribution functions and
//!   decreasing rearrangements;
//! - [`lambert`]: both real branches of the Lambert W function;
//! - [`exponents`]: exponent functions, their duals and near-one level sets;
//! - [`norms`]: modulars, Luxemburg and Orlicz norms;
//! - [`embeddings`]: checkers for the sharp embedding conditions and the
//!   witness integrals behind them;
//! - [`maximal`]: Hardy–Littlewood and strong maximal operators;
//! - [`io`] and [`selftest`]: CSV plumbing and a seeded property suite.
//!
//! ```
//! use vexp::{luxemburg_norm, ExponentFunction, Mesh, SampledFunction};
//!
//! let mesh = Mesh::uniform(1.0, 100_000).unwrap();
//! let f = SampledFunction::from_fn(mesh.clone(), |x| x).unwrap();
//! let p = ExponentFunction::constant(mesh, 2.0).unwrap();
//! let norm = luxemburg_norm(&f, &p, 1e-10).unwrap();
//! assert!((norm.value - 3f64.sqrt().recip()).abs() < 1e-3);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation; index loops
// mirror the formulas they implement
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod embeddings;
pub mod error;
pub mod exponents;
pub mod grid;
pub mod io;
pub mod lambert;
pub mod maximal;
pub mod norms;
pub mod numeric;
pub mod selftest;

pub use embeddings::{
    check_condition_a, check_condition_b, check_exp_embedding_condition, divergence_witness,
    embedding_constant_estimate, i_lambda_integral, EmbeddingReport, LiminfReport, LiminfVerdict, TestFamily, Verdict,
    WitnessTrace,
};
pub use error::{Result, VexpError};
pub use exponents::{
    dual_exponent, embedding_example_exponent, exponent_from_compact_set, lambda_exponent, lambda_level_set_radius,
    level_set_profile, levelset_prescribed_exponent, nonembedding_example_exponent, CompactSet, ExponentFunction,
    ExponentGrid, LambdaGrid, LevelSetProfile, LevelSetTarget, ThetaSpec,
};
pub use grid::{equimeasurable, Domain, DomainKind, Mesh, SampledFunction};
pub use lambert::{lambert_w, w_principal, w_principal_asymptotic, w_secondary, w_secondary_asymptotic, Branch};
pub use maximal::{hl_maximal, strong_maximal, wiener_ratio, GridFunction2D};
pub use norms::{exp_zygmund_norm, luxemburg_norm, modular, orlicz_norm, NormResult, YoungFunction};

/// The guide under `book/`, compiled here so its snippets run as doctests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/rearrangements.md")]
    pub mod rearrangements {}
    #[doc = include_str!("../../../book/src/lambert.md")]
    pub mod lambert {}
    #[doc = include_str!("../../../book/src/exponents.md")]
    pub mod exponents {}
    #[doc = include_str!("../../../book/src/norms.md")]
    pub mod norms {}
    #[doc = include_str!("../../../book/src/embeddings.md")]
    pub mod embeddings {}
    #[doc = include_str!("../../../book/src/maximal.md")]
    pub mod maximal {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
