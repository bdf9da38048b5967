//! Generalized Hartree-Fock theory over fermionic Gaussian states.
//!
//! The crate is organised bottom-up:
//!
//! * [`majorana`] compiles Dirac-operator term lists with up to two-body
//!   interactions into the Majorana form `H = i Σ T_kl c_k c_l + Σ U_klmn c_k c_l c_m c_n + E0`.
//! * [`gaussian`] holds the covariance-matrix state representation, Wick
//!   expectation values, and the mean-field maps `h3`/`h6`.
//! * [`dynamics`] integrates the real-time and imaginary-time covariance flows.
//! * [`excitation`] linearizes the equation of motion around a stationary state
//!   and extracts excitation frequencies.
//! * [`hubbard`] is the translation-invariant 2D Hubbard front end with the
//!   per-momentum reduction of the linearized operator.
//! * [`oracle`] is a brute-force Fock-space implementation used to check all of
//!   the above on small systems.
//!
//! Majorana convention: for Dirac modes `a_j`, `j = 0..M`,
//! `c_j = a†_j + a_j` and `c_{j+M} = -i (a†_j - a_j)`. The covariance matrix is
//! `Γ_kl = (i/2) <[c_k, c_l]>`, so that `<c_k c_l> = δ_kl - i Γ_kl`.

pub mod dynamics;
pub mod error;
pub mod excitation;
pub mod gaussian;
pub mod hubbard;
pub mod io;
pub mod linalg;
pub mod majorana;
pub mod oracle;
pub mod verify;

pub use error::{Error, Result};
pub use gaussian::CovarianceMatrix;
pub use linalg::Antisym;
pub use majorana::{DiracTermList, MajoranaHamiltonian, ModeLayout};
