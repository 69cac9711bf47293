//! Exact computations with Laplacian eigenfunctions on homogeneous and
//! semi-homogeneous trees: invariant Hermitian forms, their signatures, the
//! unitarity obstruction on the non-tempered range, and explicit synthesis of
//! eigenfunctions from translates of the spherical function.

pub mod decomposition;
pub mod error;
pub mod forms;
pub mod group;
pub mod linalg;
pub mod scalar;
pub mod spectral;
pub mod synthesis;
pub mod tree;

pub use error::{Error, Result};
pub use scalar::{parse_rational, rat, Gaussian, Rational, Scalar};
pub use spectral::{eigen_defects, is_eigen, laplacian_apply, radial_eigen, two_laplacian_apply, EigenFunction};
pub use tree::{build_ball, Lattice, PathAddress, TreeBall, TreeShape};
pub use decomposition::{basis_hn, peel_blocks, peel_decompose, Decomposition};
pub use forms::{assemble_q, eval_q, gram, signature_report, span_fh_rigidity, truncated_form_solver, BlockForm, GramMatrix};
pub use group::{act, reach, swap, Automorphism};
pub use linalg::{PivotStrategy, Signature};
pub use synthesis::{synthesize, TranslateCombination};
