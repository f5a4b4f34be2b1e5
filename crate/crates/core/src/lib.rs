//! Sparse parity learning over GF(2).
//!
//! * [`gf2`]: packed bit vectors and affine subspaces in reduced row echelon form.
//! * [`cover`]: random covering families over a partition of the coordinates.
//! * [`learner`]: the subspace-cover mistake-bound learner.
//! * [`pac`]: conversion of mistake-bound learners into PAC learners.
//! * [`baselines`]: Gaussian elimination, explicit halving and meet-in-the-middle.
//! * [`noisy`]: learning with label noise by enumerating flip sets.
//! * [`oracle`]: example sources and the example-stream file format.
//! * [`harness`]: experiment runners and CSV/JSON reports.

pub mod baselines;
pub mod cover;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod learner;
pub mod noisy;
pub mod oracle;
pub mod pac;

pub use baselines::{gauss_learn, mitm_learn, CandidateSet, GaussOutcome};
pub use cover::{
    binom, family_size_m, ratio_bound_report, sample_family, CoverFamily, CoverParams, Coverage, RatioReport,
};
pub use error::{Error, Result};
pub use gf2::{AffineSpace, BitVector, Reduction};
pub use learner::{OnlineLearner, SubspaceChart};
pub use noisy::{entropy, noisy_learn, FlipSets, InnerLearner, MitmInner, NoisyOutcome, NoisyParams, PacOnlineInner};
pub use oracle::{gen_hidden, ExampleSource, Examples, LabeledExample, Noise};
pub use pac::{pac_learn, MistakeBoundLearner, PacOutcome, PacParams, Status};
