//! Private information retrieval from linearly coded distributed storage,
//! private against any `t` colluding servers.
//!
//! A database of `m` files is split into rows of length `k` and encoded
//! with a storage code `C` of length `n`; server `j` keeps coordinate `j`
//! of every encoded row. A retrieval code `D` supplies query randomness.
//! File `i` is then retrieved at rate `(d(C*D) - 1) / n`, and any set of
//! servers on which `D` restricts to a full space learns nothing about `i`.

pub mod codes;
pub mod error;
pub mod finite_field;
pub mod grs;
pub mod linalg;
pub mod pir;
pub mod privacy_audit;
pub mod storage;

pub use codes::LinearCode;
pub use error::{Error, Result};
pub use finite_field::{FieldElement, FieldSpec};
pub use grs::{GeneratorForm, GrsSpec};
pub use linalg::MatrixFp;
pub use pir::{RetrievalTranscript, Sampler, SchemeOptions, SchemeParams};
pub use privacy_audit::{AuditReport, CollusionSet};
pub use storage::{Database, ServerNode};
