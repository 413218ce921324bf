//! The relational machine: typed scalars, relations, relational-algebra
//! operators, keyed stored relations, and mutation with constraint
//! enforcement.

pub mod algebra;
pub mod error;
pub mod expr;
pub mod relation;
pub mod scalar;
pub mod storage;

pub use algebra::{r_aggregate, r_join, r_project, r_select, r_union, rename_attrs, AggFn, Aggregate};
pub use error::KernelError;
pub use expr::{ArithOp, CmpOp, ScalarExpr};
pub use relation::{Attribute, ForeignKey, Header, Relation, StoredRelation, Tuple};
pub use scalar::{format_datetime, Kind, Oid, Scalar};
pub use storage::{Mutation, Storage};
