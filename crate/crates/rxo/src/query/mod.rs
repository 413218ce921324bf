//! The O-view engine: any non-terminal path resolves to a relation whose
//! attributes are the path's scalar post-paths; SELECTs compile onto the
//! kernel algebra; calculated realizations are evaluated per object.

mod calc;
mod eval;
mod oview;
mod select;

use thiserror::Error;

pub use calc::{component_rows, component_value, eval_calculated, CalculatedValue, SetRow, SetRowSet};
pub use eval::{expr_scalar, walk_parent, EvalCtx, ParentEntities};
pub use oview::{oview_header, resolve_oview, OView};
pub use select::{compile_selection, compile_selection_in, evaluate_select, select_scalar, Selection};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("path `{0}` ends at a scalar and does not name a relation")]
    TerminalScalarPath(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("`{class}.{member}` has no realization")]
    UnrealizedComponent { class: String, member: String },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("{0}")]
    AggregateMisuse(String),
    #[error("reference expansion of `{0}` exceeds the depth bound")]
    CycleDepthExceeded(String),
    #[error("expected a single scalar value: {0}")]
    ScalarExpected(String),
    #[error("procedure for `{class}.{member}` finished without RETURN")]
    ProcedureNoReturn { class: String, member: String },
    #[error("evaluation recursion limit exceeded at `{0}`")]
    RecursionLimit(String),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("{0}")]
    Unsupported(String),
}

/// Reference expansion bound for O-view headers.
pub(crate) const REF_EXPANSION_DEPTH: u32 = 8;
/// Guard against mutually recursive calculated realizations.
pub(crate) const EVAL_DEPTH_LIMIT: u32 = 64;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Relation, Scalar};
    use crate::parser::{parse_expression, parse_path, parse_statement};
    use crate::testkit::{d0, d0_schema, oid_by};

    fn names(relation: &Relation) -> Vec<&str> {
        relation.header().names().collect()
    }

    #[test]
    fn turnover_cntr_oview_header() {
        let db = d0();
        let ctx = EvalCtx::read_only(&db);
        let path = parse_path("GOODS.Turnover.Cntr").unwrap();
        let oview = resolve_oview(&ctx, &path).unwrap();
        let header = names(&oview.relation);
        assert!(header.contains(&".Name"));
        assert!(header.contains(&".Bank.Name"));
        assert!(header.contains(&".ID"));
        assert!(header.contains(&".#"));
        assert!(header.contains(&".Bank.#"));
    }

    #[test]
    fn context_member_oview() {
        let db = d0();
        let mut ctx = EvalCtx::read_only(&db);
        ctx.host = Some(("DOCS".into(), None));
        let path = parse_path("Cntr.Bank").unwrap();
        let oview = resolve_oview(&ctx, &path).unwrap();
        assert!(names(&oview.relation).contains(&".Name"));
        // every doc's contractor banks at TheBank
        assert_eq!(oview.relation.len(), 1);
    }

    #[test]
    fn scalar_terminal_is_rejected() {
        let db = d0();
        let ctx = EvalCtx::read_only(&db);
        let path = parse_path("BANKS.Name").unwrap();
        let err = resolve_oview(&ctx, &path).unwrap_err();
        assert!(matches!(
            err,
            crate::error::Error::Query(QueryError::TerminalScalarPath(_))
        ));
    }

    #[test]
    fn selection_by_scalar_filter() {
        let db = d0();
        let pred = parse_expression(".Art = \"A1\"").unwrap();
        let selection = compile_selection(&db, "GOODS", &pred).unwrap();
        assert_eq!(selection.oids, vec![oid_by(&db, "GOODS", "Art", "A1")]);
    }

    #[test]
    fn reverse_selection_is_existential() {
        let db = d0();
        let pred = parse_expression(".Turnover.Cntr.Name = \"TheShop\"").unwrap();
        let selection = compile_selection(&db, "GOODS", &pred).unwrap();
        let a1 = oid_by(&db, "GOODS", "Art", "A1");
        let a2 = oid_by(&db, "GOODS", "Art", "A2");
        assert_eq!(selection.oids, vec![a1, a2]);
    }

    #[test]
    fn unsatisfiable_selection_is_empty() {
        let db = d0();
        let pred = parse_expression(".Art = \"\"").unwrap();
        let selection = compile_selection(&db, "GOODS", &pred).unwrap();
        assert!(selection.oids.is_empty());
    }

    #[test]
    fn select_names_through_selection_path() {
        let db = d0();
        let ctx = EvalCtx::read_only(&db);
        let stmt =
            parse_statement("SELECT .Name, .Bank.Name FROM GOODS[.Art = \"A1\"].Turnover.Cntr;")
                .unwrap();
        let crate::parser::Stmt::Select(select) = stmt else { panic!() };
        let result = evaluate_select(&ctx, &select).unwrap();
        assert_eq!(names(&result), vec![".Name", ".Bank.Name"]);
        let rows = result.canonical();
        assert_eq!(
            rows.tuples(),
            &[
                vec![Scalar::str("OtherCo"), Scalar::str("TheBank")],
                vec![Scalar::str("TheShop"), Scalar::str("TheBank")],
            ]
        );
    }

    #[test]
    fn turnover_realization_for_a1() {
        let db = d0();
        let a1 = oid_by(&db, "GOODS", "Art", "A1");
        let co1 = oid_by(&db, "CONTRACTORS", "ID", "CoID001");
        let co2 = oid_by(&db, "CONTRACTORS", "ID", "CoID002");
        let CalculatedValue::Rows(rows) = eval_calculated(&db, "GOODS", a1, "Turnover").unwrap()
        else {
            panic!("expected rows")
        };
        let rows = rows.canonical();
        assert_eq!(
            rows.tuples(),
            &[
                vec![Scalar::str("D1"), Scalar::Ref(co1), Scalar::Integer(5)],
                vec![Scalar::str("D2"), Scalar::Ref(co2), Scalar::Integer(7)],
            ]
        );
    }

    #[test]
    fn pieces_procedure_values() {
        let db = d0();
        let a1 = oid_by(&db, "GOODS", "Art", "A1");
        let a2 = oid_by(&db, "GOODS", "Art", "A2");
        let CalculatedValue::Scalar(pieces) = eval_calculated(&db, "GOODS", a1, "Pieces").unwrap()
        else {
            panic!("expected a scalar")
        };
        assert_eq!(pieces, Scalar::Integer(12));
        let CalculatedValue::Scalar(pieces) = eval_calculated(&db, "GOODS", a2, "Pieces").unwrap()
        else {
            panic!("expected a scalar")
        };
        assert_eq!(pieces, Scalar::Integer(3));
    }

    #[test]
    fn pieces_is_zero_without_docs() {
        let mut db = d0();
        crate::engine::run_source(&mut db, "NEW GOODS WITH SET .Art := \"A9\";").unwrap();
        let a9 = oid_by(&db, "GOODS", "Art", "A9");
        let CalculatedValue::Scalar(pieces) = eval_calculated(&db, "GOODS", a9, "Pieces").unwrap()
        else {
            panic!("expected a scalar")
        };
        assert_eq!(pieces, Scalar::Integer(0));
    }

    #[test]
    fn eval_calculated_rejects_stored_members() {
        let db = d0();
        let a1 = oid_by(&db, "GOODS", "Art", "A1");
        let err = eval_calculated(&db, "GOODS", a1, "Art").unwrap_err();
        assert!(matches!(
            err,
            crate::error::Error::Query(QueryError::UnrealizedComponent { .. })
        ));
    }

    #[test]
    fn select_over_empty_extent_keeps_header() {
        let db = d0_schema();
        let ctx = EvalCtx::read_only(&db);
        let stmt = parse_statement("SELECT .Name, .Bank.Name FROM GOODS.Turnover.Cntr;").unwrap();
        let crate::parser::Stmt::Select(select) = stmt else { panic!() };
        let result = evaluate_select(&ctx, &select).unwrap();
        assert!(result.is_empty());
        assert_eq!(names(&result), vec![".Name", ".Bank.Name"]);
    }

    #[test]
    fn aggregate_misuse_detected() {
        let db = d0();
        let ctx = EvalCtx::read_only(&db);
        let stmt =
            parse_statement("SELECT .DocN, SUM(.Items.Pieces) FROM DOCS;").unwrap();
        let crate::parser::Stmt::Select(select) = stmt else { panic!() };
        let err = evaluate_select(&ctx, &select).unwrap_err();
        assert!(matches!(
            err,
            crate::error::Error::Query(QueryError::AggregateMisuse(_))
        ));
    }
}
