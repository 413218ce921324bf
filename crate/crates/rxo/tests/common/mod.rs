//! Shared test support: the D0 fixture, an independent object-graph oracle
//! (plain Rust over a plain model, no engine machinery), and generators for
//! randomized databases and loop-free methods.

#![allow(dead_code)]

use rxo::database::Database;
use rxo::engine::{execute, run_source, Outcome};
use rxo::kernel::{Oid, Relation, Scalar};
use rxo::parser::parse_statement;

// ---------------------------------------------------------------------------
// D0 fixture (bank TheBank; contractors TheShop/CoID001, OtherCo/CoID002;
// goods A1, A2; docs D1{TheShop, (A1,5)}, D2{OtherCo, (A1,7),(A2,2)},
// D3{TheShop, (A2,1)}).
// ---------------------------------------------------------------------------

pub const D0_SCHEMA: &str = r#"
CREATE CLASS BANKS ( Name STRING );
CREATE CLASS CONTRACTORS ( Name STRING, Bank BANKS, ID STRING ) KEY(ID);
CREATE CLASS GOODS
( Art STRING,
  Turnover SET OF ( DocN STRING, Cntr CONTRACTORS, Pieces INTEGER ) KEY(DocN),
  Pieces INTEGER
) KEY(Art);
CREATE CLASS DOCS
( DocN STRING, Date DATETIME, Comment STRING, Cntr CONTRACTORS,
  Items SET OF ( Art STRING, Pieces INTEGER ) KEY(Art),
  DoShip(inDate DATETIME)
) KEY(DocN)
REFERENCE Items(.Art) ON GOODS(.Art);
ALTER BANKS REALIZE Name AS STORED;
ALTER CONTRACTORS REALIZE Name, Bank, ID AS STORED;
ALTER GOODS REALIZE Art AS STORED;
ALTER DOCS REALIZE DocN, Date, Comment, Cntr, Items AS STORED;
ALTER GOODS REALIZE Turnover AS
  SELECT #g.DocN, #g.Cntr, SUM(#g.Items.Pieces) AS Pieces
  FROM DOCS #g
  WHERE #g.Items.Art = Art
  GROUP BY #g.DocN, #g.Cntr;
ALTER GOODS REALIZE Pieces AS
BEGIN
  DECLARE tmpPieces INTEGER;
  tmpPieces := SELECT SUM(#g.Items.Pieces) AS Pieces FROM DOCS #g WHERE #g.Items.Art = Art;
  IF (tmpPieces IS NULL) THEN tmpPieces := 0;
  RETURN tmpPieces;
END
ALTER DOCS REALIZE DoShip(inDate DATETIME) AS
BEGIN
  IF (Date IS NULL) THEN
  BEGIN
    Date := inDate;
    Comment := "Shipped!";
  END
END
"#;

pub const D0_DATA: &str = r#"
NEW BANKS WITH SET .Name := "TheBank";
NEW CONTRACTORS WITH SET .Name := "TheShop", .Bank := BANKS[.Name = "TheBank"], .ID := "CoID001";
NEW CONTRACTORS WITH SET .Name := "OtherCo", .Bank := BANKS[.Name = "TheBank"], .ID := "CoID002";
NEW GOODS WITH SET .Art := "A1";
NEW GOODS WITH SET .Art := "A2";
NEW DOCS WITH SET .DocN := "D1", .Cntr := CONTRACTORS[.ID = "CoID001"];
INSERT DOCS[.DocN = "D1"].Items VALUES ("A1", 5);
NEW DOCS WITH SET .DocN := "D2", .Cntr := CONTRACTORS[.ID = "CoID002"];
INSERT DOCS[.DocN = "D2"].Items VALUES ("A1", 7), ("A2", 2);
NEW DOCS WITH SET .DocN := "D3", .Cntr := CONTRACTORS[.ID = "CoID001"];
INSERT DOCS[.DocN = "D3"].Items VALUES ("A2", 1);
"#;

pub fn d0_schema() -> Database {
    let mut db = Database::new();
    run_source(&mut db, D0_SCHEMA).expect("D0 schema runs");
    db
}

pub fn d0() -> Database {
    let mut db = d0_schema();
    run_source(&mut db, D0_DATA).expect("D0 data loads");
    db
}

/// Runs one statement, panicking with context on failure.
pub fn run(db: &mut Database, source: &str) -> Outcome {
    let stmt = parse_statement(source).unwrap_or_else(|e| panic!("parse {source:?}: {e}"));
    execute(db, &stmt).unwrap_or_else(|e| panic!("execute {source:?}: {e}"))
}

/// Evaluates a query statement to its relation.
pub fn query(db: &Database, source: &str) -> Relation {
    let mut db = db.clone();
    match run(&mut db, source) {
        Outcome::Rows(relation) => relation,
        other => panic!("{source:?} did not produce rows: {other:?}"),
    }
}

/// The OID of the object of `class` whose stored string `attr` equals `value`.
pub fn oid_by(db: &Database, class: &str, attr: &str, value: &str) -> Oid {
    let root = db.catalog.storage(class).expect("storage").root.clone();
    let stored = db.storage.get(&root).expect("relation");
    let header = stored.relation.header();
    let oid_idx = header.position("#oid").unwrap();
    let attr_idx = header.position(attr).unwrap();
    stored
        .relation
        .tuples()
        .iter()
        .find(|t| t[attr_idx] == Scalar::str(value))
        .map(|t| t[oid_idx].as_oid().unwrap())
        .unwrap_or_else(|| panic!("no {class} with {attr}={value}"))
}

// ---------------------------------------------------------------------------
// Independent object-graph oracle: plain structs, plain loops. This is the
// committed reference the engine's answers are checked against.
// ---------------------------------------------------------------------------

pub mod oracle {
    #[derive(Debug, Clone, PartialEq)]
    pub struct Bank {
        pub name: String,
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct Contractor {
        pub name: String,
        pub bank: Option<usize>,
        pub id: String,
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct Good {
        pub art: String,
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct Doc {
        pub docn: String,
        pub date: Option<i64>,
        pub comment: Option<String>,
        pub cntr: Option<usize>,
        pub items: Vec<(String, i64)>,
    }

    /// The object graph, indices standing in for references.
    #[derive(Debug, Clone, Default, PartialEq)]
    pub struct Model {
        pub banks: Vec<Bank>,
        pub contractors: Vec<Contractor>,
        pub goods: Vec<Good>,
        pub docs: Vec<Doc>,
    }

    impl Model {
        pub fn d0() -> Model {
            Model {
                banks: vec![Bank { name: "TheBank".into() }],
                contractors: vec![
                    Contractor { name: "TheShop".into(), bank: Some(0), id: "CoID001".into() },
                    Contractor { name: "OtherCo".into(), bank: Some(0), id: "CoID002".into() },
                ],
                goods: vec![Good { art: "A1".into() }, Good { art: "A2".into() }],
                docs: vec![
                    Doc {
                        docn: "D1".into(),
                        date: None,
                        comment: None,
                        cntr: Some(0),
                        items: vec![("A1".into(), 5)],
                    },
                    Doc {
                        docn: "D2".into(),
                        date: None,
                        comment: None,
                        cntr: Some(1),
                        items: vec![("A1".into(), 7), ("A2".into(), 2)],
                    },
                    Doc {
                        docn: "D3".into(),
                        date: None,
                        comment: None,
                        cntr: Some(0),
                        items: vec![("A2".into(), 1)],
                    },
                ],
            }
        }

        /// GOODS.Turnover for one article: per doc holding the article,
        /// (DocN, contractor id, summed pieces), in doc order.
        pub fn turnover(&self, art: &str) -> Vec<(String, Option<String>, i64)> {
            let mut rows = Vec::new();
            for doc in &self.docs {
                let total: i64 = doc
                    .items
                    .iter()
                    .filter(|(item_art, _)| item_art == art)
                    .map(|(_, pieces)| pieces)
                    .sum();
                let any = doc.items.iter().any(|(item_art, _)| item_art == art);
                if any {
                    let id = doc.cntr.map(|c| self.contractors[c].id.clone());
                    rows.push((doc.docn.clone(), id, total));
                }
            }
            rows
        }

        /// GOODS.Pieces for one article: total over all docs (0 when none).
        pub fn pieces(&self, art: &str) -> i64 {
            self.docs
                .iter()
                .flat_map(|doc| doc.items.iter())
                .filter(|(item_art, _)| item_art == art)
                .map(|(_, pieces)| pieces)
                .sum()
        }

        /// Reverse traversal: arts of goods appearing in any doc of a
        /// contractor with the given name.
        pub fn goods_of_contractor(&self, name: &str) -> Vec<String> {
            let mut arts: Vec<String> = Vec::new();
            for good in &self.goods {
                let hit = self.docs.iter().any(|doc| {
                    let named = doc
                        .cntr
                        .map(|c| self.contractors[c].name == name)
                        .unwrap_or(false);
                    named && doc.items.iter().any(|(art, _)| art == &good.art)
                });
                if hit && !arts.contains(&good.art) {
                    arts.push(good.art.clone());
                }
            }
            arts
        }

        /// Forward traversal: (contractor name, bank name) pairs reachable
        /// from one article's turnover.
        pub fn contractors_of_good(&self, art: &str) -> Vec<(String, Option<String>)> {
            let mut out: Vec<(String, Option<String>)> = Vec::new();
            for doc in &self.docs {
                if !doc.items.iter().any(|(item_art, _)| item_art == art) {
                    continue;
                }
                let Some(c) = doc.cntr else { continue };
                let contractor = &self.contractors[c];
                let bank = contractor.bank.map(|b| self.banks[b].name.clone());
                let pair = (contractor.name.clone(), bank);
                if !out.contains(&pair) {
                    out.push(pair);
                }
            }
            out
        }

        /// Names of contractors referenced by at least one doc holding the
        /// article (used by the forward/reverse consistency check).
        pub fn contractor_names_of_good(&self, art: &str) -> Vec<String> {
            self.contractors_of_good(art).into_iter().map(|(name, _)| name).collect()
        }
    }

    /// Builds the statement script that loads a model into the engine.
    pub fn load_script(model: &Model) -> String {
        let mut out = String::new();
        for bank in &model.banks {
            out.push_str(&format!("NEW BANKS WITH SET .Name := \"{}\";\n", bank.name));
        }
        for contractor in &model.contractors {
            let bank = match contractor.bank {
                Some(b) => format!("BANKS[.Name = \"{}\"]", model.banks[b].name),
                None => "NULL".to_string(),
            };
            out.push_str(&format!(
                "NEW CONTRACTORS WITH SET .Name := \"{}\", .Bank := {bank}, .ID := \"{}\";\n",
                contractor.name, contractor.id
            ));
        }
        for good in &model.goods {
            out.push_str(&format!("NEW GOODS WITH SET .Art := \"{}\";\n", good.art));
        }
        for doc in &model.docs {
            let cntr = match doc.cntr {
                Some(c) => format!("CONTRACTORS[.ID = \"{}\"]", model.contractors[c].id),
                None => "NULL".to_string(),
            };
            out.push_str(&format!(
                "NEW DOCS WITH SET .DocN := \"{}\", .Cntr := {cntr};\n",
                doc.docn
            ));
            if !doc.items.is_empty() {
                let rows: Vec<String> = doc
                    .items
                    .iter()
                    .map(|(art, pieces)| format!("(\"{art}\", {pieces})"))
                    .collect();
                out.push_str(&format!(
                    "INSERT DOCS[.DocN = \"{}\"].Items VALUES {};\n",
                    doc.docn,
                    rows.join(", ")
                ));
            }
        }
        out
    }
}

/// Loads an oracle model into a fresh engine database (D0 schema).
pub fn db_from_model(model: &oracle::Model) -> Database {
    let mut db = d0_schema();
    let script = oracle::load_script(model);
    run_source(&mut db, &script).unwrap_or_else(|e| panic!("model load failed: {e}\n{script}"));
    db
}

// ---------------------------------------------------------------------------
// Random loop-free methods over a three-counter class, plus the sequential
// per-object oracle they are checked against.
// ---------------------------------------------------------------------------

pub mod methods {
    use proptest::prelude::*;

    pub const COMPONENTS: [&str; 3] = ["A", "B", "C"];
    pub const LOCALS: [&str; 2] = ["L0", "L1"];
    pub const PARAMS: [&str; 2] = ["p0", "p1"];

    #[derive(Debug, Clone)]
    pub enum Term {
        Comp(usize),
        Local(usize),
        Param(usize),
        Lit(i64),
        Null,
    }

    #[derive(Debug, Clone)]
    pub enum Val {
        Term(Term),
        Add(Term, Term),
        Sub(Term, Term),
    }

    #[derive(Debug, Clone, Copy)]
    pub enum CmpOp {
        Eq,
        Ne,
        Lt,
        Le,
        Gt,
        Ge,
    }

    #[derive(Debug, Clone)]
    pub enum Guard {
        Cmp(CmpOp, Term, Term),
        IsNull(Term),
        And(Box<Guard>, Box<Guard>),
        Or(Box<Guard>, Box<Guard>),
        Not(Box<Guard>),
    }

    #[derive(Debug, Clone)]
    pub enum MStmt {
        Assign { to_component: bool, idx: usize, value: Val },
        If { guard: Guard, then_branch: Vec<MStmt>, else_branch: Vec<MStmt> },
    }

    #[derive(Debug, Clone)]
    pub struct Method {
        pub body: Vec<MStmt>,
    }

    // -- rendering to source text ----------------------------------------

    fn term_text(term: &Term) -> String {
        match term {
            Term::Comp(i) => COMPONENTS[*i].to_string(),
            Term::Local(i) => LOCALS[*i].to_string(),
            Term::Param(i) => PARAMS[*i].to_string(),
            Term::Lit(v) => {
                if *v < 0 {
                    format!("(0 - {})", -v)
                } else {
                    v.to_string()
                }
            }
            Term::Null => "NULL".to_string(),
        }
    }

    fn val_text(value: &Val) -> String {
        match value {
            Val::Term(t) => term_text(t),
            Val::Add(a, b) => format!("{} + {}", term_text(a), term_text(b)),
            Val::Sub(a, b) => format!("{} - {}", term_text(a), term_text(b)),
        }
    }

    fn cmp_text(op: CmpOp) -> &'static str {
        match op {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn guard_text(guard: &Guard) -> String {
        match guard {
            Guard::Cmp(op, a, b) => {
                format!("{} {} {}", term_text(a), cmp_text(*op), term_text(b))
            }
            Guard::IsNull(t) => format!("{} IS NULL", term_text(t)),
            Guard::And(a, b) => format!("({}) AND ({})", guard_text(a), guard_text(b)),
            Guard::Or(a, b) => format!("({}) OR ({})", guard_text(a), guard_text(b)),
            Guard::Not(g) => format!("NOT ({})", guard_text(g)),
        }
    }

    fn stmt_text(stmt: &MStmt, out: &mut String) {
        match stmt {
            MStmt::Assign { to_component, idx, value } => {
                let target = if *to_component { COMPONENTS[*idx] } else { LOCALS[*idx] };
                out.push_str(&format!("{target} := {}; ", val_text(value)));
            }
            MStmt::If { guard, then_branch, else_branch } => {
                out.push_str(&format!("IF ({}) THEN BEGIN ", guard_text(guard)));
                for s in then_branch {
                    stmt_text(s, out);
                }
                out.push_str("END ");
                if !else_branch.is_empty() {
                    out.push_str("ELSE BEGIN ");
                    for s in else_branch {
                        stmt_text(s, out);
                    }
                    out.push_str("END ");
                }
            }
        }
    }

    impl Method {
        /// The `ALTER ... REALIZE` statement realizing this method.
        pub fn realization(&self) -> String {
            let mut body = String::new();
            for local in LOCALS {
                body.push_str(&format!("DECLARE {local} INTEGER; "));
            }
            for stmt in &self.body {
                stmt_text(stmt, &mut body);
            }
            format!("ALTER T REALIZE Doit(p0 INTEGER, p1 INTEGER) AS BEGIN {body}END")
        }
    }

    // -- the independent sequential interpreter ---------------------------

    /// One object's component state.
    pub type TState = [Option<i64>; 3];

    struct Frame {
        locals: [Option<i64>; 2],
        params: [Option<i64>; 2],
    }

    fn term_value(term: &Term, state: &TState, frame: &Frame) -> Option<i64> {
        match term {
            Term::Comp(i) => state[*i],
            Term::Local(i) => frame.locals[*i],
            Term::Param(i) => frame.params[*i],
            Term::Lit(v) => Some(*v),
            Term::Null => None,
        }
    }

    fn val_value(value: &Val, state: &TState, frame: &Frame) -> Option<i64> {
        match value {
            Val::Term(t) => term_value(t, state, frame),
            Val::Add(a, b) => {
                Some(term_value(a, state, frame)? + term_value(b, state, frame)?)
            }
            Val::Sub(a, b) => {
                Some(term_value(a, state, frame)? - term_value(b, state, frame)?)
            }
        }
    }

    fn guard_value(guard: &Guard, state: &TState, frame: &Frame) -> bool {
        match guard {
            Guard::Cmp(op, a, b) => {
                let (Some(x), Some(y)) =
                    (term_value(a, state, frame), term_value(b, state, frame))
                else {
                    return false;
                };
                match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                }
            }
            Guard::IsNull(t) => term_value(t, state, frame).is_none(),
            Guard::And(a, b) => guard_value(a, state, frame) && guard_value(b, state, frame),
            Guard::Or(a, b) => guard_value(a, state, frame) || guard_value(b, state, frame),
            Guard::Not(g) => !guard_value(g, state, frame),
        }
    }

    fn run_block(block: &[MStmt], state: &mut TState, frame: &mut Frame) {
        for stmt in block {
            match stmt {
                MStmt::Assign { to_component, idx, value } => {
                    let v = val_value(value, state, frame);
                    if *to_component {
                        state[*idx] = v;
                    } else {
                        frame.locals[*idx] = v;
                    }
                }
                MStmt::If { guard, then_branch, else_branch } => {
                    if guard_value(guard, state, frame) {
                        run_block(then_branch, state, frame);
                    } else {
                        run_block(else_branch, state, frame);
                    }
                }
            }
        }
    }

    /// Runs the method for each selected object in the given order.
    pub fn run_sequential(
        states: &mut Vec<TState>,
        order: &[usize],
        method: &Method,
        params: [Option<i64>; 2],
    ) {
        for &i in order {
            let mut frame = Frame { locals: [None, None], params };
            let mut state = states[i];
            run_block(&method.body, &mut state, &mut frame);
            states[i] = state;
        }
    }

    // -- strategies --------------------------------------------------------

    fn term() -> impl Strategy<Value = Term> {
        prop_oneof![
            (0..3usize).prop_map(Term::Comp),
            (0..2usize).prop_map(Term::Local),
            (0..2usize).prop_map(Term::Param),
            (-50..50i64).prop_map(Term::Lit),
            Just(Term::Null),
        ]
    }

    fn val() -> impl Strategy<Value = Val> {
        prop_oneof![
            term().prop_map(Val::Term),
            (term(), term()).prop_map(|(a, b)| Val::Add(a, b)),
            (term(), term()).prop_map(|(a, b)| Val::Sub(a, b)),
        ]
    }

    fn cmp_op() -> impl Strategy<Value = CmpOp> {
        prop_oneof![
            Just(CmpOp::Eq),
            Just(CmpOp::Ne),
            Just(CmpOp::Lt),
            Just(CmpOp::Le),
            Just(CmpOp::Gt),
            Just(CmpOp::Ge),
        ]
    }

    fn guard() -> impl Strategy<Value = Guard> {
        let leaf = prop_oneof![
            (cmp_op(), term(), term()).prop_map(|(op, a, b)| Guard::Cmp(op, a, b)),
            term().prop_map(Guard::IsNull),
        ];
        leaf.prop_recursive(2, 6, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Guard::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Guard::Or(Box::new(a), Box::new(b))),
                inner.prop_map(|g| Guard::Not(Box::new(g))),
            ]
        })
    }

    fn assign() -> impl Strategy<Value = MStmt> {
        (any::<bool>(), 0..3usize, val()).prop_map(|(to_component, idx, value)| MStmt::Assign {
            to_component,
            idx: if to_component { idx } else { idx % 2 },
            value,
        })
    }

    fn stmt(depth: u32) -> BoxedStrategy<MStmt> {
        if depth == 0 {
            assign().boxed()
        } else {
            prop_oneof![
                3 => assign(),
                1 => (
                    guard(),
                    proptest::collection::vec(stmt(depth - 1), 1..=2),
                    proptest::collection::vec(stmt(depth - 1), 0..=2),
                )
                    .prop_map(|(guard, then_branch, else_branch)| MStmt::If {
                        guard,
                        then_branch,
                        else_branch,
                    }),
            ]
            .boxed()
        }
    }

    pub fn method() -> impl Strategy<Value = Method> {
        proptest::collection::vec(stmt(2), 1..=5).prop_map(|body| Method { body })
    }

    /// Seed states for up to 16 objects.
    pub fn states() -> impl Strategy<Value = Vec<TState>> {
        proptest::collection::vec(
            [
                proptest::option::weighted(0.8, -50..50i64),
                proptest::option::weighted(0.8, -50..50i64),
                proptest::option::weighted(0.8, -50..50i64),
            ],
            1..=16,
        )
    }
}

// ---------------------------------------------------------------------------
// Proptest strategies.
// ---------------------------------------------------------------------------

pub mod gen {
    use super::oracle::{Bank, Contractor, Doc, Good, Model};
    use proptest::prelude::*;

    fn name(prefix: &'static str, n: usize) -> String {
        format!("{prefix}{n}")
    }

    /// Random small object graphs over the D0 schema (at most 16 objects).
    pub fn model() -> impl Strategy<Value = Model> {
        let banks = 1..=2usize;
        let contractors = 0..=4usize;
        let goods = 0..=4usize;
        let docs = 0..=5usize;
        (banks, contractors, goods, docs)
            .prop_flat_map(|(nb, nc, ng, nd)| {
                let bank_refs = proptest::collection::vec(
                    proptest::option::weighted(0.8, 0..nb),
                    nc,
                );
                let doc_cntrs = proptest::collection::vec(
                    if nc == 0 {
                        proptest::option::weighted(0.0, 0..1usize).boxed()
                    } else {
                        proptest::option::weighted(0.8, 0..nc).boxed()
                    },
                    nd,
                );
                let items = proptest::collection::vec(
                    proptest::collection::vec((0..ng.max(1), 1..50i64), 0..=ng),
                    nd,
                );
                (Just((nb, nc, ng, nd)), bank_refs, doc_cntrs, items)
            })
            .prop_map(|((nb, nc, ng, nd), bank_refs, doc_cntrs, items)| {
                let banks: Vec<Bank> =
                    (0..nb).map(|i| Bank { name: name("Bank", i) }).collect();
                let contractors: Vec<Contractor> = (0..nc)
                    .map(|i| Contractor {
                        name: name("Co", i),
                        bank: bank_refs[i],
                        id: name("ID", i),
                    })
                    .collect();
                let goods: Vec<Good> =
                    (0..ng).map(|i| Good { art: name("Art", i) }).collect();
                let docs: Vec<Doc> = (0..nd)
                    .map(|i| {
                        let mut doc_items: Vec<(String, i64)> = Vec::new();
                        if ng > 0 {
                            for (g, pieces) in &items[i] {
                                let art = name("Art", *g);
                                if !doc_items.iter().any(|(a, _)| a == &art) {
                                    doc_items.push((art, *pieces));
                                }
                            }
                        }
                        Doc {
                            docn: name("D", i),
                            date: None,
                            comment: None,
                            cntr: doc_cntrs[i],
                            items: doc_items,
                        }
                    })
                    .collect();
                Model { banks, contractors, goods, docs }
            })
    }
}
