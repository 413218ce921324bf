//! Shared test fixture: the bank/contractor/goods/docs schema and the D0
//! object graph (one bank, two contractors, two goods, three docs).

use crate::database::Database;
use crate::engine::run_source;

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

/// Schema only (empty extents).
pub fn d0_schema() -> Database {
    let mut db = Database::new();
    run_source(&mut db, D0_SCHEMA).expect("fixture schema runs");
    db
}

/// Full D0 database.
pub fn d0() -> Database {
    let mut db = d0_schema();
    run_source(&mut db, D0_DATA).expect("fixture data loads");
    db
}

/// The OID of the object of `class` whose stored `attr` equals the string.
pub fn oid_by(db: &Database, class: &str, attr: &str, value: &str) -> crate::kernel::Oid {
    let root = db.catalog.storage(class).expect("storage").root.clone();
    let stored = db.storage.get(&root).expect("relation");
    let header = stored.relation.header();
    let oid_idx = header.position("#oid").unwrap();
    let attr_idx = header.position(attr).unwrap();
    stored
        .relation
        .tuples()
        .iter()
        .find(|t| t[attr_idx] == crate::kernel::Scalar::str(value))
        .map(|t| t[oid_idx].as_oid().unwrap())
        .unwrap_or_else(|| panic!("no {class} with {attr}={value}"))
}
