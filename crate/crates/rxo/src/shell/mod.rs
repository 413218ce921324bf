//! The human surface: script runner, interactive loop, and relation
//! rendering.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use crate::database::Database;
use crate::engine::{execute, Outcome};
use crate::kernel::{Relation, Scalar};
use crate::parser::{parse_script, ParseError};
use crate::store;

/// Output rendering for query results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Tsv,
}

/// Renders a relation deterministically: canonical row order (key or
/// full-tuple lexicographic), NULL printed as `NULL` in table mode, snapshot
/// escaping in tsv mode.
pub fn format_relation(relation: &Relation, format: Format) -> String {
    let canonical = relation.canonical();
    match format {
        Format::Tsv => {
            let mut out = String::new();
            let names: Vec<&str> = canonical.header().names().collect();
            out.push_str(&names.join("\t"));
            out.push('\n');
            for tuple in canonical.tuples() {
                let fields: Vec<String> = tuple.iter().map(store::encode_field).collect();
                out.push_str(&fields.join("\t"));
                out.push('\n');
            }
            out
        }
        Format::Table => {
            let names: Vec<String> =
                canonical.header().names().map(|n| n.to_string()).collect();
            let mut widths: Vec<usize> = names.iter().map(|n| n.chars().count()).collect();
            let rows: Vec<Vec<String>> = canonical
                .tuples()
                .iter()
                .map(|tuple| tuple.iter().map(render_cell).collect())
                .collect();
            for row in &rows {
                for (i, cell) in row.iter().enumerate() {
                    widths[i] = widths[i].max(cell.chars().count());
                }
            }
            let mut out = String::new();
            let render_row = |cells: &[String], out: &mut String| {
                let mut line = String::new();
                for (i, cell) in cells.iter().enumerate() {
                    if i > 0 {
                        line.push_str(" | ");
                    }
                    line.push_str(cell);
                    let pad = widths[i].saturating_sub(cell.chars().count());
                    if i + 1 < cells.len() {
                        line.extend(std::iter::repeat_n(' ', pad));
                    }
                }
                out.push_str(line.trim_end());
                out.push('\n');
            };
            render_row(&names, &mut out);
            let rule_width: usize = widths.iter().sum::<usize>() + 3 * (widths.len() - 1);
            out.push_str(&"-".repeat(rule_width));
            out.push('\n');
            for row in &rows {
                render_row(row, &mut out);
            }
            let n = canonical.len();
            out.push_str(&format!("{n} row{}\n", if n == 1 { "" } else { "s" }));
            out
        }
    }
}

fn render_cell(value: &Scalar) -> String {
    match value {
        Scalar::Null => "NULL".to_string(),
        Scalar::String(s) => s.clone(),
        other => store::encode_field(other),
    }
}

/// An interactive or scripted session over one database file.
pub struct Session {
    pub db_path: PathBuf,
    pub db: Database,
    pub autosave: bool,
    pub format: Format,
}

impl Session {
    /// Opens the database file, or starts fresh when it does not exist yet
    /// (the file appears on first save).
    pub fn open(db_path: &Path, autosave: bool, format: Format) -> Result<Session, String> {
        let db = if db_path.exists() {
            store::load_snapshot(db_path).map_err(|e| e.to_string())?
        } else {
            Database::new()
        };
        Ok(Session { db_path: db_path.to_path_buf(), db, autosave, format })
    }

    pub fn save(&self) -> Result<(), String> {
        store::save_snapshot(&self.db, &self.db_path).map_err(|e| e.to_string())
    }

    /// Executes one parsed statement, autosaving after successful mutations.
    fn execute_one(&mut self, statement: &crate::parser::Stmt) -> Result<Outcome, String> {
        let outcome = execute(&mut self.db, statement).map_err(|e| {
            let pos = statement.pos();
            format!("{pos}: {e}")
        })?;
        if self.autosave && statement.is_mutating() {
            self.save()?;
        }
        Ok(outcome)
    }
}

/// Runs a script file: statements execute in order; the first error stops
/// the run with its position reported. The database file is written after a
/// fully successful run (or per statement when autosave is on).
pub fn run_script(script: &Path, db_path: &Path, autosave: bool) -> i32 {
    let source = match std::fs::read_to_string(script) {
        Ok(source) => source,
        Err(err) => {
            eprintln!("error: {}: {err}", script.display());
            return 2;
        }
    };
    let mut session = match Session::open(db_path, autosave, Format::Table) {
        Ok(session) => session,
        Err(err) => {
            eprintln!("error: {err}");
            return 1;
        }
    };
    match run_statements(&mut session, &source, &mut std::io::stdout()) {
        Ok(()) => {
            if let Err(err) = session.save() {
                eprintln!("error: {err}");
                return 1;
            }
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

/// Parses and executes a statement sequence, printing query results.
pub fn run_statements(
    session: &mut Session,
    source: &str,
    out: &mut dyn Write,
) -> Result<(), String> {
    let statements = parse_script(source).map_err(|e| e.to_string())?;
    for statement in &statements {
        match session.execute_one(statement)? {
            Outcome::Rows(relation) => {
                let _ = out.write_all(format_relation(&relation, session.format).as_bytes());
            }
            Outcome::Ok | Outcome::Affected(_) => {}
        }
    }
    Ok(())
}

/// Executes one statement string (the `query` subcommand).
pub fn run_query(session: &mut Session, statement: &str, out: &mut dyn Write) -> Result<(), String> {
    let statements = parse_script(statement).map_err(|e| e.to_string())?;
    for statement in &statements {
        match session.execute_one(statement)? {
            Outcome::Rows(relation) => {
                let _ = out.write_all(format_relation(&relation, session.format).as_bytes());
            }
            Outcome::Ok => {
                let _ = writeln!(out, "OK");
            }
            Outcome::Affected(n) => {
                let _ = writeln!(out, "OK ({n} row{} affected)", if n == 1 { "" } else { "s" });
            }
        }
    }
    Ok(())
}

/// The interactive loop: statements end at `;` (multi-line input is fine),
/// `\q` quits, `\save` forces a snapshot, `\classes` lists the catalog.
pub fn repl(
    session: &mut Session,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    interactive: bool,
) -> Result<(), String> {
    let mut buffer = String::new();
    loop {
        if interactive {
            let prompt = if buffer.trim().is_empty() { "rxo> " } else { "...> " };
            let _ = write!(out, "{prompt}");
            let _ = out.flush();
        }
        let mut line = String::new();
        match input.read_line(&mut line) {
            Ok(0) => return Ok(()),
            Ok(_) => {}
            Err(err) => return Err(err.to_string()),
        }
        let trimmed = line.trim();
        if buffer.trim().is_empty() && trimmed.starts_with('\\') {
            match trimmed {
                "\\q" => return Ok(()),
                "\\save" => match session.save() {
                    Ok(()) => {
                        let _ = writeln!(out, "saved {}", session.db_path.display());
                    }
                    Err(err) => {
                        let _ = writeln!(out, "error: {err}");
                    }
                },
                "\\classes" => {
                    for spec in session.db.catalog.classes() {
                        let _ = writeln!(out, "{}", spec.name);
                    }
                }
                other => {
                    let _ = writeln!(out, "unknown command `{other}` (try \\q, \\save, \\classes)");
                }
            }
            continue;
        }
        buffer.push_str(&line);
        if buffer.trim().is_empty() {
            continue;
        }
        // execute once the buffer parses as complete statements
        match parse_script(&buffer) {
            Err(err) if incomplete(&err, &buffer) => continue,
            Err(err) => {
                let _ = writeln!(out, "error: {err}");
                buffer.clear();
            }
            Ok(statements) => {
                for statement in &statements {
                    match session.execute_one(statement) {
                        Ok(Outcome::Rows(relation)) => {
                            let _ = out
                                .write_all(format_relation(&relation, session.format).as_bytes());
                        }
                        Ok(Outcome::Ok) => {
                            let _ = writeln!(out, "OK");
                        }
                        Ok(Outcome::Affected(n)) => {
                            let _ = writeln!(
                                out,
                                "OK ({n} row{} affected)",
                                if n == 1 { "" } else { "s" }
                            );
                        }
                        Err(err) => {
                            let _ = writeln!(out, "error: {err}");
                            break;
                        }
                    }
                }
                buffer.clear();
            }
        }
    }
}

/// Heuristic: the statement is still being typed when the parse failed at
/// the very end of the buffer.
fn incomplete(err: &ParseError, buffer: &str) -> bool {
    if err.message.contains("unexpected end of input") {
        return true;
    }
    let lines: Vec<&str> = buffer.lines().collect();
    let last_line = lines.len() as u32;
    err.pos.line >= last_line && !buffer.trim_end().ends_with(';')
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Attribute, Header, Kind};
    use crate::testkit::d0;

    fn contractors_names(db: &Database) -> Relation {
        let mut db = db.clone();
        let stmt = crate::parser::parse_statement("SELECT .Name FROM CONTRACTORS;").unwrap();
        match execute(&mut db, &stmt).unwrap() {
            Outcome::Rows(relation) => relation,
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn tsv_of_contractor_names() {
        let db = d0();
        let relation = contractors_names(&db);
        assert_eq!(format_relation(&relation, Format::Tsv), ".Name\nOtherCo\nTheShop\n");
    }

    #[test]
    fn empty_relation_renders_header_and_zero_rows() {
        let header = Header::new(vec![
            Attribute::new(".Name", Kind::String),
            Attribute::new(".Bank.Name", Kind::String),
        ])
        .unwrap();
        let text = format_relation(&Relation::empty(header), Format::Table);
        assert!(text.starts_with(".Name | .Bank.Name\n"));
        assert!(text.ends_with("0 rows\n"));
    }

    #[test]
    fn null_renders_as_null_in_tables() {
        let header = Header::new(vec![Attribute::new(".X", Kind::Integer)]).unwrap();
        let relation = Relation::new(header, None, vec![vec![Scalar::Null]]).unwrap();
        let text = format_relation(&relation, Format::Table);
        assert!(text.contains("NULL"));
        assert!(text.ends_with("1 row\n"));
    }

    #[test]
    fn repl_executes_multiline_statements_and_meta_commands() {
        let dir = tempfile::tempdir().unwrap();
        let db_path = dir.path().join("repl.rxo");
        let mut session = Session::open(&db_path, false, Format::Table).unwrap();
        session.db = d0();
        let input = "SELECT .Name, .Bank.Name\nFROM GOODS.Turnover.Cntr;\n\\classes\n\\q\n";
        let mut out = Vec::new();
        repl(&mut session, &mut input.as_bytes(), &mut out, false).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("TheShop"), "{text}");
        assert!(text.contains("2 rows"), "{text}");
        let classes_at = text.find("BANKS\nCONTRACTORS\nGOODS\nDOCS\n").unwrap();
        assert!(classes_at > 0);
    }

    #[test]
    fn repl_reports_errors_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let db_path = dir.path().join("repl.rxo");
        let mut session = Session::open(&db_path, false, Format::Table).unwrap();
        session.db = d0();
        let input = "SELECT nonsense!!;\nSELECT .Name FROM CONTRACTORS;\n";
        let mut out = Vec::new();
        repl(&mut session, &mut input.as_bytes(), &mut out, false).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("error:"), "{text}");
        assert!(text.contains("TheShop"), "{text}");
    }

    #[test]
    fn autosave_writes_after_mutations() {
        let dir = tempfile::tempdir().unwrap();
        let db_path = dir.path().join("auto.rxo");
        let mut session = Session::open(&db_path, true, Format::Table).unwrap();
        let mut out = Vec::new();
        run_statements(&mut session, "CREATE CLASS BANKS ( Name STRING );", &mut out).unwrap();
        assert!(db_path.exists());
        let loaded = store::load_snapshot(&db_path).unwrap();
        assert!(loaded.catalog.has_class("BANKS"));
    }

    #[test]
    fn repl_and_script_agree() {
        let dir = tempfile::tempdir().unwrap();
        let source = "CREATE CLASS BANKS ( Name STRING );\nALTER BANKS REALIZE Name AS STORED;\nNEW BANKS WITH SET .Name := \"TheBank\";\nSELECT .Name FROM BANKS;";

        let mut repl_session =
            Session::open(&dir.path().join("a.rxo"), false, Format::Tsv).unwrap();
        let mut repl_out = Vec::new();
        let mut input = format!("{source}\n\\q\n");
        input.push('\n');
        repl(&mut repl_session, &mut input.as_bytes(), &mut repl_out, false).unwrap();

        let mut script_session =
            Session::open(&dir.path().join("b.rxo"), false, Format::Tsv).unwrap();
        let mut script_out = Vec::new();
        run_statements(&mut script_session, source, &mut script_out).unwrap();

        let repl_text = String::from_utf8(repl_out).unwrap();
        let script_text = String::from_utf8(script_out).unwrap();
        assert!(repl_text.contains(".Name\nTheBank\n"));
        assert!(script_text.contains(".Name\nTheBank\n"));
        assert!(repl_session.db.same_state(&script_session.db));
    }
}
