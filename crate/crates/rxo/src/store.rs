//! Durable snapshots: the whole database (catalog, stored relations, OID
//! counter) as one canonical text file.
//!
//! Format, bit-exact:
//!
//! ```text
//! RXO-SNAPSHOT 1
//! %CATALOG
//! <one canonical schema statement per line, in execution order>
//! %DATA
//! =<relation name>
//! <attr>:<KIND><TAB><attr>:<KIND>...
//! <field><TAB><field>...
//! %OID <last allocated oid>
//! ```
//!
//! Relations are ordered by name, tuples by key (full-tuple lexicographic
//! when keyless). Fields are tab-separated with `\t`, `\n`, `\\` escapes;
//! NULL is `\N`; REF values are decimal OIDs; DATETIME is ISO-8601 UTC;
//! FLOAT is the shortest round-trip decimal. UTF-8, LF line endings.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::database::Database;
use crate::kernel::{format_datetime, Kind, Oid, Scalar};
use crate::parser::ast::Stmt;
use crate::parser::parse_statement;
use crate::schema;

pub const SNAPSHOT_HEADER: &str = "RXO-SNAPSHOT 1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("snapshot format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("snapshot violates the rebuilt schema: {0}")]
    Constraint(String),
    #[error("oid counter error: {0}")]
    Counter(String),
}

// ---------------------------------------------------------------------------
// Field encoding (shared with the shell's tsv output).
// ---------------------------------------------------------------------------

pub fn encode_field(value: &Scalar) -> String {
    match value {
        Scalar::Null => "\\N".to_string(),
        Scalar::String(s) => {
            let mut out = String::with_capacity(s.len());
            for ch in s.chars() {
                match ch {
                    '\\' => out.push_str("\\\\"),
                    '\t' => out.push_str("\\t"),
                    '\n' => out.push_str("\\n"),
                    other => out.push(other),
                }
            }
            out
        }
        Scalar::Integer(i) => i.to_string(),
        Scalar::Float(f) => f.to_string(),
        Scalar::Datetime(secs) => format_datetime(*secs),
        Scalar::Boolean(b) => if *b { "true" } else { "false" }.to_string(),
        Scalar::Ref(oid) => oid.to_string(),
    }
}

pub fn decode_field(text: &str, kind: &Kind) -> Result<Scalar, String> {
    if text == "\\N" {
        return Ok(Scalar::Null);
    }
    match kind {
        Kind::String => {
            let mut out = String::with_capacity(text.len());
            let mut chars = text.chars();
            while let Some(ch) = chars.next() {
                if ch != '\\' {
                    out.push(ch);
                    continue;
                }
                match chars.next() {
                    Some('\\') => out.push('\\'),
                    Some('t') => out.push('\t'),
                    Some('n') => out.push('\n'),
                    Some(other) => return Err(format!("bad escape `\\{other}`")),
                    None => return Err("dangling backslash".to_string()),
                }
            }
            Ok(Scalar::String(out))
        }
        Kind::Integer => text
            .parse::<i64>()
            .map(Scalar::Integer)
            .map_err(|_| format!("bad INTEGER `{text}`")),
        Kind::Float => {
            let value: f64 = text.parse().map_err(|_| format!("bad FLOAT `{text}`"))?;
            Scalar::float(value).map_err(|e| e.to_string())
        }
        Kind::Datetime => Scalar::parse_datetime(text)
            .map(Scalar::Datetime)
            .ok_or_else(|| format!("bad DATETIME `{text}`")),
        Kind::Boolean => match text {
            "true" => Ok(Scalar::Boolean(true)),
            "false" => Ok(Scalar::Boolean(false)),
            _ => Err(format!("bad BOOLEAN `{text}`")),
        },
        Kind::Ref(_) => text
            .parse::<u64>()
            .map(|n| Scalar::Ref(Oid(n)))
            .map_err(|_| format!("bad REF `{text}`")),
    }
}

fn encode_kind(kind: &Kind) -> String {
    kind.to_string()
}

fn decode_kind(text: &str) -> Result<Kind, String> {
    match text {
        "STRING" => Ok(Kind::String),
        "INTEGER" => Ok(Kind::Integer),
        "FLOAT" => Ok(Kind::Float),
        "DATETIME" => Ok(Kind::Datetime),
        "BOOLEAN" => Ok(Kind::Boolean),
        other => {
            if let Some(class) = other.strip_prefix("REF(").and_then(|s| s.strip_suffix(')')) {
                Ok(Kind::Ref(class.to_string()))
            } else {
                Err(format!("bad kind `{other}`"))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

/// Renders the database into its canonical snapshot text.
pub fn snapshot_text(db: &Database) -> String {
    let mut out = String::new();
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    out.push_str("%CATALOG\n");
    for statement in &db.catalog.history {
        out.push_str(statement);
        out.push('\n');
    }
    out.push_str("%DATA\n");
    for stored in db.storage.iter() {
        let _ = writeln!(out, "={}", stored.name);
        let header_line: Vec<String> = stored
            .relation
            .header()
            .attributes()
            .iter()
            .map(|a| format!("{}:{}", a.name, encode_kind(&a.kind)))
            .collect();
        out.push_str(&header_line.join("\t"));
        out.push('\n');
        for tuple in stored.relation.canonical().tuples() {
            let fields: Vec<String> = tuple.iter().map(encode_field).collect();
            out.push_str(&fields.join("\t"));
            out.push('\n');
        }
    }
    let _ = writeln!(out, "%OID {}", db.oid_counter() - 1);
    out
}

/// Writes the snapshot atomically: exclusive temp file, then rename.
pub fn save_snapshot(db: &Database, destination: &Path) -> Result<(), StoreError> {
    use std::io::Write;
    let text = snapshot_text(db);
    let pid = std::process::id();
    let tmp = destination.with_extension(format!("tmp.{pid}"));
    {
        let mut file = std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&tmp)
            .map_err(|e| StoreError::Io(format!("{}: {e}", tmp.display())))?;
        file.write_all(text.as_bytes())
            .map_err(|e| StoreError::Io(e.to_string()))?;
        file.sync_all().map_err(|e| StoreError::Io(e.to_string()))?;
    }
    std::fs::rename(&tmp, destination).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        StoreError::Io(format!("{}: {e}", destination.display()))
    })
}

// ---------------------------------------------------------------------------
// Deserialization.
// ---------------------------------------------------------------------------

/// Rebuilds a database from snapshot text: replays the catalog statements,
/// bulk-loads the data, restores the OID counter, and verifies every
/// constraint at the end of the load.
pub fn parse_snapshot(text: &str) -> Result<Database, StoreError> {
    let mut lines = text.lines().enumerate().peekable();
    let fail = |line: usize, message: String| StoreError::Format { line: line + 1, message };

    match lines.next() {
        Some((_, line)) if line == SNAPSHOT_HEADER => {}
        Some((n, line)) => return Err(fail(n, format!("expected `{SNAPSHOT_HEADER}`, got `{line}`"))),
        None => return Err(fail(0, "empty snapshot".to_string())),
    }
    match lines.next() {
        Some((_, "%CATALOG")) => {}
        Some((n, line)) => return Err(fail(n, format!("expected `%CATALOG`, got `{line}`"))),
        None => return Err(fail(1, "missing %CATALOG section".to_string())),
    }

    let mut db = Database::new();
    // catalog replay
    loop {
        match lines.peek() {
            Some((_, "%DATA")) => {
                lines.next();
                break;
            }
            Some(&(n, line)) => {
                let statement = parse_statement(line)
                    .map_err(|e| fail(n, format!("bad catalog statement: {e}")))?;
                match &statement {
                    Stmt::CreateClass(decl) => schema::define_class(&mut db, decl)
                        .map_err(|e| fail(n, e.to_string()))?,
                    Stmt::AlterRealize(alter) => schema::register_realization(&mut db, alter)
                        .map_err(|e| fail(n, e.to_string()))?,
                    _ => {
                        return Err(fail(
                            n,
                            "only schema statements belong in %CATALOG".to_string(),
                        ))
                    }
                }
                lines.next();
            }
            None => return Err(fail(0, "missing %DATA section".to_string())),
        }
    }

    // data blocks
    let mut counter_line: Option<(usize, String)> = None;
    while let Some((n, line)) = lines.next() {
        if let Some(rest) = line.strip_prefix("%OID ") {
            counter_line = Some((n, rest.to_string()));
            if let Some((extra, _)) = lines.next() {
                return Err(fail(extra, "content after %OID".to_string()));
            }
            break;
        }
        let Some(name) = line.strip_prefix('=') else {
            return Err(fail(n, format!("expected `=<relation>` or `%OID`, got `{line}`")));
        };
        let (header_idx, header_line) = lines
            .next()
            .ok_or_else(|| fail(n, "missing header line".to_string()))?;
        let mut declared = Vec::new();
        for field in header_line.split('\t') {
            let (attr, kind_text) = field
                .split_once(':')
                .ok_or_else(|| fail(header_idx, format!("bad header field `{field}`")))?;
            let kind = decode_kind(kind_text).map_err(|m| fail(header_idx, m))?;
            declared.push((attr.to_string(), kind));
        }
        {
            let stored = db
                .storage
                .get(name)
                .map_err(|_| fail(n, format!("relation `{name}` is not part of the schema")))?;
            let actual: Vec<(String, Kind)> = stored
                .relation
                .header()
                .attributes()
                .iter()
                .map(|a| (a.name.clone(), a.kind.clone()))
                .collect();
            if actual != declared {
                return Err(fail(
                    header_idx,
                    format!("header of `{name}` does not match the rebuilt schema"),
                ));
            }
        }
        // tuples until the next block
        while let Some(&(tn, tline)) = lines.peek() {
            if tline.starts_with('=') || tline.starts_with("%OID") {
                break;
            }
            lines.next();
            let fields: Vec<&str> = tline.split('\t').collect();
            if fields.len() != declared.len() {
                return Err(fail(tn, format!("expected {} fields", declared.len())));
            }
            let mut tuple = Vec::with_capacity(fields.len());
            for (field, (_, kind)) in fields.iter().zip(&declared) {
                tuple.push(decode_field(field, kind).map_err(|m| fail(tn, m))?);
            }
            let stored = db.storage.get_mut(name).expect("checked above");
            stored
                .relation
                .insert_unchecked(tuple)
                .map_err(|e| StoreError::Constraint(e.to_string()))?;
        }
    }

    let (counter_idx, counter_text) =
        counter_line.ok_or_else(|| fail(0, "missing %OID line".to_string()))?;
    let last_allocated: u64 = counter_text
        .parse()
        .map_err(|_| fail(counter_idx, format!("bad counter `{counter_text}`")))?;
    let max_present = db
        .storage
        .iter()
        .flat_map(|s| s.relation.tuples())
        .flat_map(|t| t.iter())
        .filter_map(|v| v.as_oid())
        .map(|oid| oid.0)
        .max()
        .unwrap_or(0);
    if last_allocated < max_present {
        return Err(StoreError::Counter(format!(
            "counter {last_allocated} is below the largest stored oid {max_present}"
        )));
    }
    db.set_oid_counter(last_allocated + 1);

    db.full_verify().map_err(|e| StoreError::Constraint(e.to_string()))?;
    Ok(db)
}

pub fn load_snapshot(source: &Path) -> Result<Database, StoreError> {
    let text = std::fs::read_to_string(source)
        .map_err(|e| StoreError::Io(format!("{}: {e}", source.display())))?;
    parse_snapshot(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{d0, oid_by};

    #[test]
    fn empty_database_snapshot_shape() {
        let db = Database::new();
        let text = snapshot_text(&db);
        assert_eq!(text, "RXO-SNAPSHOT 1\n%CATALOG\n%DATA\n%OID 0\n");
        let back = parse_snapshot(&text).unwrap();
        assert!(back.same_state(&db));
    }

    #[test]
    fn d0_round_trips_and_is_canonical() {
        let db = d0();
        let text = snapshot_text(&db);
        let back = parse_snapshot(&text).unwrap();
        assert!(back.same_state(&db));
        // canonical form: serializing the reloaded database is byte-identical
        assert_eq!(snapshot_text(&back), text);
    }

    #[test]
    fn goods_section_is_sorted_by_key() {
        let db = d0();
        let text = snapshot_text(&db);
        let at = text.find("=GOODS@obj").unwrap();
        let lines: Vec<&str> = text[at..].lines().take(4).collect();
        assert_eq!(lines[0], "=GOODS@obj");
        assert!(lines[1].starts_with("#oid:REF(GOODS)\tArt:STRING"));
        let a1 = oid_by(&db, "GOODS", "Art", "A1");
        let a2 = oid_by(&db, "GOODS", "Art", "A2");
        assert_eq!(lines[2], format!("{a1}\tA1"));
        assert_eq!(lines[3], format!("{a2}\tA2"));
    }

    #[test]
    fn string_escapes_round_trip() {
        let mut db = crate::testkit::d0_schema();
        crate::engine::run_source(
            &mut db,
            "NEW BANKS WITH SET .Name := \"tab\\there\\nand\\\\slash\";",
        )
        .unwrap();
        let text = snapshot_text(&db);
        assert!(text.contains("tab\\there\\nand\\\\slash"));
        let back = parse_snapshot(&text).unwrap();
        assert!(back.same_state(&db));
    }

    #[test]
    fn tampered_duplicate_key_is_rejected() {
        let db = d0();
        let text = snapshot_text(&db);
        // give A2's object a second row claiming the A1 class key
        let a1 = oid_by(&db, "GOODS", "Art", "A1");
        let a2 = oid_by(&db, "GOODS", "Art", "A2");
        let needle = format!("{a1}\tA1\n");
        let tampered = text.replace(&needle, &format!("{needle}{a2}\tA1\n"));
        assert!(tampered.len() > text.len());
        let err = parse_snapshot(&tampered).unwrap_err();
        assert!(matches!(err, StoreError::Constraint(_)), "{err:?}");
    }

    #[test]
    fn counter_below_max_oid_is_rejected() {
        let db = d0();
        let text = snapshot_text(&db);
        let tampered = regex_like_replace_counter(&text, "0");
        let err = parse_snapshot(&tampered).unwrap_err();
        assert!(matches!(err, StoreError::Counter(_)));
    }

    fn regex_like_replace_counter(text: &str, with: &str) -> String {
        let at = text.rfind("%OID ").unwrap();
        format!("{}%OID {}\n", &text[..at], with)
    }

    #[test]
    fn bad_header_is_rejected() {
        let err = parse_snapshot("RXO-SNAPSHOT 2\n%CATALOG\n%DATA\n%OID 0\n").unwrap_err();
        assert!(matches!(err, StoreError::Format { line: 1, .. }));
    }

    #[test]
    fn save_and_load_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d0.rxo");
        let db = d0();
        save_snapshot(&db, &path).unwrap();
        let back = load_snapshot(&path).unwrap();
        assert!(back.same_state(&db));
        // second save overwrites atomically
        save_snapshot(&back, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), snapshot_text(&db));
    }

    #[test]
    fn loading_never_reuses_oids() {
        let db = d0();
        let mut back = parse_snapshot(&snapshot_text(&db)).unwrap();
        let max = db
            .storage
            .iter()
            .flat_map(|s| s.relation.tuples())
            .flat_map(|t| t.iter())
            .filter_map(|v| v.as_oid())
            .max()
            .unwrap();
        assert!(back.allocate_oid() > max);
    }
}
