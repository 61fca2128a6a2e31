//! Table persistence: a small JSON document, one entry per line, so
//! validation failures can point at the offending line.

use std::path::Path;
use std::str::FromStr;

use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CorrelatorKey, CorrelatorTable, TableMode};

#[derive(Serialize, Deserialize)]
struct TableDoc {
    r: u32,
    mode: String,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    g: u32,
    a: Vec<u32>,
    m: Vec<u32>,
    value: String,
}

/// Deterministic rendering: entries in key order, one per line.
pub fn render_table(table: &CorrelatorTable) -> String {
    let mode = match table.mode() {
        TableMode::Numeric => "numeric",
        TableMode::Formal => "formal",
    };
    let mut out = format!("{{\"r\": {}, \"mode\": \"{}\", \"entries\": [", table.r(), mode);
    let lines: Vec<String> = table
        .entries()
        .map(|(key, value)| {
            let doc = EntryDoc {
                g: key.genus(),
                a: key.insertions().iter().map(|(a, _)| *a).collect(),
                m: key.insertions().iter().map(|(_, m)| *m).collect(),
                value: value.to_string(),
            };
            serde_json::to_string(&doc).expect("plain fields always serialize")
        })
        .collect();
    if lines.is_empty() {
        out.push_str("]}");
    } else {
        out.push('\n');
        out.push_str(&lines.join(",\n"));
        out.push_str("\n]}");
    }
    out.push('\n');
    out
}

/// 1-based line of the i-th entry, located through its leading "g" field.
/// Entry values never contain the letter g, so counting occurrences of the
/// quoted key is exact for documents this module writes and close enough
/// for hand-edited ones.
fn entry_line(src: &str, index: usize) -> Option<usize> {
    let (offset, _) = src.match_indices("\"g\"").nth(index)?;
    Some(1 + src[..offset].bytes().filter(|b| *b == b'\n').count())
}

fn entry_error(src: &str, index: usize, err: Error) -> Error {
    let message = match err {
        Error::BadEntry(m) => m,
        Error::BadKey(m) => format!("invalid key: {m}"),
        other => other.to_string(),
    };
    match entry_line(src, index) {
        Some(line) => Error::BadEntry(format!("line {line}: {message}")),
        None => Error::BadEntry(format!("entry {index}: {message}")),
    }
}

pub fn parse_table(src: &str) -> Result<CorrelatorTable> {
    let doc: TableDoc =
        serde_json::from_str(src).map_err(|e| Error::BadTable(e.to_string()))?;
    let mode = match doc.mode.as_str() {
        "numeric" => TableMode::Numeric,
        "formal" => TableMode::Formal,
        other => {
            return Err(Error::BadTable(format!(
                "unknown mode \"{other}\", expected \"numeric\" or \"formal\""
            )))
        }
    };
    if mode == TableMode::Formal && !doc.entries.is_empty() {
        return Err(Error::BadTable(
            "formal tables carry no entries; values live in the atoms".into(),
        ));
    }
    let mut table =
        CorrelatorTable::new(doc.r, mode).map_err(|e| Error::BadTable(e.to_string()))?;
    for (index, entry) in doc.entries.iter().enumerate() {
        if entry.a.len() != entry.m.len() {
            return Err(entry_error(
                src,
                index,
                Error::BadEntry(format!(
                    "{} psi powers against {} types",
                    entry.a.len(),
                    entry.m.len()
                )),
            ));
        }
        let insertions: Vec<(u32, u32)> = entry
            .a
            .iter()
            .copied()
            .zip(entry.m.iter().copied())
            .collect();
        let key = CorrelatorKey::new(doc.r, entry.g, insertions)
            .map_err(|e| entry_error(src, index, e))?;
        let value = BigRational::from_str(&entry.value).map_err(|e| {
            entry_error(
                src,
                index,
                Error::BadEntry(format!("value \"{}\": {e}", entry.value)),
            )
        })?;
        table
            .insert(key, value)
            .map_err(|e| entry_error(src, index, e))?;
    }
    Ok(table)
}

pub fn save_table<P: AsRef<Path>>(table: &CorrelatorTable, path: P) -> Result<()> {
    std::fs::write(path, render_table(table))?;
    Ok(())
}

pub fn load_table<P: AsRef<Path>>(path: P) -> Result<CorrelatorTable> {
    parse_table(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::seed_genus0_wk;

    fn seeded() -> CorrelatorTable {
        let mut t = CorrelatorTable::new(2, TableMode::Numeric).unwrap();
        seed_genus0_wk(&mut t, 6).unwrap();
        t
    }

    #[test]
    fn round_trip_preserves_the_table() {
        let table = seeded();
        let rendered = render_table(&table);
        let back = parse_table(&rendered).unwrap();
        assert_eq!(back, table);
        // Rendering is deterministic.
        assert_eq!(render_table(&back), rendered);
    }

    #[test]
    fn rendered_layout_is_one_entry_per_line() {
        let rendered = render_table(&seeded());
        let mut lines = rendered.lines();
        assert_eq!(
            lines.next(),
            Some("{\"r\": 2, \"mode\": \"numeric\", \"entries\": [")
        );
        assert_eq!(
            lines.next(),
            Some("{\"g\":0,\"a\":[0,0,0],\"m\":[0,0,0],\"value\":\"1\"},")
        );
        let empty = CorrelatorTable::new(3, TableMode::Formal).unwrap();
        assert_eq!(
            render_table(&empty),
            "{\"r\": 3, \"mode\": \"formal\", \"entries\": []}\n"
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_table("{\"r\": 2, \"mode\"").unwrap_err();
        let Error::BadTable(msg) = err else {
            panic!("wrong error kind")
        };
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn malformed_entries_point_at_their_line() {
        let src = "{\"r\": 2, \"mode\": \"numeric\", \"entries\": [\n\
                   {\"g\":0,\"a\":[0,0,0],\"m\":[0,0,0],\"value\":\"1\"},\n\
                   {\"g\":0,\"a\":[1,0],\"m\":[0,0,0],\"value\":\"1\"}\n\
                   ]}\n";
        let Error::BadEntry(msg) = parse_table(src).unwrap_err() else {
            panic!("wrong error kind")
        };
        assert!(msg.starts_with("line 3:"), "{msg}");
        assert!(msg.contains("2 psi powers against 3 types"), "{msg}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        let src = "{\"r\": 2, \"mode\": \"numeric\", \"entries\": [\n\
                   {\"g\":0,\"a\":[0,0,0],\"m\":[0,0,0],\"value\":\"one\"}\n\
                   ]}\n";
        let Error::BadEntry(msg) = parse_table(src).unwrap_err() else {
            panic!("wrong error kind")
        };
        assert!(msg.starts_with("line 2:"), "{msg}");
        assert!(msg.contains("\"one\""), "{msg}");
    }

    #[test]
    fn semantic_violations_are_rejected() {
        // Type index out of range.
        let src = "{\"r\": 2, \"mode\": \"numeric\", \"entries\": [\n\
                   {\"g\":0,\"a\":[0,0,0],\"m\":[2,0,0],\"value\":\"1\"}\n\
                   ]}\n";
        assert!(matches!(parse_table(src), Err(Error::BadEntry(_))));
        // Dimension count broken.
        let src = "{\"r\": 2, \"mode\": \"numeric\", \"entries\": [\n\
                   {\"g\":0,\"a\":[2,0,0],\"m\":[0,0,0],\"value\":\"1\"}\n\
                   ]}\n";
        assert!(matches!(parse_table(src), Err(Error::BadEntry(_))));
        // Vanishing key with a nonzero value; zero is accepted.
        let src = "{\"r\": 2, \"mode\": \"numeric\", \"entries\": [\n\
                   {\"g\":0,\"a\":[0,0,0,0],\"m\":[1,1,0,0],\"value\":\"5\"}\n\
                   ]}\n";
        assert!(matches!(parse_table(src), Err(Error::BadEntry(_))));
        let src = "{\"r\": 2, \"mode\": \"numeric\", \"entries\": [\n\
                   {\"g\":0,\"a\":[0,0,0,0],\"m\":[1,1,0,0],\"value\":\"0\"}\n\
                   ]}\n";
        assert!(parse_table(src).is_ok());
        // Duplicate keys, even in permuted form.
        let src = "{\"r\": 2, \"mode\": \"numeric\", \"entries\": [\n\
                   {\"g\":0,\"a\":[1,0,0,0],\"m\":[0,0,0,0],\"value\":\"1\"},\n\
                   {\"g\":0,\"a\":[0,1,0,0],\"m\":[0,0,0,0],\"value\":\"1\"}\n\
                   ]}\n";
        let Error::BadEntry(msg) = parse_table(src).unwrap_err() else {
            panic!("wrong error kind")
        };
        assert!(msg.starts_with("line 3:"), "{msg}");
        assert!(msg.contains("duplicate"), "{msg}");
    }

    #[test]
    fn mode_is_validated() {
        let src = "{\"r\": 2, \"mode\": \"lazy\", \"entries\": []}";
        assert!(matches!(parse_table(src), Err(Error::BadTable(_))));
        let src = "{\"r\": 2, \"mode\": \"formal\", \"entries\": [\n\
                   {\"g\":0,\"a\":[0,0,0],\"m\":[0,0,0],\"value\":\"1\"}\n\
                   ]}\n";
        assert!(matches!(parse_table(src), Err(Error::BadTable(_))));
        let src = "{\"r\": 1, \"mode\": \"numeric\", \"entries\": []}";
        assert!(matches!(parse_table(src), Err(Error::BadTable(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("rspin-store-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("wk.tbl");
        let table = seeded();
        save_table(&table, &path).unwrap();
        let back = load_table(&path).unwrap();
        assert_eq!(back, table);
        std::fs::remove_file(&path).ok();
    }
}
