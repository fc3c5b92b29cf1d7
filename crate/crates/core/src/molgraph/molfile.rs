//! MOL V2000 connection tables and SDF records.
//!
//! Only the connection table is read: element symbols and bonds. Coordinates,
//! charges, stereo flags and the property block are skipped.

use std::fmt::Write as _;

use thiserror::Error;

use super::MolecularGraph;

/// Relation count for molecular graphs: bond type codes 1..=4
/// (single, double, triple, aromatic).
pub const BOND_TYPES: usize = 4;

/// Parse failure; `line` is 1-based within the parsed text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed counts line")]
    MalformedCounts { line: usize },
    #[error("line {line}: unexpected end of input")]
    Truncated { line: usize },
    #[error("line {line}: malformed atom line")]
    MalformedAtom { line: usize },
    #[error("line {line}: malformed bond line")]
    MalformedBond { line: usize },
    #[error("line {line}: atom index {index} outside 1..={atoms}")]
    AtomIndexOutOfRange { line: usize, index: usize, atoms: usize },
    #[error("line {line}: bond type {code} not in {{1, 2, 3, 4}}")]
    BondType { line: usize, code: usize },
    #[error("line {line}: duplicate bond between atoms {a} and {b}")]
    DuplicateBond { line: usize, a: usize, b: usize },
    #[error("line {line}: bond from atom {atom} to itself")]
    SelfLoop { line: usize, atom: usize },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match *self {
            Self::MalformedCounts { line }
            | Self::Truncated { line }
            | Self::MalformedAtom { line }
            | Self::MalformedBond { line }
            | Self::AtomIndexOutOfRange { line, .. }
            | Self::BondType { line, .. }
            | Self::DuplicateBond { line, .. }
            | Self::SelfLoop { line, .. } => line,
        }
    }
}

/// One SDF record: title line, connection table and `> <NAME>` data items.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfRecord {
    pub title: String,
    pub graph: MolecularGraph,
    pub fields: Vec<(String, String)>,
}

impl SdfRecord {
    pub fn field(&self, name: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

fn fixed_usize(line: &str, start: usize, end: usize) -> Option<usize> {
    line.get(start..end.min(line.len()))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .and_then(|s| s.parse().ok())
}

/// Parses a single MOL V2000 block.
pub fn parse_molfile(text: &str) -> Result<MolecularGraph, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    parse_block(&lines, 0).map(|(g, _, _)| g)
}

/// Parses the connection table starting at `lines[0]` (header line 1).
/// Returns the graph, the title and the index of the first line after `M  END`
/// (or after the bond block when `M  END` is absent).
fn parse_block(lines: &[&str], offset: usize) -> Result<(MolecularGraph, String, usize), ParseError> {
    let lineno = |idx: usize| offset + idx + 1;
    let counts = lines.get(3).ok_or(ParseError::Truncated { line: lineno(lines.len()) })?;
    let atoms = fixed_usize(counts, 0, 3).ok_or(ParseError::MalformedCounts { line: lineno(3) })?;
    let bonds = fixed_usize(counts, 3, 6).ok_or(ParseError::MalformedCounts { line: lineno(3) })?;

    let mut elements = Vec::with_capacity(atoms);
    for k in 0..atoms {
        let idx = 4 + k;
        let line = lines.get(idx).ok_or(ParseError::Truncated { line: lineno(idx) })?;
        let symbol = line
            .get(31..34.min(line.len()))
            .map(str::trim)
            .filter(|s| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphabetic() || c == '*'))
            .or_else(|| line.split_whitespace().nth(3))
            .ok_or(ParseError::MalformedAtom { line: lineno(idx) })?;
        elements.push(symbol.to_string());
    }

    let mut edges = Vec::with_capacity(bonds);
    let mut seen = std::collections::HashSet::new();
    for k in 0..bonds {
        let idx = 4 + atoms + k;
        let line = lines.get(idx).ok_or(ParseError::Truncated { line: lineno(idx) })?;
        let n = lineno(idx);
        let fixed = (fixed_usize(line, 0, 3), fixed_usize(line, 3, 6), fixed_usize(line, 6, 9));
        let (a, b, code) = match fixed {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                let mut it = line.split_whitespace().map(str::parse::<usize>);
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(a)), Some(Ok(b)), Some(Ok(c))) => (a, b, c),
                    _ => return Err(ParseError::MalformedBond { line: n }),
                }
            }
        };
        for index in [a, b] {
            if index == 0 || index > atoms {
                return Err(ParseError::AtomIndexOutOfRange { line: n, index, atoms });
            }
        }
        if !(1..=BOND_TYPES).contains(&code) {
            return Err(ParseError::BondType { line: n, code });
        }
        if a == b {
            return Err(ParseError::SelfLoop { line: n, atom: a });
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(ParseError::DuplicateBond { line: n, a, b });
        }
        edges.push((a - 1, b - 1, code));
    }

    let mut next = 4 + atoms + bonds;
    if let Some(end) = lines[next.min(lines.len())..]
        .iter()
        .position(|l| l.trim_end() == "M  END")
    {
        next += end + 1;
    }

    let graph = MolecularGraph::new(elements, BOND_TYPES, &edges).expect("bond lines validated above");
    Ok((graph, lines[0].trim().to_string(), next))
}

/// Parses every record of an SDF file (records end with a `$$$$` line).
pub fn parse_sdf(text: &str) -> Result<Vec<SdfRecord>, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut records = Vec::new();
    let mut start = 0;
    while start < lines.len() {
        let end = lines[start..]
            .iter()
            .position(|l| l.trim_end() == "$$$$")
            .map_or(lines.len(), |p| start + p);
        let block = &lines[start..end];
        if block.iter().any(|l| !l.trim().is_empty()) {
            let (graph, title, after) = parse_block(block, start)?;
            let fields = parse_data_items(&block[after.min(block.len())..]);
            records.push(SdfRecord { title, graph, fields });
        }
        start = end + 1;
    }
    Ok(records)
}

fn parse_data_items(lines: &[&str]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        i += 1;
        if !line.starts_with('>') {
            continue;
        }
        let Some(name) = line.find('<').and_then(|a| line[a + 1..].find('>').map(|b| &line[a + 1..a + 1 + b])) else {
            continue;
        };
        let mut value = Vec::new();
        while i < lines.len() && !lines[i].trim().is_empty() {
            value.push(lines[i].trim_end());
            i += 1;
        }
        out.push((name.to_string(), value.join("\n")));
    }
    out
}

/// Writes a MOL V2000 block (zero coordinates). Relations must be bond type codes 1..=4.
pub fn write_molfile(graph: &MolecularGraph, title: &str) -> String {
    assert!(graph.num_relations() <= BOND_TYPES, "MOL bond types are limited to 1..=4");
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "  graphmem");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000",
        graph.num_nodes(),
        graph.num_edges()
    );
    for n in graph.nodes() {
        let _ = writeln!(
            s,
            "{:>10.4}{:>10.4}{:>10.4} {:<3} 0  0  0  0  0  0  0  0  0  0  0  0",
            0.0, 0.0, 0.0, n.element
        );
    }
    for e in graph.edges() {
        let _ = writeln!(s, "{:>3}{:>3}{:>3}  0", e.source + 1, e.target + 1, e.relation);
    }
    s.push_str("M  END\n");
    s
}
