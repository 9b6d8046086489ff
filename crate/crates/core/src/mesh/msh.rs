//! Gmsh MSH 2.2 ASCII reader and writer.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::{signed_area, BoundaryEdge, Mesh, PhysicalName, MIN_ELEMENT_AREA};
use crate::{Error, Result};

const LINE: u32 = 1;
const TRIANGLE: u32 = 2;
const POINT: u32 = 15;

/// Name given to exterior edges that carry no physical tag in the file.
pub const UNTAGGED_BOUNDARY: &str = "boundary:untagged";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Elements of types other than point, line and triangle.
    pub skipped_elements: usize,
    /// Clockwise triangles whose orientation was flipped on load.
    pub reoriented: usize,
    /// Exterior edges added under [`UNTAGGED_BOUNDARY`].
    pub untagged_boundary_edges: usize,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if !t.is_empty() {
                self.last = i + 1;
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_line()
            .ok_or_else(|| Error::Parse { line: self.last + 1, message: format!("unexpected end of file, expected {what}") })
    }

    fn expect_exact(&mut self, token: &str) -> Result<()> {
        let (n, l) = self.expect(token)?;
        if l != token {
            return Err(Error::Parse { line: n, message: format!("expected {token}, found {l:?}") });
        }
        Ok(())
    }

    fn count(&mut self, section: &str) -> Result<usize> {
        let (n, l) = self.expect(section)?;
        l.parse()
            .map_err(|_| Error::Parse { line: n, message: format!("expected entry count for {section}, found {l:?}") })
    }
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse { line, message: format!("malformed {what}") })
}

/// Parses an MSH 2.2 ASCII mesh. Unknown element types are skipped and
/// counted in the returned report.
pub fn load_msh(text: &str) -> Result<(Mesh, LoadReport)> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let mut report = LoadReport::default();
    let mut names: BTreeMap<u32, PhysicalName> = BTreeMap::new();
    let mut node_index: HashMap<u64, usize> = HashMap::new();
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let mut elements: Vec<[usize; 3]> = Vec::new();
    let mut regions: Vec<u32> = Vec::new();
    let mut lines_raw: Vec<(usize, [usize; 2], u32)> = Vec::new();
    let mut seen_format = false;
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some((n, header)) = lines.next_line() {
        match header {
            "$MeshFormat" => {
                let (ln, l) = lines.expect("format line")?;
                let mut it = l.split_whitespace();
                let version = it.next().unwrap_or("");
                if version != "2.2" {
                    return Err(Error::UnsupportedVersion(version.to_string()));
                }
                let file_type: u32 = parse(it.next(), ln, "file type")?;
                if file_type != 0 {
                    return Err(Error::UnsupportedVersion(format!("{version} binary")));
                }
                lines.expect_exact("$EndMeshFormat")?;
                seen_format = true;
            }
            "$PhysicalNames" => {
                let count = lines.count("$PhysicalNames")?;
                for _ in 0..count {
                    let (ln, l) = lines.expect("physical name")?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let dim: u8 = parse(it.next(), ln, "physical dimension")?;
                    let tag: u32 = parse(it.next(), ln, "physical tag")?;
                    let name = it.next().unwrap_or("").trim().trim_matches('"').to_string();
                    if names.insert(tag, PhysicalName { dim, name }).is_some() {
                        return Err(Error::Parse { line: ln, message: format!("duplicate physical tag {tag}") });
                    }
                }
                lines.expect_exact("$EndPhysicalNames")?;
            }
            "$Nodes" => {
                let count = lines.count("$Nodes")?;
                nodes.reserve(count);
                for _ in 0..count {
                    let (ln, l) = lines.expect("node")?;
                    let mut it = l.split_whitespace();
                    let id: u64 = parse(it.next(), ln, "node id")?;
                    let x: f64 = parse(it.next(), ln, "node x")?;
                    let y: f64 = parse(it.next(), ln, "node y")?;
                    if node_index.insert(id, nodes.len()).is_some() {
                        return Err(Error::Parse { line: ln, message: format!("duplicate node id {id}") });
                    }
                    nodes.push([x, y]);
                }
                lines.expect_exact("$EndNodes")?;
                seen_nodes = true;
            }
            "$Elements" => {
                let count = lines.count("$Elements")?;
                for _ in 0..count {
                    let (ln, l) = lines.expect("element")?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    let ty: u32 = parse(f.get(1).copied(), ln, "element type")?;
                    let ntags: usize = parse(f.get(2).copied(), ln, "tag count")?;
                    let physical: u32 = if ntags > 0 { parse(f.get(3).copied(), ln, "physical tag")? } else { 0 };
                    let conn = &f[(3 + ntags).min(f.len())..];
                    let resolve = |k: usize| -> Result<usize> {
                        let id: u64 = parse(conn.get(k).copied(), ln, "element node")?;
                        node_index
                            .get(&id)
                            .copied()
                            .ok_or_else(|| Error::Parse { line: ln, message: format!("unknown node id {id}") })
                    };
                    match ty {
                        TRIANGLE => {
                            let mut el = [resolve(0)?, resolve(1)?, resolve(2)?];
                            let a = signed_area(nodes[el[0]], nodes[el[1]], nodes[el[2]]);
                            if a.abs() < MIN_ELEMENT_AREA {
                                return Err(Error::Parse { line: ln, message: format!("degenerate triangle (area {a:e})") });
                            }
                            if a < 0.0 {
                                el.swap(1, 2);
                                report.reoriented += 1;
                            }
                            elements.push(el);
                            regions.push(physical);
                        }
                        LINE => lines_raw.push((ln, [resolve(0)?, resolve(1)?], physical)),
                        POINT => {}
                        _ => report.skipped_elements += 1,
                    }
                }
                lines.expect_exact("$EndElements")?;
                seen_elements = true;
            }
            other if other.starts_with("$End") => {
                return Err(Error::Parse { line: n, message: format!("unmatched section terminator {other}") });
            }
            other if other.starts_with('$') => {
                // unknown section: skip to its terminator
                let end = format!("$End{}", &other[1..]);
                loop {
                    let (_, l) = lines.expect(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            other => {
                return Err(Error::Parse { line: n, message: format!("unexpected content {other:?} outside a section") });
            }
        }
    }
    if !seen_format {
        return Err(Error::Parse { line: 1, message: "missing $MeshFormat section".into() });
    }
    if !seen_nodes || !seen_elements {
        return Err(Error::Parse { line: lines.last, message: "missing $Nodes or $Elements section".into() });
    }

    let table = super::EdgeTable::build(&elements);
    let mut exterior: HashMap<(usize, usize), bool> = table
        .edges
        .iter()
        .zip(&table.multiplicity)
        .filter(|(_, &m)| m == 1)
        .map(|(e, _)| ((e[0], e[1]), false))
        .collect();
    let mut boundary = Vec::with_capacity(lines_raw.len());
    for (ln, nodes2, tag) in lines_raw {
        let key = (nodes2[0].min(nodes2[1]), nodes2[0].max(nodes2[1]));
        match exterior.get_mut(&key) {
            Some(seen) if !*seen => {
                *seen = true;
                boundary.push(BoundaryEdge { nodes: nodes2, tag });
            }
            Some(_) => return Err(Error::Parse { line: ln, message: "duplicate boundary line element".into() }),
            None => {
                return Err(Error::Parse { line: ln, message: "line element is not on the mesh boundary".into() })
            }
        }
    }
    let mut missing: Vec<(usize, usize)> = exterior.iter().filter(|(_, s)| !**s).map(|(k, _)| *k).collect();
    if !missing.is_empty() {
        missing.sort_unstable();
        let tag = names.keys().next_back().copied().unwrap_or(0) + 1;
        names.insert(tag, PhysicalName { dim: 1, name: UNTAGGED_BOUNDARY.to_string() });
        report.untagged_boundary_edges = missing.len();
        boundary.extend(missing.into_iter().map(|(a, b)| BoundaryEdge { nodes: [a, b], tag }));
    }
    let mesh = Mesh::new(nodes, elements, regions, boundary, names)?;
    Ok((mesh, report))
}

/// Writes the mesh as MSH 2.2 ASCII. Coordinates use the shortest
/// round-tripping decimal form, so load → save is byte-stable.
pub fn save_msh(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    if !mesh.physical_names().is_empty() {
        let _ = writeln!(out, "$PhysicalNames\n{}", mesh.physical_names().len());
        for (tag, p) in mesh.physical_names() {
            let _ = writeln!(out, "{} {} \"{}\"", p.dim, tag, p.name);
        }
        out.push_str("$EndPhysicalNames\n");
    }
    let _ = writeln!(out, "$Nodes\n{}", mesh.num_nodes());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(out, "{} {} {} 0", i + 1, p[0], p[1]);
    }
    out.push_str("$EndNodes\n");
    let total = mesh.boundary_edges().len() + mesh.num_elements();
    let _ = writeln!(out, "$Elements\n{total}");
    let mut id = 1;
    for b in mesh.boundary_edges() {
        let _ = writeln!(out, "{id} {LINE} 2 {} {} {} {}", b.tag, b.tag, b.nodes[0] + 1, b.nodes[1] + 1);
        id += 1;
    }
    for (el, tag) in mesh.elements().iter().zip(mesh.region_tags()) {
        let _ = writeln!(out, "{id} {TRIANGLE} 2 {tag} {tag} {} {} {}", el[0] + 1, el[1] + 1, el[2] + 1);
        id += 1;
    }
    out.push_str("$EndElements\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::structured_rectangle;

    const UNIT_SQUARE: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
3
1 1 \"boundary:left\"
1 2 \"boundary:rest\"
2 3 \"dielectric:fill\"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
7
1 15 2 0 1 1
2 1 2 2 1 1 2
3 1 2 2 2 2 3
4 1 2 2 3 3 4
5 1 2 1 4 4 1
6 2 2 3 1 1 2 3
7 2 2 3 1 1 3 4
$EndElements
";

    #[test]
    fn loads_two_triangle_square() {
        let (m, report) = load_msh(UNIT_SQUARE).unwrap();
        assert_eq!(m.num_nodes(), 4);
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.boundary_edges().len(), 4);
        assert_eq!(report, LoadReport::default());
        assert_eq!(m.boundary_nodes(m.tag_by_name("boundary:left").unwrap()), vec![0, 3]);
    }

    #[test]
    fn rejects_other_versions() {
        let text = UNIT_SQUARE.replace("2.2 0 8", "4.1 0 8");
        assert!(matches!(load_msh(&text), Err(Error::UnsupportedVersion(v)) if v == "4.1"));
    }

    #[test]
    fn missing_terminator_reports_line() {
        let text = UNIT_SQUARE.replace("$EndNodes\n", "");
        match load_msh(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 16),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let text = UNIT_SQUARE.replace("3 1 1 0\n", "3 1 0 0\n").replace("4 0 1 0", "4 0 0 0");
        assert!(matches!(load_msh(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_types_counted_and_clockwise_flipped() {
        let text = UNIT_SQUARE
            .replace("7\n1 15", "8\n1 15")
            .replace("$EndElements", "8 4 2 3 1 1 2 3 4\n$EndElements")
            .replace("6 2 2 3 1 1 2 3", "6 2 2 3 1 1 3 2");
        let (m, report) = load_msh(&text).unwrap();
        assert_eq!(report.skipped_elements, 1);
        assert_eq!(report.reoriented, 1);
        m.validate().unwrap();
    }

    #[test]
    fn untagged_boundary_filled_in() {
        let text = UNIT_SQUARE
            .replace("7\n1 15", "6\n1 15")
            .replace("5 1 2 1 4 4 1\n", "");
        let (m, report) = load_msh(&text).unwrap();
        assert_eq!(report.untagged_boundary_edges, 1);
        assert!(m.tag_by_name(UNTAGGED_BOUNDARY).is_some());
    }

    #[test]
    fn header_and_no_names_section() {
        let m = structured_rectangle(1.0, 1.0, 1, 1);
        let text = save_msh(&m);
        assert!(text.starts_with("$MeshFormat\n2.2 0 8\n"));
        let bare = Mesh::from_parts_unchecked(
            m.nodes().to_vec(),
            m.elements().to_vec(),
            m.region_tags().to_vec(),
            vec![],
            BTreeMap::new(),
        );
        assert!(!save_msh(&bare).contains("$PhysicalNames"));
    }

    #[test]
    fn save_is_idempotent() {
        let m = structured_rectangle(1.0, 0.7, 7, 3);
        let once = save_msh(&m);
        let (back, _) = load_msh(&once).unwrap();
        assert_eq!(back, m);
        assert_eq!(save_msh(&back), once);
    }
}
