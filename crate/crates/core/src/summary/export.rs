use std::io::{self, Write};

use super::{PartitionId, SummaryMapping};
use crate::graph::TripleGraph;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MappingError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Writes `original_label<TAB>partition_id`, one line per original node.
pub fn write_mapping<W: Write>(
    g: &TripleGraph,
    mapping: &SummaryMapping,
    mut out: W,
) -> io::Result<()> {
    for (v, node) in g.nodes().iter().enumerate() {
        if node.label.contains(['\n', '\r']) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("node label {:?} contains a line break", node.label),
            ));
        }
        writeln!(out, "{}\t{}", node.label, mapping.partition_of(v))?;
    }
    out.flush()
}

/// Parses a mapping TSV. The partition id is the field after the last tab,
/// so labels may themselves contain tabs.
pub fn read_mapping(text: &str) -> Result<Vec<(String, PartitionId)>, MappingError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let Some((label, id)) = line.rsplit_once('\t') else {
            return Err(MappingError::Syntax {
                line: line_no,
                message: "expected label<TAB>partition_id".into(),
            });
        };
        if label.is_empty() {
            return Err(MappingError::Syntax {
                line: line_no,
                message: "empty node label".into(),
            });
        }
        let id = id
            .trim()
            .parse::<PartitionId>()
            .map_err(|_| MappingError::Syntax {
                line: line_no,
                message: format!("invalid partition id `{id}`"),
            })?;
        rows.push((label.to_string(), id));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{parse_ntriples_str, write_ntriples};
    use crate::summary::attribute_summary;

    #[test]
    fn mapping_tsv_round_trip() {
        let g = parse_ntriples_str(include_str!("../../fixtures/figure1.nt")).unwrap();
        let (_, m) = attribute_summary(&g);
        let mut buf = Vec::new();
        write_mapping(&g, &m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("<http://example.org/v1>\t0\n\"Book1\"\t1\n"));
        let rows = read_mapping(&text).unwrap();
        assert_eq!(rows.len(), g.num_nodes());
        for (v, (label, p)) in rows.iter().enumerate() {
            assert_eq!(label, &g.node(v).label);
            assert_eq!(*p, m.partition_of(v));
        }
    }

    #[test]
    fn labels_with_tabs_split_on_the_last_tab() {
        let rows = read_mapping("\"a\tb\"\t3\n").unwrap();
        assert_eq!(rows, vec![("\"a\tb\"".to_string(), 3)]);
    }

    #[test]
    fn malformed_mapping_lines() {
        assert!(matches!(
            read_mapping("<a> 1\n"),
            Err(MappingError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            read_mapping("<a>\t0\n<b>\tx\n"),
            Err(MappingError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            read_mapping("\t0\n"),
            Err(MappingError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn summary_exports_as_synthetic_iris() {
        let g = parse_ntriples_str(include_str!("../../fixtures/figure1.nt")).unwrap();
        let (s, _) = attribute_summary(&g);
        let mut buf = Vec::new();
        write_ntriples(&s.graph, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "<urn:summary:0> <http://example.org/title> <urn:summary:1> .\n\
             <urn:summary:2> <http://example.org/wrote> <urn:summary:0> .\n\
             <urn:summary:3> <http://example.org/friends> <urn:summary:2> .\n"
        );
        let reparsed = parse_ntriples_str(&text).unwrap();
        assert_eq!(reparsed.size(), s.graph.size());
    }
}
