use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use super::{Graph, NodeId};
use crate::{Error, Result};

/// Comment directive declaring a node that may have no incident edges.
///
/// Plain edge-list readers skip it like any other comment.
const NODE_DIRECTIVE: &str = "# node ";

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compression {
    /// Sniff the gzip magic bytes.
    #[default]
    Auto,
    None,
    Gzip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeListFormat {
    pub compression: Compression,
    pub drop_self_loops: bool,
}

/// Reads a whitespace-separated `src dst` edge list.
///
/// Node ids are arbitrary non-negative integers; they are remapped to
/// `0..n` in order of first appearance and the originals are kept on the
/// graph. Duplicate edges and self-loops are kept unless
/// `fmt.drop_self_loops` is set.
pub fn load_edge_list<R: Read>(source: R, fmt: EdgeListFormat) -> Result<Graph> {
    let mut reader = BufReader::new(source);
    let gzip = match fmt.compression {
        Compression::Gzip => true,
        Compression::None => false,
        Compression::Auto => reader.fill_buf()?.starts_with(&GZIP_MAGIC),
    };
    if gzip {
        parse(BufReader::new(MultiGzDecoder::new(reader)), fmt)
    } else {
        parse(reader, fmt)
    }
}

pub fn load_edge_list_path(path: impl AsRef<Path>, fmt: EdgeListFormat) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_edge_list(file, fmt).map_err(|e| match e {
        Error::Stream(source) => Error::io(path, source),
        other => other,
    })
}

#[derive(Default)]
struct IdMap {
    index: HashMap<u64, NodeId>,
    ids: Vec<u64>,
}

impl IdMap {
    fn get_or_insert(&mut self, id: u64, line: usize) -> Result<NodeId> {
        if let Some(&i) = self.index.get(&id) {
            return Ok(i);
        }
        let next = NodeId::try_from(self.ids.len()).map_err(|_| Error::Parse {
            line,
            message: "too many distinct node ids".into(),
        })?;
        self.index.insert(id, next);
        self.ids.push(id);
        Ok(next)
    }
}

fn parse_id(token: &str, line: usize) -> Result<u64> {
    token.parse::<u64>().map_err(|_| Error::Parse {
        line,
        message: format!("expected a non-negative integer node id, found {token:?}"),
    })
}

fn parse<R: BufRead>(reader: R, fmt: EdgeListFormat) -> Result<Graph> {
    let mut ids = IdMap::default();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix(NODE_DIRECTIVE) {
            ids.get_or_insert(parse_id(rest.trim(), lineno)?, lineno)?;
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(src), Some(dst), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: "expected exactly two fields: src dst".into(),
            });
        };
        let (src, dst) = (parse_id(src, lineno)?, parse_id(dst, lineno)?);
        if fmt.drop_self_loops && src == dst {
            continue;
        }
        let s = ids.get_or_insert(src, lineno)?;
        let d = ids.get_or_insert(dst, lineno)?;
        edges.push((s, d));
    }
    if ids.ids.is_empty() {
        return Err(Error::EmptyInput);
    }
    Graph::with_ids(ids.ids, &edges)
}

/// Writes `g` as an edge list using the original node ids.
///
/// Nodes without incident edges are declared with a `# node <id>` comment so
/// that reloading reproduces the node count.
pub fn write_edge_list<W: Write>(g: &Graph, sink: W) -> Result<()> {
    let mut w = BufWriter::new(sink);
    writeln!(w, "# nodes {} edges {}", g.num_nodes(), g.num_edges())?;
    for node in 0..g.num_nodes() as NodeId {
        if g.in_degree(node) == 0 && g.out_degree(node) == 0 {
            writeln!(w, "{NODE_DIRECTIVE}{}", g.original_id(node))?;
        }
    }
    for (src, dst) in g.edges() {
        writeln!(w, "{}\t{}", g.original_id(src), g.original_id(dst))?;
    }
    w.flush()?;
    Ok(())
}
