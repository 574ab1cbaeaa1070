use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Directed graph whose arc list order defines the item universe.
///
/// Arc `i` is item `i`: cost vectors, incidence vectors and scenario columns
/// are all indexed by position in [`Graph::arcs`].
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    arcs: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(num_nodes: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut out = vec![Vec::new(); num_nodes];
        let mut inc = vec![Vec::new(); num_nodes];
        for (i, &(tail, head)) in arcs.iter().enumerate() {
            for end in [tail, head] {
                if end >= num_nodes {
                    return Err(Error::invalid(format!("arc {i}: endpoint {end} out of range")));
                }
            }
            out[tail].push(i);
            inc[head].push(i);
        }
        Ok(Graph { num_nodes, arcs, out, inc })
    }

    /// Parses the line-oriented graph format:
    ///
    /// ```text
    /// nodes <N>
    /// arcs <M>
    /// arc 0 <tail> <head>
    /// ...
    /// arc M-1 <tail> <head>
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let num_nodes = header(lines.next(), "nodes")?;
        let num_arcs = header(lines.next(), "arcs")?;
        let mut arcs = Vec::with_capacity(num_arcs);
        for (line_no, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "arc" {
                return Err(Error::parse(line_no, format!("expected `arc <index> <tail> <head>`, got `{line}`")));
            }
            let nums = fields[1..]
                .iter()
                .map(|f| f.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(line_no, format!("bad integer: {e}")))?;
            let (index, tail, head) = (nums[0], nums[1], nums[2]);
            if index < arcs.len() {
                return Err(Error::parse(line_no, format!("duplicate arc index {index}")));
            }
            if index != arcs.len() {
                return Err(Error::parse(line_no, format!("arc index {index} out of order, expected {}", arcs.len())));
            }
            if index >= num_arcs {
                return Err(Error::parse(line_no, format!("arc index {index} exceeds declared count {num_arcs}")));
            }
            for end in [tail, head] {
                if end >= num_nodes {
                    return Err(Error::parse(line_no, format!("endpoint {end} out of range")));
                }
            }
            arcs.push((tail, head));
        }
        if arcs.len() != num_arcs {
            return Err(Error::parse(
                text.lines().count(),
                format!("declared {num_arcs} arcs, found {}", arcs.len()),
            ));
        }
        Graph::new(num_nodes, arcs)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "nodes {}", self.num_nodes).unwrap();
        writeln!(s, "arcs {}", self.arcs.len()).unwrap();
        for (i, (t, h)) in self.arcs.iter().enumerate() {
            writeln!(s, "arc {i} {t} {h}").unwrap();
        }
        s
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn arc(&self, i: usize) -> (usize, usize) {
        self.arcs[i]
    }

    /// Indices of arcs leaving `node`, in item order.
    pub fn out_arcs(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    /// Indices of arcs entering `node`, in item order.
    pub fn in_arcs(&self, node: usize) -> &[usize] {
        &self.inc[node]
    }
}

fn header(line: Option<(usize, &str)>, key: &str) -> Result<usize> {
    let (line_no, line) = line.ok_or_else(|| Error::parse(0, format!("missing `{key}` header")))?;
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(k), Some(v), None) if k == key => v
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad `{key}` count: {e}"))),
        _ => Err(Error::parse(line_no, format!("malformed header, expected `{key} <count>`"))),
    }
}
