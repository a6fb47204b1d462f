//! Plain-text graph interchange: a header file declaring `n`, `l` and the
//! layer names, plus one `node_a,node_b` edge-list file per layer.

use std::fs;
use std::path::Path;

use super::{GraphError, MultilayerTopology};

pub const HEADER_FILE: &str = "graph.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphHeader {
    pub n: usize,
    pub layers: Vec<String>,
}

fn valid_layer_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl GraphHeader {
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut n = None;
        let mut l = None;
        let mut layers = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| GraphError::parse(i + 1, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n" => {
                    let v = value
                        .parse()
                        .map_err(|_| GraphError::parse(i + 1, "n must be a count"))?;
                    if n.replace(v).is_some() {
                        return Err(GraphError::parse(i + 1, "n declared twice"));
                    }
                }
                "l" => {
                    let v: usize = value
                        .parse()
                        .map_err(|_| GraphError::parse(i + 1, "l must be a count"))?;
                    if l.replace(v).is_some() {
                        return Err(GraphError::parse(i + 1, "l declared twice"));
                    }
                }
                "layer" => {
                    if !valid_layer_name(value) {
                        return Err(GraphError::parse(
                            i + 1,
                            "layer names are [A-Za-z0-9_-]{1,64}",
                        ));
                    }
                    if layers.iter().any(|x| x == value) {
                        return Err(GraphError::parse(i + 1, "duplicate layer name"));
                    }
                    layers.push(value.to_string());
                }
                other => return Err(GraphError::parse(i + 1, &format!("unknown key `{other}`"))),
            }
        }
        let n = n.ok_or_else(|| GraphError::parse(0, "missing n"))?;
        let l = l.ok_or_else(|| GraphError::parse(0, "missing l"))?;
        if l == 0 {
            return Err(GraphError::NoLayers);
        }
        if layers.len() != l {
            return Err(GraphError::LayerCount {
                declared: l,
                found: layers.len(),
            });
        }
        Ok(Self { n, layers })
    }

    pub fn render(&self) -> String {
        let mut s = format!("n = {}\nl = {}\n", self.n, self.layers.len());
        for name in &self.layers {
            s.push_str(&format!("layer = {name}\n"));
        }
        s
    }
}

/// Parses `a,b` lines (0-based). Blank lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str, n: usize) -> Result<Vec<(usize, usize)>, GraphError> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| GraphError::parse(i + 1, "expected `a,b`"))?;
        let a: usize = a
            .trim()
            .parse()
            .map_err(|_| GraphError::parse(i + 1, "bad node index"))?;
        let b: usize = b
            .trim()
            .parse()
            .map_err(|_| GraphError::parse(i + 1, "bad node index"))?;
        if a >= n || b >= n {
            return Err(GraphError::parse(
                i + 1,
                &format!("node index out of range for n = {n}"),
            ));
        }
        if a == b {
            return Err(GraphError::parse(i + 1, "self edge"));
        }
        edges.push((a, b));
    }
    Ok(edges)
}

pub fn render_edge_list(edges: &[(usize, usize)]) -> String {
    let mut s = String::with_capacity(edges.len() * 10);
    for (a, b) in edges {
        s.push_str(&format!("{a},{b}\n"));
    }
    s
}

/// Writes `graph.txt` and `<layer>.edges` files into `dir`.
pub fn write_topology(dir: &Path, topology: &MultilayerTopology) -> Result<(), GraphError> {
    fs::create_dir_all(dir)?;
    let header = GraphHeader {
        n: topology.n(),
        layers: topology.layer_names().to_vec(),
    };
    fs::write(dir.join(HEADER_FILE), header.render())?;
    for (name, edges) in topology.layer_names().iter().zip(topology.intra_edges()) {
        fs::write(dir.join(format!("{name}.edges")), render_edge_list(edges))?;
    }
    Ok(())
}

pub fn read_topology(dir: &Path) -> Result<MultilayerTopology, GraphError> {
    let header = GraphHeader::parse(&fs::read_to_string(dir.join(HEADER_FILE))?)?;
    let mut layers = Vec::with_capacity(header.layers.len());
    for name in &header.layers {
        let text = fs::read_to_string(dir.join(format!("{name}.edges")))?;
        layers.push(parse_edge_list(&text, header.n)?);
    }
    MultilayerTopology::new(header.n, header.layers, &layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_roundtrip() {
        let h = GraphHeader {
            n: 7,
            layers: vec!["area".into(), "company".into()],
        };
        assert_eq!(GraphHeader::parse(&h.render()).unwrap(), h);
    }

    #[test]
    fn header_rejects_inconsistent_layer_count() {
        assert!(GraphHeader::parse("n = 3\nl = 2\nlayer = a\n").is_err());
        assert!(GraphHeader::parse("n = 3\nl = 1\nlayer = a\nbogus = 1\n").is_err());
        assert!(GraphHeader::parse("n = 3\nl = 1\nlayer = ../x\n").is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let edges = parse_edge_list("# comment\n0,1\n\n 2 , 1 \n", 3).unwrap();
        assert_eq!(edges, vec![(0, 1), (2, 1)]);
        assert!(parse_edge_list("0,3\n", 3).is_err());
        assert!(parse_edge_list("1,1\n", 3).is_err());
        assert!(parse_edge_list("0;1\n", 3).is_err());
    }

    #[test]
    fn topology_files_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let topo = MultilayerTopology::new(
            4,
            vec!["area".into(), "company".into()],
            &[vec![(0, 1), (2, 3)], vec![(1, 3)]],
        )
        .unwrap();
        write_topology(dir.path(), &topo).unwrap();
        assert_eq!(read_topology(dir.path()).unwrap(), topo);
    }
}
