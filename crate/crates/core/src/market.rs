//! Finite filtered markets as event trees.
//!
//! A [`MarketTree`] holds one node per atom of the filtration, each carrying a
//! d-dimensional non-negative price vector and the transition probability from
//! its parent. Conditional objects (supports, essential bounds) are exact
//! per-node computations.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::payoff::PayoffSpec;

/// Probabilities out of a node must sum to one within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Index of a node inside its tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One atom of the filtration: a dated price vector reached from its parent
/// with a strictly positive probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    name: String,
    time: usize,
    price: Vec<f64>,
    parent: Option<NodeId>,
    prob: f64,
    children: Vec<NodeId>,
}

impl Node {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn price(&self) -> &[f64] {
        &self.price
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    /// Probability of reaching this node from its parent (1 for the root).
    pub fn prob(&self) -> f64 {
        self.prob
    }

    pub fn children(&self) -> &[NodeId] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Raw node description used to build a [`MarketTree`].
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub name: String,
    pub time: usize,
    pub price: Vec<f64>,
    pub parent: Option<String>,
    pub prob: f64,
}

/// A finite filtered market: an event tree with per-node price vectors.
///
/// Immutable after construction; cheap to share read-only across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketTree {
    dim: usize,
    horizon: usize,
    nodes: Vec<Node>,
    root: NodeId,
}

impl MarketTree {
    /// Builds and fully validates a tree from raw node descriptions.
    ///
    /// Node order is preserved. Checks: a unique root at time 0, parent/child
    /// time consistency, all leaves at the horizon, non-negative finite
    /// prices of the stated dimension, strictly positive transition
    /// probabilities summing to one under every non-leaf node.
    pub fn from_nodes(dim: usize, horizon: usize, specs: Vec<NodeSpec>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation(None, "dim must be >= 1"));
        }
        if horizon == 0 {
            return Err(Error::validation(None, "horizon must be >= 1"));
        }
        let mut index: BTreeMap<String, NodeId> = BTreeMap::new();
        for (i, spec) in specs.iter().enumerate() {
            if index.insert(spec.name.clone(), NodeId(i)).is_some() {
                return Err(Error::validation(Some(&spec.name), "duplicate node id"));
            }
        }

        let mut nodes = Vec::with_capacity(specs.len());
        let mut root = None;
        for spec in &specs {
            if spec.price.len() != dim {
                return Err(Error::validation(
                    Some(&spec.name),
                    format!(
                        "price has {} components, expected {}",
                        spec.price.len(),
                        dim
                    ),
                ));
            }
            for &p in &spec.price {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::validation(
                        Some(&spec.name),
                        format!("price component {p} is not a finite non-negative number"),
                    ));
                }
            }
            if !spec.prob.is_finite() || spec.prob <= 0.0 || spec.prob > 1.0 {
                return Err(Error::validation(
                    Some(&spec.name),
                    format!("transition probability {} is outside (0, 1]", spec.prob),
                ));
            }
            if spec.time > horizon {
                return Err(Error::validation(
                    Some(&spec.name),
                    format!("time {} exceeds horizon {}", spec.time, horizon),
                ));
            }
            let parent = match &spec.parent {
                None => {
                    if spec.time != 0 {
                        return Err(Error::validation(
                            Some(&spec.name),
                            "only the time-0 root may lack a parent",
                        ));
                    }
                    if root.is_some() {
                        return Err(Error::validation(Some(&spec.name), "second root found"));
                    }
                    if spec.prob != 1.0 {
                        return Err(Error::validation(
                            Some(&spec.name),
                            "root probability must be exactly 1",
                        ));
                    }
                    root = Some(NodeId(nodes.len()));
                    None
                }
                Some(p) => {
                    let pid = *index.get(p).ok_or_else(|| {
                        Error::parse(Some(&spec.name), "parent", format!("unknown parent `{p}`"))
                    })?;
                    Some(pid)
                }
            };
            nodes.push(Node {
                name: spec.name.clone(),
                time: spec.time,
                price: spec.price.clone(),
                parent,
                prob: spec.prob,
                children: Vec::new(),
            });
        }
        let root = root.ok_or_else(|| Error::validation(None, "no root node"))?;

        let links: Vec<(usize, NodeId)> = nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.parent.map(|p| (i, p)))
            .collect();
        for (child, parent) in links {
            let (pt, name) = (nodes[parent.0].time, nodes[child].name.clone());
            if nodes[child].time != pt + 1 {
                return Err(Error::validation(
                    Some(&name),
                    format!("time {} is not parent time {} + 1", nodes[child].time, pt),
                ));
            }
            nodes[parent.0].children.push(NodeId(child));
        }

        for node in &nodes {
            if node.time < horizon && node.children.is_empty() {
                return Err(Error::validation(
                    Some(&node.name),
                    format!(
                        "node at time {} before horizon {} has no children",
                        node.time, horizon
                    ),
                ));
            }
            if node.time == horizon && !node.children.is_empty() {
                return Err(Error::validation(
                    Some(&node.name),
                    "node at the horizon has children",
                ));
            }
            if !node.children.is_empty() {
                let total: f64 = node.children.iter().map(|c| nodes[c.0].prob).sum();
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::validation(
                        Some(&node.name),
                        format!("child probabilities sum to {total}, not 1"),
                    ));
                }
            }
        }

        Ok(MarketTree {
            dim,
            horizon,
            nodes,
            root,
        })
    }

    /// One-step market: a root priced `y` and one child per `(price, prob)` pair.
    pub fn one_step(y: Vec<f64>, children: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let dim = y.len();
        let mut specs = vec![NodeSpec {
            name: "r".into(),
            time: 0,
            price: y,
            parent: None,
            prob: 1.0,
        }];
        for (i, (price, prob)) in children.into_iter().enumerate() {
            specs.push(NodeSpec {
                name: format!("c{i}"),
                time: 1,
                price,
                parent: Some("r".into()),
                prob,
            });
        }
        MarketTree::from_nodes(dim, 1, specs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn nodes_at(&self, time: usize) -> Vec<NodeId> {
        self.nodes()
            .filter(|(_, n)| n.time == time)
            .map(|(id, _)| id)
            .collect()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes()
            .filter(|(_, n)| n.is_leaf())
            .map(|(id, _)| id)
            .collect()
    }

    /// Probability of reaching `id` from the root.
    pub fn reach_prob(&self, id: NodeId) -> f64 {
        let mut p = 1.0;
        let mut cur = id;
        while let Some(parent) = self.nodes[cur.0].parent {
            p *= self.nodes[cur.0].prob;
            cur = parent;
        }
        p
    }

    /// Leaves of the subtree rooted at `id`.
    pub fn leaves_under(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if self.nodes[n.0].is_leaf() {
                out.push(n);
            } else {
                stack.extend(self.nodes[n.0].children.iter().rev().copied());
            }
        }
        out
    }
}

/// The conditional support of next-period prices at a node: the de-duplicated
/// set of child price vectors. Duplicates merge by exact bitwise equality;
/// no epsilon merging, so modelling errors stay visible.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    owner: NodeId,
    points: Vec<Vec<f64>>,
}

impl SupportSet {
    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn contains(&self, price: &[f64]) -> bool {
        self.points.iter().any(|p| bitwise_eq(p, price))
    }
}

pub(crate) fn bitwise_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Conditional support of the next-period price at `node`.
pub fn conditional_support(tree: &MarketTree, node: NodeId) -> Result<SupportSet> {
    let n = tree.node(node);
    if n.is_leaf() {
        return Err(Error::NoSuccessors {
            node: n.name().to_owned(),
        });
    }
    let mut points: Vec<Vec<f64>> = Vec::new();
    for &c in n.children() {
        let price = tree.node(c).price();
        if !points.iter().any(|p| bitwise_eq(p, price)) {
            points.push(price.to_vec());
        }
    }
    Ok(SupportSet {
        owner: node,
        points,
    })
}

/// Conditional essential bounds of a one-dimensional support.
///
/// On a finite support both bounds are attained and the convex envelope of
/// the support is exactly `[essinf, esssup]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialBounds {
    essinf: f64,
    /// May be `f64::INFINITY` for analytic model inputs, never on trees.
    esssup: f64,
}

impl EssentialBounds {
    pub fn new(essinf: f64, esssup: f64) -> Result<Self> {
        if essinf.is_nan() || esssup.is_nan() || essinf > esssup || essinf.is_infinite() {
            return Err(Error::validation(
                None,
                format!("invalid essential bounds [{essinf}, {esssup}]"),
            ));
        }
        Ok(EssentialBounds { essinf, esssup })
    }

    pub fn essinf(&self) -> f64 {
        self.essinf
    }

    pub fn esssup(&self) -> f64 {
        self.esssup
    }

    pub fn is_degenerate(&self) -> bool {
        self.essinf == self.esssup
    }

    pub fn contains(&self, y: f64) -> bool {
        self.essinf <= y && y <= self.esssup
    }
}

/// Min and max of a one-dimensional support; errors on other dimensions.
pub fn essential_bounds(support: &SupportSet) -> Result<EssentialBounds> {
    if support.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: support.dim(),
        });
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in support.points() {
        lo = lo.min(p[0]);
        hi = hi.max(p[0]);
    }
    EssentialBounds::new(lo, hi)
}

/// Conditional essential supremum of `h(Y)`: the plain maximum of `h` over
/// the finite support.
pub fn conditional_esssup_of_function(support: &SupportSet, h: &PayoffSpec) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for p in support.points() {
        best = best.max(h.eval_price(p)?);
    }
    Ok(best)
}

/// Same computation for an arbitrary function of the price.
pub fn esssup_on_support(support: &SupportSet, h: impl Fn(&[f64]) -> f64) -> f64 {
    support
        .points()
        .iter()
        .map(|p| h(p))
        .fold(f64::NEG_INFINITY, f64::max)
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

/// Formats a float with 17 significant digits, enough to reproduce the exact
/// binary value on reload.
pub fn fmt_float(x: f64) -> String {
    if x == f64::INFINITY {
        return "inf".into();
    }
    if x == f64::NEG_INFINITY {
        return "-inf".into();
    }
    format!("{x:.16e}")
}

fn json_f64(v: &serde_json::Value, node: Option<&str>, field: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::parse(node, field, format!("expected a number, got {v}")))
}

fn json_usize(v: &serde_json::Value, node: Option<&str>, field: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| {
        Error::parse(
            node,
            field,
            format!("expected a non-negative integer, got {v}"),
        )
    })
}

/// Parses a market tree from its JSON document.
pub fn market_from_json(text: &str) -> Result<MarketTree> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::parse(None, "<document>", e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::parse(None, "<document>", "top level must be an object"))?;
    let get = |field: &str| -> Result<&serde_json::Value> {
        obj.get(field)
            .ok_or_else(|| Error::parse(None, field, "missing field"))
    };
    let dim = json_usize(get("dim")?, None, "dim")?;
    let horizon = json_usize(get("horizon")?, None, "horizon")?;
    let raw_nodes = get("nodes")?
        .as_array()
        .ok_or_else(|| Error::parse(None, "nodes", "expected an array"))?;

    let mut specs = Vec::with_capacity(raw_nodes.len());
    for (i, raw) in raw_nodes.iter().enumerate() {
        let fallback = format!("<node {i}>");
        let node = raw
            .as_object()
            .ok_or_else(|| Error::parse(Some(&fallback), "<node>", "expected an object"))?;
        let name = node
            .get("id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::parse(Some(&fallback), "id", "missing or non-string id"))?
            .to_owned();
        let field = |f: &str| -> Result<&serde_json::Value> {
            node.get(f)
                .ok_or_else(|| Error::parse(Some(&name), f, "missing field"))
        };
        let time = json_usize(field("time")?, Some(&name), "time")?;
        let price = field("price")?
            .as_array()
            .ok_or_else(|| Error::parse(Some(&name), "price", "expected an array"))?
            .iter()
            .map(|v| json_f64(v, Some(&name), "price"))
            .collect::<Result<Vec<f64>>>()?;
        let parent = match field("parent")? {
            serde_json::Value::Null => None,
            serde_json::Value::String(s) => Some(s.clone()),
            other => {
                return Err(Error::parse(
                    Some(&name),
                    "parent",
                    format!("expected a string or null, got {other}"),
                ))
            }
        };
        let prob = json_f64(field("prob")?, Some(&name), "prob")?;
        specs.push(NodeSpec {
            name,
            time,
            price,
            parent,
            prob,
        });
    }
    MarketTree::from_nodes(dim, horizon, specs)
}

/// Serializes a tree to its JSON document, floats at 17 significant digits.
pub fn market_to_json(tree: &MarketTree) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{{\"dim\": {}, \"horizon\": {}, \"nodes\": [\n",
        tree.dim(),
        tree.horizon()
    ));
    for (i, (_, node)) in tree.nodes().enumerate() {
        let price = node
            .price()
            .iter()
            .map(|&p| fmt_float(p))
            .collect::<Vec<_>>()
            .join(", ");
        let parent = match node.parent() {
            None => "null".to_owned(),
            Some(p) => format!("{:?}", tree.node(p).name()),
        };
        out.push_str(&format!(
            "  {{\"id\": {:?}, \"time\": {}, \"price\": [{}], \"parent\": {}, \"prob\": {}}}{}\n",
            node.name(),
            node.time(),
            price,
            parent,
            fmt_float(node.prob()),
            if i + 1 == tree.len() { "" } else { "," }
        ));
    }
    out.push_str("]}\n");
    out
}

pub fn load_market(path: impl AsRef<Path>) -> Result<MarketTree> {
    let text = std::fs::read_to_string(path)?;
    market_from_json(&text)
}

pub fn save_market(tree: &MarketTree, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(market_to_json(tree).as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

/// Reads a `date,price` CSV and returns the price column.
pub fn load_price_series(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(|e| Error::Calibration(format!("cannot read CSV: {e}")))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::Calibration(format!("bad CSV header: {e}")))?;
        if headers.len() < 2 || &headers[0] != "date" || &headers[1] != "price" {
            return Err(Error::Calibration(format!(
                "expected header `date,price`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }
    let mut prices = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Calibration(format!("row {}: {e}", i + 2)))?;
        let raw = record
            .get(1)
            .ok_or_else(|| Error::Calibration(format!("row {}: missing price", i + 2)))?;
        let price: f64 = raw
            .trim()
            .parse()
            .map_err(|e| Error::Calibration(format!("row {}: bad price `{raw}`: {e}", i + 2)))?;
        prices.push(price);
    }
    Ok(prices)
}

/// Rolling-window multiplier calibration.
///
/// With ratios `r_u = S_u / S_{u-1}`, each output pair is the min and max of
/// the last `window` ratios; one pair per position where a full window fits.
pub fn calibrate_multipliers(prices: &[f64], window: usize) -> Result<Vec<(f64, f64)>> {
    if window == 0 {
        return Err(Error::Calibration("window must be >= 1".into()));
    }
    if prices.len() < window + 1 {
        return Err(Error::Calibration(format!(
            "need at least window + 1 = {} prices, got {}",
            window + 1,
            prices.len()
        )));
    }
    for &p in prices {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::Calibration(format!(
                "prices must be strictly positive, got {p}"
            )));
        }
    }
    let ratios: Vec<f64> = prices.windows(2).map(|w| w[1] / w[0]).collect();
    let mut out = Vec::new();
    for end in window..=ratios.len() {
        let slice = &ratios[end - window..end];
        let kd = slice.iter().copied().fold(f64::INFINITY, f64::min);
        let ku = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.push((kd, ku));
    }
    Ok(out)
}
