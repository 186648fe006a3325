//! Line-oriented forest text format. Fields are tab-separated.
//!
//! ```text
//! forest  <tree count>  <width>
//! params  trees=<T>  depth=<D>  bag=<f>  features=<auto|k>  balanced=<bool>  resampling=<auto|with|without>  sampling=<per_split|per_tree>  seed=<u64>
//! tree    <index>
//! node    <feature>  <threshold>     (followed by its high subtree, then its low subtree)
//! leaf    <p0>  <p1>
//! ```
//!
//! Nodes of each tree are listed in preorder. Floats use the shortest
//! representation that reads back to the same value.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{FeatureSampling, ForestError, ForestParams, RandomForest, Resampling, TreeNode};

pub fn format_forest(forest: &RandomForest) -> String {
    let mut out = String::new();
    let p = forest.params();
    writeln!(out, "forest\t{}\t{}", forest.tree_count(), forest.width()).unwrap();
    let features = p
        .features_per_split
        .map_or_else(|| "auto".to_string(), |k| k.to_string());
    let resampling = match p.resampling {
        Resampling::Auto => "auto",
        Resampling::WithReplacement => "with",
        Resampling::WithoutReplacement => "without",
    };
    let sampling = match p.feature_sampling {
        FeatureSampling::PerSplit => "per_split",
        FeatureSampling::PerTree => "per_tree",
    };
    writeln!(
        out,
        "params\ttrees={}\tdepth={}\tbag={}\tfeatures={features}\tbalanced={}\tresampling={resampling}\tsampling={sampling}\tseed={}",
        p.trees, p.max_depth, p.bag_fraction, p.balanced, p.seed
    )
    .unwrap();
    for (i, t) in forest.trees().iter().enumerate() {
        writeln!(out, "tree\t{i}").unwrap();
        write_node(&mut out, t);
    }
    out
}

fn write_node(out: &mut String, node: &TreeNode) {
    match node {
        TreeNode::Leaf { p0, p1 } => writeln!(out, "leaf\t{p0}\t{p1}").unwrap(),
        TreeNode::Split {
            feature,
            threshold,
            high,
            low,
        } => {
            writeln!(out, "node\t{feature}\t{threshold}").unwrap();
            write_node(out, high);
            write_node(out, low);
        }
    }
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            if !line.trim().is_empty() {
                return Some((i + 1, line.split('\t').map(str::trim).collect()));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ForestError> {
        self.next().ok_or_else(|| ForestError::Parse {
            line: 0,
            message: format!("unexpected end of input, expected {what}"),
        })
    }
}

fn err(line: usize, message: impl Into<String>) -> ForestError {
    ForestError::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: FromStr>(
    line: usize,
    fields: &[&str],
    at: usize,
    what: &str,
) -> Result<T, ForestError> {
    let raw = fields
        .get(at)
        .ok_or_else(|| err(line, format!("missing {what}")))?;
    raw.parse()
        .map_err(|_| err(line, format!("invalid {what} {raw:?}")))
}

pub fn parse_forest(text: &str) -> Result<RandomForest, ForestError> {
    let mut lines = Lines {
        inner: text.lines().enumerate().peekable(),
    };
    let (line, header) = lines.expect("forest header")?;
    if header.first() != Some(&"forest") || header.len() != 3 {
        return Err(err(line, "expected `forest <trees> <width>`"));
    }
    let count: usize = field(line, &header, 1, "tree count")?;
    let width: usize = field(line, &header, 2, "width")?;
    let (line, params_fields) = lines.expect("params line")?;
    let params = parse_params(line, &params_fields)?;

    let mut trees = Vec::with_capacity(count);
    for i in 0..count {
        let (line, tree) = lines.expect("tree line")?;
        if tree.first() != Some(&"tree") {
            return Err(err(line, format!("expected `tree {i}`")));
        }
        let index: usize = field(line, &tree, 1, "tree index")?;
        if index != i {
            return Err(err(line, format!("tree index {index}, expected {i}")));
        }
        trees.push(parse_node(&mut lines, width)?);
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, "trailing content after last tree"));
    }
    RandomForest::from_trees(width, trees, params)
}

fn parse_node(lines: &mut Lines<'_>, width: usize) -> Result<TreeNode, ForestError> {
    let (line, fields) = lines.expect("node or leaf")?;
    match fields.first().copied() {
        Some("leaf") => {
            let p0: f64 = field(line, &fields, 1, "p0")?;
            let p1: f64 = field(line, &fields, 2, "p1")?;
            let leaf = TreeNode::leaf(p0, p1);
            leaf.validate(width).map_err(|e| err(line, e.to_string()))?;
            Ok(leaf)
        }
        Some("node") => {
            let feature: usize = field(line, &fields, 1, "feature")?;
            let threshold: f64 = field(line, &fields, 2, "threshold")?;
            if feature >= width {
                return Err(err(
                    line,
                    format!("feature {feature} outside width {width}"),
                ));
            }
            let high = parse_node(lines, width)?;
            let low = parse_node(lines, width)?;
            Ok(TreeNode::split(feature, threshold, high, low))
        }
        other => Err(err(line, format!("expected node or leaf, found {other:?}"))),
    }
}

fn parse_params(line: usize, fields: &[&str]) -> Result<ForestParams, ForestError> {
    if fields.first() != Some(&"params") {
        return Err(err(line, "expected params line"));
    }
    let mut p = ForestParams::default();
    for kv in &fields[1..] {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected key=value, found {kv:?}")))?;
        let bad = || err(line, format!("invalid value {value:?} for {key}"));
        match key {
            "trees" => p.trees = value.parse().map_err(|_| bad())?,
            "depth" => p.max_depth = value.parse().map_err(|_| bad())?,
            "bag" => p.bag_fraction = value.parse().map_err(|_| bad())?,
            "features" => {
                p.features_per_split = match value {
                    "auto" => None,
                    k => Some(k.parse().map_err(|_| bad())?),
                }
            }
            "balanced" => p.balanced = value.parse().map_err(|_| bad())?,
            "resampling" => {
                p.resampling = match value {
                    "auto" => Resampling::Auto,
                    "with" => Resampling::WithReplacement,
                    "without" => Resampling::WithoutReplacement,
                    _ => return Err(bad()),
                }
            }
            "sampling" => {
                p.feature_sampling = match value {
                    "per_split" => FeatureSampling::PerSplit,
                    "per_tree" => FeatureSampling::PerTree,
                    _ => return Err(bad()),
                }
            }
            "seed" => p.seed = value.parse().map_err(|_| bad())?,
            _ => return Err(err(line, format!("unknown parameter {key:?}"))),
        }
    }
    Ok(p)
}

pub fn write_forest(forest: &RandomForest, path: impl AsRef<Path>) -> Result<(), ForestError> {
    std::fs::write(path, format_forest(forest))?;
    Ok(())
}

pub fn read_forest(path: impl AsRef<Path>) -> Result<RandomForest, ForestError> {
    parse_forest(&std::fs::read_to_string(path)?)
}
