//! Versioned text serialization of trees and forests.
//!
//! Model files are line-oriented UTF-8 with a magic header. Floating-point
//! fields are written with Rust's shortest round-trip decimal rendering, so
//! a load/save cycle is bit-exact. Grammar (one record per line, fields
//! separated by single spaces, names percent-escaped):
//!
//! ```text
//! cartforest-model v1
//! kind (tree|forest)
//! task (regression | classification <L>)
//! class <name>                      # L lines, classification only
//! target <name>
//! columns <p>
//! column <name> numeric
//! column <name> categorical <k> <level>*
//! # forests only:
//! forest ntree=<q> mtry=<m|-> nodesize=<s|-> resample=<kind> split=<mode> seed=<u64> nrows=<n> fingerprint=<u64> oob=<0|1>
//! # per member tree (forests) or once (single trees):
//! plan <kind> <w_0> ... <w_{n-1}>   # forests only
//! treeseed <u64>                    # forests only
//! tree <n_train> <n_nodes>
//! node <id> (leaf|split) n=<w> imp=<f> err=<f> pred=<...> [var=<j> rule=<...> left=<i> right=<i> nl=<w> nr=<w> maj=(L|R)]
//! comp <var> <rule> <decrease>      # attached to the preceding node
//! surr <var> <rule> <agreement>
//! endtree
//! end
//! ```
//!
//! Rules render as `t:<threshold>` or `c:<code>,<code>,...`; predictions as
//! `v:<value>` or `c:<class>:<p_0>,...,<p_{L-1}>`.

use crate::cart::{Node, Prediction, Split, SplitInfo, SplitRule, Tree};
use crate::data::{ColumnKind, Dataset, ResampleKind, ResamplePlan, Task};
use crate::ensemble::{Forest, ForestParams, SchemaInfo, TrainedTree};
use crate::cart::SplitMode;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "cartforest-model v1";

/// A loaded model: a single CART tree or a forest.
#[derive(Debug, Clone)]
pub enum Model {
    Tree { tree: Tree, schema: SchemaInfo },
    Forest(Forest),
}

impl Model {
    pub fn schema(&self) -> &SchemaInfo {
        match self {
            Model::Tree { schema, .. } => schema,
            Model::Forest(f) => &f.schema,
        }
    }

    pub fn task(&self) -> Task {
        match self {
            Model::Tree { tree, .. } => tree.task,
            Model::Forest(f) => f.task,
        }
    }
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '%' => out.push_str("%25"),
            ' ' => out.push_str("%20"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            _ => out.push(ch),
        }
    }
    if out.is_empty() {
        "%empty%".into()
    } else {
        out
    }
}

fn unesc(s: &str) -> Result<String> {
    if s == "%empty%" {
        return Ok(String::new());
    }
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(ch) = chars.next() {
        if ch != '%' {
            out.push(ch);
            continue;
        }
        let hex: String = chars.by_ref().take(2).collect();
        let code = u8::from_str_radix(&hex, 16)
            .map_err(|_| Error::Model(format!("bad escape in '{s}'")))?;
        out.push(code as char);
    }
    Ok(out)
}

fn f(v: f64) -> String {
    format!("{v}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Model(format!("bad float '{s}'")))
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Model(format!("bad number '{s}'")))
}

fn rule_str(rule: &SplitRule) -> String {
    match rule {
        SplitRule::Threshold(d) => format!("t:{}", f(*d)),
        SplitRule::Categories(set) => format!(
            "c:{}",
            set.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        ),
    }
}

fn parse_rule(s: &str) -> Result<SplitRule> {
    if let Some(rest) = s.strip_prefix("t:") {
        Ok(SplitRule::Threshold(parse_f64(rest)?))
    } else if let Some(rest) = s.strip_prefix("c:") {
        let set: Result<Vec<u32>> = rest.split(',').map(parse_num).collect();
        Ok(SplitRule::Categories(set?))
    } else {
        Err(Error::Model(format!("bad rule '{s}'")))
    }
}

fn pred_str(p: &Prediction) -> String {
    match p {
        Prediction::Value(v) => format!("v:{}", f(*v)),
        Prediction::Class { class, proportions } => format!(
            "c:{class}:{}",
            proportions.iter().map(|&x| f(x)).collect::<Vec<_>>().join(",")
        ),
    }
}

fn parse_pred(s: &str) -> Result<Prediction> {
    if let Some(rest) = s.strip_prefix("v:") {
        Ok(Prediction::Value(parse_f64(rest)?))
    } else if let Some(rest) = s.strip_prefix("c:") {
        let (class, props) = rest
            .split_once(':')
            .ok_or_else(|| Error::Model(format!("bad prediction '{s}'")))?;
        let proportions: Result<Vec<f64>> = props.split(',').map(parse_f64).collect();
        Ok(Prediction::Class {
            class: parse_num(class)?,
            proportions: proportions?,
        })
    } else {
        Err(Error::Model(format!("bad prediction '{s}'")))
    }
}

fn write_schema(out: &mut String, schema: &SchemaInfo, task: Task) {
    match task {
        Task::Regression => out.push_str("task regression\n"),
        Task::Classification { n_classes } => {
            let _ = writeln!(out, "task classification {n_classes}");
            if let Some(classes) = &schema.classes {
                for c in classes {
                    let _ = writeln!(out, "class {}", esc(c));
                }
            }
        }
    }
    let _ = writeln!(out, "target {}", esc(&schema.target_name));
    let _ = writeln!(out, "columns {}", schema.columns.len());
    for (name, kind) in &schema.columns {
        match kind {
            ColumnKind::Numeric => {
                let _ = writeln!(out, "column {} numeric", esc(name));
            }
            ColumnKind::Categorical { levels } => {
                let mut line = format!("column {} categorical {}", esc(name), levels.len());
                for l in levels {
                    line.push(' ');
                    line.push_str(&esc(l));
                }
                let _ = writeln!(out, "{line}");
            }
        }
    }
}

fn write_tree(out: &mut String, tree: &Tree) {
    let _ = writeln!(out, "tree {} {}", tree.n_train, tree.nodes.len());
    for node in &tree.nodes {
        match &node.split {
            None => {
                let _ = writeln!(
                    out,
                    "node {} leaf n={} imp={} err={} pred={}",
                    node.id,
                    node.n,
                    f(node.impurity),
                    f(node.error_sum),
                    pred_str(&node.prediction)
                );
            }
            Some(info) => {
                let _ = writeln!(
                    out,
                    "node {} split n={} imp={} err={} pred={} var={} rule={} dec={} left={} right={} nl={} nr={} maj={}",
                    node.id,
                    node.n,
                    f(node.impurity),
                    f(node.error_sum),
                    pred_str(&node.prediction),
                    info.split.var,
                    rule_str(&info.split.rule),
                    f(info.split.decrease),
                    info.left,
                    info.right,
                    info.n_left,
                    info.n_right,
                    if info.majority_left { "L" } else { "R" }
                );
                for c in &info.competing {
                    let _ = writeln!(out, "comp {} {} {}", c.var, rule_str(&c.rule), f(c.decrease));
                }
                for (s, agreement) in &info.surrogates {
                    let _ = writeln!(out, "surr {} {} {agreement}", s.var, rule_str(&s.rule));
                }
            }
        }
    }
    out.push_str("endtree\n");
}

fn resample_str(kind: ResampleKind) -> String {
    match kind {
        ResampleKind::Bootstrap => "bootstrap".into(),
        ResampleKind::Identity => "identity".into(),
        ResampleKind::Subsample { k } => format!("subsample:{k}"),
        ResampleKind::Blb { m } => format!("blb:{m}"),
    }
}

fn parse_resample(s: &str) -> Result<ResampleKind> {
    match s {
        "bootstrap" => Ok(ResampleKind::Bootstrap),
        "identity" => Ok(ResampleKind::Identity),
        _ => {
            if let Some(k) = s.strip_prefix("subsample:") {
                Ok(ResampleKind::Subsample { k: parse_num(k)? })
            } else if let Some(m) = s.strip_prefix("blb:") {
                Ok(ResampleKind::Blb { m: parse_num(m)? })
            } else {
                Err(Error::Model(format!("bad resample kind '{s}'")))
            }
        }
    }
}

fn split_mode_str(mode: SplitMode) -> String {
    match mode {
        SplitMode::Exhaustive => "exhaustive".into(),
        SplitMode::ExtraRandomized { thresholds_per_var } => format!("extra:{thresholds_per_var}"),
    }
}

fn parse_split_mode(s: &str) -> Result<SplitMode> {
    if s == "exhaustive" {
        Ok(SplitMode::Exhaustive)
    } else if let Some(rest) = s.strip_prefix("extra:") {
        Ok(SplitMode::ExtraRandomized {
            thresholds_per_var: parse_num(rest)?,
        })
    } else {
        Err(Error::Model(format!("bad split mode '{s}'")))
    }
}

/// Renders a single tree model.
pub fn tree_to_string(tree: &Tree, schema: &SchemaInfo) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push_str("\nkind tree\n");
    write_schema(&mut out, schema, tree.task);
    write_tree(&mut out, tree);
    out.push_str("end\n");
    out
}

/// Renders a forest model.
pub fn forest_to_string(forest: &Forest) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push_str("\nkind forest\n");
    write_schema(&mut out, &forest.schema, forest.task);
    let p = &forest.params;
    let _ = writeln!(
        out,
        "forest ntree={} mtry={} nodesize={} resample={} split={} seed={} nrows={} fingerprint={} oob={}",
        p.ntree,
        p.mtry.map_or("-".into(), |m| m.to_string()),
        p.nodesize.map_or("-".into(), |s| s.to_string()),
        p.resample.map_or("-".into(), resample_str),
        split_mode_str(p.split_mode),
        p.seed,
        forest.n_rows,
        forest.data_fingerprint,
        u8::from(forest.oob_available),
    );
    for t in &forest.trees {
        let mut line = format!("plan {}", resample_str(t.plan.kind));
        for &w in &t.plan.multiplicities {
            let _ = write!(line, " {w}");
        }
        let _ = writeln!(out, "{line}");
        let _ = writeln!(out, "treeseed {}", t.seed);
        write_tree(&mut out, &t.tree);
    }
    out.push_str("end\n");
    out
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    let text = match model {
        Model::Tree { tree, schema } => tree_to_string(tree, schema),
        Model::Forest(forest) => forest_to_string(forest),
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model> {
    parse(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    iter: std::iter::Peekable<std::str::Lines<'a>>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        self.iter
            .next()
            .ok_or_else(|| Error::Model("unexpected end of model file".into()))
    }

    fn peek(&mut self) -> Option<&&'a str> {
        self.iter.peek()
    }

    fn expect_tag<'b>(&mut self, tag: &str) -> Result<Vec<&'a str>> {
        let line = self.next_line()?;
        let mut parts = line.split(' ');
        let head = parts.next().unwrap_or("");
        if head != tag {
            return Err(Error::Model(format!(
                "line {}: expected '{tag}', found '{head}'",
                self.lineno
            )));
        }
        Ok(parts.collect())
    }
}

fn kv<'a>(field: &'a str, key: &str) -> Result<&'a str> {
    field
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::Model(format!("expected '{key}=...', found '{field}'")))
}

/// Parses a model from its text form.
pub fn parse(text: &str) -> Result<Model> {
    let mut lines = Lines {
        iter: text.lines().peekable(),
        lineno: 0,
    };
    let header = lines.next_line()?;
    if header != MAGIC {
        return Err(Error::Model(format!(
            "not a cartforest model (header '{header}')"
        )));
    }
    let kind = lines.expect_tag("kind")?;
    let task_fields = lines.expect_tag("task")?;
    let (task, n_classes) = match task_fields.as_slice() {
        ["regression"] => (Task::Regression, 0),
        ["classification", l] => {
            let l: usize = parse_num(l)?;
            (Task::Classification { n_classes: l }, l)
        }
        _ => return Err(Error::Model("bad task line".into())),
    };
    let mut classes = Vec::new();
    for _ in 0..n_classes {
        let fields = lines.expect_tag("class")?;
        classes.push(unesc(fields.first().ok_or_else(|| Error::Model("bad class line".into()))?)?);
    }
    let target_fields = lines.expect_tag("target")?;
    let target_name = unesc(
        target_fields
            .first()
            .ok_or_else(|| Error::Model("bad target line".into()))?,
    )?;
    let columns_fields = lines.expect_tag("columns")?;
    let p: usize = parse_num(
        columns_fields
            .first()
            .ok_or_else(|| Error::Model("bad columns line".into()))?,
    )?;
    let mut columns = Vec::with_capacity(p);
    for _ in 0..p {
        let fields = lines.expect_tag("column")?;
        match fields.as_slice() {
            [name, "numeric"] => columns.push((unesc(name)?, ColumnKind::Numeric)),
            [name, "categorical", k, rest @ ..] => {
                let k: usize = parse_num(k)?;
                if rest.len() != k {
                    return Err(Error::Model("level count mismatch".into()));
                }
                let levels: Result<Vec<String>> = rest.iter().map(|l| unesc(l)).collect();
                columns.push((
                    unesc(name)?,
                    ColumnKind::Categorical { levels: levels? },
                ));
            }
            _ => return Err(Error::Model("bad column line".into())),
        }
    }
    let schema = SchemaInfo {
        columns,
        target_name,
        classes: task.is_classification().then_some(classes),
    };

    match kind.as_slice() {
        ["tree"] => {
            let tree = parse_tree(&mut lines, task)?;
            lines.expect_tag("end")?;
            Ok(Model::Tree { tree, schema })
        }
        ["forest"] => {
            let fields = lines.expect_tag("forest")?;
            if fields.len() != 9 {
                return Err(Error::Model("bad forest line".into()));
            }
            let ntree: usize = parse_num(kv(fields[0], "ntree")?)?;
            let mtry_s = kv(fields[1], "mtry")?;
            let nodesize_s = kv(fields[2], "nodesize")?;
            let resample_s = kv(fields[3], "resample")?;
            let params = ForestParams {
                ntree,
                mtry: if mtry_s == "-" {
                    None
                } else {
                    Some(parse_num(mtry_s)?)
                },
                nodesize: if nodesize_s == "-" {
                    None
                } else {
                    Some(parse_num(nodesize_s)?)
                },
                resample: if resample_s == "-" {
                    None
                } else {
                    Some(parse_resample(resample_s)?)
                },
                split_mode: parse_split_mode(kv(fields[4], "split")?)?,
                seed: parse_num(kv(fields[5], "seed")?)?,
            };
            let n_rows: usize = parse_num(kv(fields[6], "nrows")?)?;
            let fingerprint: u64 = parse_num(kv(fields[7], "fingerprint")?)?;
            let oob_available = kv(fields[8], "oob")? == "1";
            let mut trees = Vec::with_capacity(ntree);
            for _ in 0..ntree {
                let plan_fields = lines.expect_tag("plan")?;
                let (kind_s, weights) = plan_fields
                    .split_first()
                    .ok_or_else(|| Error::Model("bad plan line".into()))?;
                let multiplicities: Result<Vec<u32>> =
                    weights.iter().map(|w| parse_num(w)).collect();
                let plan = ResamplePlan {
                    kind: parse_resample(kind_s)?,
                    multiplicities: multiplicities?,
                };
                let seed_fields = lines.expect_tag("treeseed")?;
                let seed: u64 = parse_num(
                    seed_fields
                        .first()
                        .ok_or_else(|| Error::Model("bad treeseed line".into()))?,
                )?;
                let tree = parse_tree(&mut lines, task)?;
                trees.push(TrainedTree { tree, plan, seed });
            }
            lines.expect_tag("end")?;
            Ok(Model::Forest(Forest {
                trees,
                params,
                task,
                schema,
                n_rows,
                data_fingerprint: fingerprint,
                oob_available,
            }))
        }
        _ => Err(Error::Model("bad kind line".into())),
    }
}

fn parse_tree(lines: &mut Lines, task: Task) -> Result<Tree> {
    let fields = lines.expect_tag("tree")?;
    if fields.len() != 2 {
        return Err(Error::Model("bad tree line".into()));
    }
    let n_train: u64 = parse_num(fields[0])?;
    let n_nodes: usize = parse_num(fields[1])?;
    let mut nodes: Vec<Node> = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let fields = lines.expect_tag("node")?;
        if fields.len() < 6 {
            return Err(Error::Model("bad node line".into()));
        }
        let id: u32 = parse_num(fields[0])?;
        let shape = fields[1];
        let n: u64 = parse_num(kv(fields[2], "n")?)?;
        let impurity = parse_f64(kv(fields[3], "imp")?)?;
        let error_sum = parse_f64(kv(fields[4], "err")?)?;
        let prediction = parse_pred(kv(fields[5], "pred")?)?;
        let split = match shape {
            "leaf" => None,
            "split" => {
                if fields.len() != 14 {
                    return Err(Error::Model("bad split node line".into()));
                }
                let var: usize = parse_num(kv(fields[6], "var")?)?;
                let rule = parse_rule(kv(fields[7], "rule")?)?;
                let decrease = parse_f64(kv(fields[8], "dec")?)?;
                let left: u32 = parse_num(kv(fields[9], "left")?)?;
                let right: u32 = parse_num(kv(fields[10], "right")?)?;
                let n_left: u64 = parse_num(kv(fields[11], "nl")?)?;
                let n_right: u64 = parse_num(kv(fields[12], "nr")?)?;
                let majority_left = match kv(fields[13], "maj")? {
                    "L" => true,
                    "R" => false,
                    other => return Err(Error::Model(format!("bad majority '{other}'"))),
                };
                let mut competing = Vec::new();
                let mut surrogates = Vec::new();
                while let Some(line) = lines.peek() {
                    if line.starts_with("comp ") {
                        let fields = lines.expect_tag("comp")?;
                        if fields.len() != 3 {
                            return Err(Error::Model("bad comp line".into()));
                        }
                        competing.push(Split {
                            var: parse_num(fields[0])?,
                            rule: parse_rule(fields[1])?,
                            decrease: parse_f64(fields[2])?,
                        });
                    } else if line.starts_with("surr ") {
                        let fields = lines.expect_tag("surr")?;
                        if fields.len() != 3 {
                            return Err(Error::Model("bad surr line".into()));
                        }
                        surrogates.push((
                            Split {
                                var: parse_num(fields[0])?,
                                rule: parse_rule(fields[1])?,
                                decrease: 0.0,
                            },
                            parse_num(fields[2])?,
                        ));
                    } else {
                        break;
                    }
                }
                Some(SplitInfo {
                    split: Split {
                        var,
                        rule,
                        decrease,
                    },
                    left,
                    right,
                    n_left,
                    n_right,
                    majority_left,
                    competing,
                    surrogates,
                })
            }
            other => return Err(Error::Model(format!("bad node shape '{other}'"))),
        };
        nodes.push(Node {
            id,
            n,
            prediction,
            impurity,
            error_sum,
            split,
        });
    }
    lines.expect_tag("endtree")?;
    Ok(Tree {
        task,
        n_train,
        nodes,
    })
}

/// Schema compatibility check between a model and a dataset to predict on.
pub fn check_schema(schema: &SchemaInfo, ds: &Dataset) -> Result<()> {
    if schema.columns.len() != ds.n_columns() {
        return Err(Error::Schema(format!(
            "model expects {} feature columns, data has {}",
            schema.columns.len(),
            ds.n_columns()
        )));
    }
    for (j, (name, kind)) in schema.columns.iter().enumerate() {
        let col = ds.column(j);
        if col.name != *name {
            return Err(Error::Schema(format!(
                "column {j}: model expects '{name}', data has '{}'",
                col.name
            )));
        }
        match (kind, &col.kind) {
            (ColumnKind::Numeric, ColumnKind::Numeric) => {}
            (ColumnKind::Categorical { .. }, ColumnKind::Categorical { .. }) => {}
            _ => {
                return Err(Error::Schema(format!(
                    "column '{name}': kind mismatch between model and data"
                )))
            }
        }
    }
    Ok(())
}
