//! Command implementations: each resolves its config, runs the pipeline, and
//! writes plot-ready artifacts into the output directory.

use crate::util::{fmt, write_file};
use cartforest::cart::{
    grow_maximal, select_subtree_cv, CvCurve, DatasetRow, GrowSettings, OwnedRow,
    PruningSequence, SelectionRule, Tree,
};
use cartforest::data::{ColumnKind, Dataset, Task};
use cartforest::ensemble::{
    oob_error, train_forest, Forest, ForestParams, ForestPrediction, SchemaInfo,
};
use cartforest::error::{Error, Result};
use cartforest::importance::{
    replicated_grouped_importance, replicated_importance, ImportanceReport,
};
use cartforest::model::{forest_to_string, tree_to_string, Model};
use cartforest::scale::{make_partition, train_blb, train_partitioned, PartitionStrategy};
use cartforest::select::{vsurf, SelectionReport, SelectionReps};
use std::path::Path;

fn class_error(tree_like: impl Fn(usize) -> u32, ds: &Dataset) -> f64 {
    let wrong = (0..ds.n_rows())
        .filter(|&i| tree_like(i) != ds.y_class(i))
        .count();
    wrong as f64 / ds.n_rows() as f64
}

/// Mean loss of a single tree on a dataset (squared error or 0/1).
fn tree_error(tree: &Tree, ds: &Dataset) -> f64 {
    match ds.task() {
        Task::Classification { .. } => {
            class_error(|i| tree.predict(&DatasetRow { ds, row: i }).class(), ds)
        }
        Task::Regression => {
            let mse: f64 = (0..ds.n_rows())
                .map(|i| {
                    let d = tree.predict(&DatasetRow { ds, row: i }).as_value() - ds.y_num(i);
                    d * d
                })
                .sum();
            mse / ds.n_rows() as f64
        }
    }
}

// ---------------------------------------------------------------------
// tree

pub struct TreeConfig {
    pub folds: usize,
    pub rule: SelectionRule,
    pub min_node_size: u64,
    pub min_child_size: u64,
    pub max_surrogates: usize,
    pub seed: u64,
}

pub fn cmd_tree(
    train: &Dataset,
    test: Option<&Dataset>,
    cfg: &TreeConfig,
    out: &Path,
) -> Result<()> {
    let settings = GrowSettings {
        min_node_size: cfg.min_node_size,
        min_child_size: cfg.min_child_size,
        max_surrogates: cfg.max_surrogates,
        ..GrowSettings::cart()
    };
    let maximal = grow_maximal(train, &settings, cfg.seed)?;
    let (chosen, sequence, curve) =
        select_subtree_cv(train, &settings, cfg.folds, cfg.rule, cfg.seed)?;

    write_file(out, "pruning_sequence.csv", &sequence_csv(&sequence))?;
    write_file(out, "cv_curve.csv", &cv_curve_csv(&sequence, &curve))?;
    let schema = SchemaInfo::of(train);
    write_file(out, "model.tree.txt", &tree_to_string(&chosen, &schema))?;
    write_file(
        out,
        "tree_summary.txt",
        &tree_summary(train, test, &maximal, &sequence, &curve, &chosen),
    )?;
    Ok(())
}

fn sequence_csv(seq: &PruningSequence) -> String {
    let mut out = String::from("k,alpha,leaves,train_error\n");
    for k in 0..seq.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            k + 1,
            fmt(seq.alphas[k]),
            seq.leaf_counts[k],
            fmt(seq.train_errors[k])
        ));
    }
    out
}

fn cv_curve_csv(seq: &PruningSequence, curve: &CvCurve) -> String {
    let mut out = String::from("k,alpha,beta,leaves,cv_error,cv_se,chosen_min,chosen_1se\n");
    for k in 0..seq.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            k + 1,
            fmt(curve.alphas[k]),
            fmt(curve.betas[k]),
            curve.leaf_counts[k],
            fmt(curve.errors[k]),
            fmt(curve.std_errors[k]),
            u8::from(k == curve.chosen_min),
            u8::from(k == curve.chosen_one_se),
        ));
    }
    out
}

fn tree_summary(
    train: &Dataset,
    test: Option<&Dataset>,
    maximal: &Tree,
    seq: &PruningSequence,
    curve: &CvCurve,
    chosen: &Tree,
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "selected tree: {} leaves, {} split variables\n",
        chosen.leaf_count(),
        chosen.used_variables().len()
    ));
    let names: Vec<&str> = chosen
        .used_variables()
        .into_iter()
        .map(|j| train.column(j).name.as_str())
        .collect();
    out.push_str(&format!("split variables: {}\n\n", names.join(", ")));

    out.push_str("tree,leaves,empirical_error");
    if test.is_some() {
        out.push_str(",test_error");
    }
    out.push('\n');
    let mut row = |label: &str, tree: &Tree| {
        out.push_str(&format!(
            "{label},{},{}",
            tree.leaf_count(),
            fmt(tree_error(tree, train))
        ));
        if let Some(test) = test {
            out.push_str(&format!(",{}", fmt(tree_error(tree, test))));
        }
        out.push('\n');
    };
    if let Some(k2) = seq.leaf_counts.iter().position(|&l| l == 2) {
        row("two_leaf", &seq.trees[k2]);
    }
    row("one_se", &seq.trees[curve.chosen_one_se]);
    row("maximal", maximal);
    row("optimal", &seq.trees[curve.chosen_min]);
    out
}

// ---------------------------------------------------------------------
// forest

pub fn cmd_forest(
    train: &Dataset,
    test: Option<&Dataset>,
    params: &ForestParams,
    out: &Path,
) -> Result<()> {
    let forest = train_forest(train, params)?;
    write_file(out, "model.forest.txt", &forest_to_string(&forest))?;
    write_file(out, "oob_report.txt", &oob_report(&forest, train))?;
    if let Some(test) = test {
        let report = forest.evaluate(test)?;
        write_file(
            out,
            "test_report.txt",
            &format!("rows = {}\ntest_error = {}\n", test.n_rows(), fmt(report.error)),
        )?;
    }
    Ok(())
}

fn oob_report(forest: &Forest, train: &Dataset) -> String {
    let mut out = String::new();
    let p = train.n_columns();
    let mtry = forest.params.resolved_mtry(forest.task, p);
    out.push_str(&format!("ntree = {}\nmtry = {mtry}\n", forest.ntree()));
    if mtry == p {
        out.push_str("mode = bagging (mtry equals the number of variables)\n");
    }
    if forest.ntree() == 1 {
        out.push_str("warning = single-tree forest: OOB estimate has high variance\n");
    }
    match oob_error(forest, train) {
        Ok(report) => {
            out.push_str(&format!(
                "oob_error = {}\nrows_covered = {}\nrows_never_oob = {}\n",
                fmt(report.error),
                report.covered,
                report.excluded
            ));
        }
        Err(Error::Degenerate(msg)) => {
            out.push_str(&format!("oob_error = unavailable ({msg})\n"));
        }
        Err(e) => out.push_str(&format!("oob_error = error ({e})\n")),
    }
    out
}

// ---------------------------------------------------------------------
// importance

pub fn cmd_importance(
    train: &Dataset,
    params: &ForestParams,
    nrep: usize,
    groups_file: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let report = match groups_file {
        None => replicated_importance(train, params, nrep, seed)?,
        Some(path) => {
            let (names, groups) = parse_groups(path, train)?;
            replicated_grouped_importance(train, params, &groups, names, nrep, seed)?
        }
    };
    write_file(out, "importance.csv", &report.to_csv())?;
    write_file(out, "vi_series.csv", &vi_series_csv(&report))?;
    let mut summary = format!("nrep = {}\n", report.nrep);
    if report.sd_degenerate {
        summary.push_str("warning = single replication: sd column is zero\n");
    }
    write_file(out, "importance_report.txt", &summary)?;
    Ok(())
}

/// Groups file: one group per line, `name: var,var,...` (or just the
/// variable list; the group is then named after it).
fn parse_groups(path: &Path, ds: &Dataset) -> Result<(Vec<String>, Vec<Vec<usize>>)> {
    let mut names = Vec::new();
    let mut groups = Vec::new();
    for (lineno, raw) in std::fs::read_to_string(path)?.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, vars) = match line.split_once(':') {
            Some((n, v)) => (n.trim().to_string(), v),
            None => (line.to_string(), line),
        };
        let mut group = Vec::new();
        for token in vars.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let j = ds.column_index(token).ok_or_else(|| {
                Error::Argument(format!(
                    "groups file line {}: unknown variable '{token}'",
                    lineno + 1
                ))
            })?;
            group.push(j);
        }
        names.push(name);
        groups.push(group);
    }
    if groups.is_empty() {
        return Err(Error::Argument("groups file declares no groups".into()));
    }
    Ok((names, groups))
}

/// Decreasing-VI series for plotting.
fn vi_series_csv(report: &ImportanceReport) -> String {
    let mut out = String::from("rank,variable,mean_vi,sd_vi\n");
    for (rank, &j) in report.ranking.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            rank + 1,
            report.names[j],
            fmt(report.mean[j]),
            fmt(report.sd[j])
        ));
    }
    out
}

// ---------------------------------------------------------------------
// select

pub enum SelectScope {
    ThresholdOnly,
    ThroughInterpretation,
    Full,
}

pub fn cmd_select(
    train: &Dataset,
    test: Option<&Dataset>,
    params: &ForestParams,
    reps: SelectionReps,
    scope: SelectScope,
    seed: u64,
    out: &Path,
) -> Result<()> {
    // the pipeline always runs fully; scope controls what is reported
    let report = vsurf(train, params, reps, seed)?;
    write_file(out, "vi_mean.csv", &vi_mean_csv(&report))?;
    write_file(out, "vi_sd.csv", &vi_sd_csv(&report))?;
    if !matches!(scope, SelectScope::ThresholdOnly) {
        write_file(out, "interpretation_curve.csv", &interp_csv(&report))?;
    }
    if matches!(scope, SelectScope::Full) {
        write_file(out, "prediction_path.csv", &pred_path_csv(train, &report))?;
    }
    write_file(
        out,
        "selection_report.txt",
        &selection_summary(train, test, params, &report, &scope, seed)?,
    )?;
    Ok(())
}

fn vi_mean_csv(report: &SelectionReport) -> String {
    let mut out = String::from("rank,variable,mean_vi\n");
    for (rank, &j) in report.importance.ranking.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            rank + 1,
            report.importance.names[j],
            fmt(report.importance.mean[j])
        ));
    }
    out
}

fn vi_sd_csv(report: &SelectionReport) -> String {
    let mut out = String::from("rank,variable,sd_vi,threshold\n");
    for (rank, &j) in report.importance.ranking.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            rank + 1,
            report.importance.names[j],
            fmt(report.importance.sd[j]),
            fmt(report.threshold)
        ));
    }
    out
}

fn interp_csv(report: &SelectionReport) -> String {
    let mut out = String::from("k,oob_error,oob_sd\n");
    for (k, (err, sd)) in report.interpretation_curve.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", k + 1, fmt(*err), fmt(*sd)));
    }
    out
}

fn pred_path_csv(ds: &Dataset, report: &SelectionReport) -> String {
    let mut out = String::from("step,variable,oob_error,added\n");
    for (step, s) in report.prediction_path.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            step + 1,
            ds.column(s.var).name,
            fmt(s.error),
            u8::from(s.added)
        ));
    }
    out
}

fn selection_summary(
    train: &Dataset,
    test: Option<&Dataset>,
    params: &ForestParams,
    report: &SelectionReport,
    scope: &SelectScope,
    seed: u64,
) -> Result<String> {
    let name_list = |vars: &[usize]| -> String {
        vars.iter()
            .map(|&j| train.column(j).name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut out = String::new();
    out.push_str(&format!(
        "variables = {}\nthreshold = {}\nkept_after_threshold = {}\n",
        train.n_columns(),
        fmt(report.threshold),
        report.kept.len()
    ));
    if report.threshold_fallback {
        out.push_str("warning = thresholding eliminated every variable; kept the top-ranked one\n");
    }
    out.push_str(&format!("kept = {}\n", name_list(&report.kept)));
    if !matches!(scope, SelectScope::ThresholdOnly) {
        out.push_str(&format!(
            "interpretation_set = {}\ninterpretation = {}\n",
            report.interpretation.len(),
            name_list(&report.interpretation)
        ));
    }
    if matches!(scope, SelectScope::Full) {
        out.push_str(&format!(
            "mean_jump_threshold = {}\nprediction_set = {}\nprediction = {}\n",
            fmt(report.mean_jump),
            report.prediction.len(),
            name_list(&report.prediction)
        ));
        if report.mean_jump_fallback {
            out.push_str("warning = interpretation kept every variable; jump threshold fell back to 0\n");
        }
    }
    out.push_str(&format!(
        "nrep_ranking = {}\nnrep_models = {}\n",
        report.nrep_ranking, report.nrep_models
    ));
    if let Some(test) = test {
        // test errors of forests restricted to each selected set, as in the
        // closing comparison table of the selection procedure
        for (label, vars) in [
            ("initial", (0..train.n_columns()).collect::<Vec<_>>()),
            ("interpretation", report.interpretation.clone()),
            ("prediction", report.prediction.clone()),
        ] {
            let restricted = train.select_columns(&vars);
            let test_restricted = test.select_columns(&vars);
            let mut p = params.clone();
            p.seed = cartforest::rng::seed_chain(seed, &[0x7e57, vars.len() as u64]);
            p.mtry = params.mtry.map(|m| m.min(vars.len()));
            let forest = train_forest(&restricted, &p)?;
            let eval = forest.evaluate(&test_restricted)?;
            out.push_str(&format!("test_error_{label} = {}\n", fmt(eval.error)));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// partition / blb

pub fn cmd_partition(
    train: &Dataset,
    test: Option<&Dataset>,
    params: &ForestParams,
    blocks: usize,
    strategy: PartitionStrategy,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let plan = make_partition(train, blocks, strategy, seed)?;
    let outcome = train_partitioned(train, &plan, params)?;
    write_file(out, "model.forest.txt", &forest_to_string(&outcome.forest))?;
    let mut block_csv = String::from("block,rows,oob_error\n");
    for output in &outcome.map_outputs {
        block_csv.push_str(&format!(
            "{},{},{}\n",
            output.block_id,
            plan.blocks[output.block_id].len(),
            fmt(output.oob_error)
        ));
    }
    write_file(out, "block_report.csv", &block_csv)?;
    let mut summary = format!(
        "blocks = {}\nmean_block_oob = {}\nglobal_oob = unavailable (rows of one block are never in-bag for another block's trees)\n",
        blocks,
        fmt(outcome.mean_block_oob)
    );
    for w in &outcome.heterogeneity_warnings {
        summary.push_str(&format!("warning = {w}\n"));
    }
    if let Some(test) = test {
        let eval = outcome.forest.evaluate(test)?;
        summary.push_str(&format!("test_error = {}\n", fmt(eval.error)));
    }
    write_file(out, "partition_report.txt", &summary)?;
    Ok(())
}

pub fn cmd_blb(
    train: &Dataset,
    test: Option<&Dataset>,
    params: &ForestParams,
    m: usize,
    subsamples: usize,
    out: &Path,
) -> Result<()> {
    let forest = train_blb(train, m, subsamples, params)?;
    write_file(out, "model.forest.txt", &forest_to_string(&forest))?;
    let mut summary = format!(
        "blb_m = {m}\nsubsamples = {subsamples}\ntrees = {}\n",
        forest.ntree()
    );
    match oob_error(&forest, train) {
        Ok(report) => summary.push_str(&format!("oob_error = {}\n", fmt(report.error))),
        Err(Error::Degenerate(msg)) => {
            summary.push_str(&format!("oob_error = unavailable ({msg})\n"))
        }
        Err(e) => return Err(e),
    }
    if let Some(test) = test {
        let eval = forest.evaluate(test)?;
        summary.push_str(&format!("test_error = {}\n", fmt(eval.error)));
    }
    write_file(out, "blb_report.txt", &summary)?;
    Ok(())
}

// ---------------------------------------------------------------------
// predict

pub fn cmd_predict(model_path: &Path, data: &Path, out: &Path) -> Result<()> {
    let model = cartforest::model::load(model_path)?;
    let schema = model.schema().clone();
    let rows = load_feature_rows(data, &schema)?;
    let mut csv = String::from("row,prediction");
    if let Some(classes) = &schema.classes {
        for c in classes {
            csv.push_str(&format!(",p_{c}"));
        }
    }
    csv.push('\n');
    for (i, row) in rows.iter().enumerate() {
        match &model {
            Model::Tree { tree, .. } => {
                let pred = tree.predict(row);
                match pred {
                    cartforest::cart::Prediction::Value(v) => {
                        csv.push_str(&format!("{},{}\n", i + 1, fmt(*v)));
                    }
                    cartforest::cart::Prediction::Class { class, proportions } => {
                        let classes = schema.classes.as_ref().expect("classification schema");
                        csv.push_str(&format!("{},{}", i + 1, classes[*class as usize]));
                        for p in proportions {
                            csv.push_str(&format!(",{}", fmt(*p)));
                        }
                        csv.push('\n');
                    }
                }
            }
            Model::Forest(forest) => match forest.predict(row) {
                ForestPrediction::Value(v) => {
                    csv.push_str(&format!("{},{}\n", i + 1, fmt(v)));
                }
                pred @ ForestPrediction::Class { class, .. } => {
                    let classes = schema.classes.as_ref().expect("classification schema");
                    csv.push_str(&format!("{},{}", i + 1, classes[class as usize]));
                    for f in pred.fractions() {
                        csv.push_str(&format!(",{}", fmt(f)));
                    }
                    csv.push('\n');
                }
            },
        }
    }
    write_file(out, "predictions.csv", &csv)?;
    Ok(())
}

/// Reads rows for prediction: the file must contain every model feature
/// column (matched by name; extra columns, e.g. the target, are ignored).
/// Empty cells are missing; unknown categorical levels are treated as
/// missing and handled by surrogate/majority routing.
fn load_feature_rows(path: &Path, schema: &SchemaInfo) -> Result<Vec<OwnedRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Schema(format!("cannot read '{}': {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let positions: Result<Vec<usize>> = schema
        .columns
        .iter()
        .map(|(name, _)| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("prediction data lacks column '{name}'")))
        })
        .collect();
    let positions = positions?;
    let mut rows = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Schema(format!("row {}: {e}", row_idx + 1)))?;
        let mut values = Vec::with_capacity(schema.columns.len());
        for (j, (name, kind)) in schema.columns.iter().enumerate() {
            let field = record.get(positions[j]).unwrap_or("").trim();
            if field.is_empty() {
                values.push(None);
                continue;
            }
            match kind {
                ColumnKind::Numeric => {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        row: row_idx + 1,
                        column: name.clone(),
                        message: format!("'{field}' is not numeric"),
                    })?;
                    values.push(Some(v));
                }
                ColumnKind::Categorical { levels } => {
                    values.push(
                        levels
                            .iter()
                            .position(|l| l == field)
                            .map(|code| code as f64),
                    );
                }
            }
        }
        rows.push(OwnedRow(values));
    }
    Ok(rows)
}
