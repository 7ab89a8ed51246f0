//! CLI behavior: exit codes, artifacts, prediction edge cases.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cartforest"))
}

fn write_toy(dir: &Path) {
    std::fs::write(
        dir.join("train.csv"),
        "x1,x2,y\n\
         1.0,9.0,no\n2.0,8.5,no\n3.0,8.0,no\n4.0,7.5,no\n4.5,7.2,no\n\
         5.5,6.8,yes\n6.0,6.5,yes\n7.0,6.0,yes\n8.0,5.5,yes\n9.0,5.0,yes\n\
         1.5,8.8,no\n2.5,8.2,no\n6.5,6.2,yes\n7.5,5.8,yes\n",
    )
    .unwrap();
    std::fs::write(dir.join("train.schema"), "x1:numeric\nx2:numeric\ny:categorical\n").unwrap();
}

#[test]
fn missing_required_argument_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .args(["tree", "--data", "train.csv", "--schema", "train.schema", "--out", "o"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2)); // no --target
}

#[test]
fn zero_folds_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .args([
            "tree", "--data", "train.csv", "--schema", "train.schema", "--target", "y", "--out",
            "o", "--folds", "0",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_error_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    std::fs::write(dir.path().join("bad.csv"), "x1,x2,y\noops,1.0,no\n").unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "forest", "--data", "bad.csv", "--schema", "train.schema", "--target", "y", "--out",
            "o",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn schema_mismatch_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    std::fs::write(dir.path().join("narrow.schema"), "x1:numeric\ny:categorical\n").unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "forest", "--data", "train.csv", "--schema", "narrow.schema", "--target", "y",
            "--out", "o",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn constant_target_gives_single_leaf_tree() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("const.csv"),
        "x,y\n1,3.5\n2,3.5\n3,3.5\n4,3.5\n5,3.5\n6,3.5\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("const.schema"), "x:numeric\ny:numeric\n").unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "tree", "--data", "const.csv", "--schema", "const.schema", "--target", "y", "--out",
            "o", "--folds", "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary = std::fs::read_to_string(dir.path().join("o/tree_summary.txt")).unwrap();
    assert!(summary.contains("selected tree: 1 leaves"));
    assert!(summary.contains("maximal,1,0"));
}

#[test]
fn predict_on_training_data_with_maximal_tree_reproduces_labels() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    // min-node-size 2 grows to purity; the data is separable so the chosen
    // subtree keeps training error 0
    let out = bin()
        .current_dir(dir.path())
        .args([
            "tree", "--data", "train.csv", "--schema", "train.schema", "--target", "y", "--out",
            "o", "--folds", "3", "--min-node-size", "2",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .current_dir(dir.path())
        .args([
            "predict", "--model", "o/model.tree.txt", "--data", "train.csv", "--out", "p",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let predictions = std::fs::read_to_string(dir.path().join("p/predictions.csv")).unwrap();
    let labels: Vec<&str> = std::fs::read_to_string(dir.path().join("train.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| if l.ends_with("yes") { "yes" } else { "no" })
        .collect::<Vec<_>>()
        .leak()
        .to_vec();
    for (i, line) in predictions.lines().skip(1).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], labels[i], "row {}", i + 1);
    }
}

#[test]
fn predict_empty_file_emits_header_only() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    bin()
        .current_dir(dir.path())
        .args([
            "forest", "--data", "train.csv", "--schema", "train.schema", "--target", "y",
            "--out", "o", "--ntree", "5",
        ])
        .status()
        .unwrap();
    std::fs::write(dir.path().join("empty.csv"), "x1,x2\n").unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "predict", "--model", "o/model.forest.txt", "--data", "empty.csv", "--out", "p",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let predictions = std::fs::read_to_string(dir.path().join("p/predictions.csv")).unwrap();
    assert_eq!(predictions, "row,prediction,p_no,p_yes\n");
}

#[test]
fn predict_all_missing_row_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    bin()
        .current_dir(dir.path())
        .args([
            "tree", "--data", "train.csv", "--schema", "train.schema", "--target", "y", "--out",
            "o", "--folds", "3",
        ])
        .status()
        .unwrap();
    std::fs::write(dir.path().join("blank.csv"), "x1,x2\n,\n,\n").unwrap();
    let mut previous: Option<String> = None;
    for _ in 0..2 {
        let out = bin()
            .current_dir(dir.path())
            .args([
                "predict", "--model", "o/model.tree.txt", "--data", "blank.csv", "--out", "p",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        let text = std::fs::read_to_string(dir.path().join("p/predictions.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], lines[2].replacen('2', "1", 1));
        if let Some(prev) = &previous {
            assert_eq!(prev, &text);
        }
        previous = Some(text);
    }
}

#[test]
fn predict_schema_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    bin()
        .current_dir(dir.path())
        .args([
            "forest", "--data", "train.csv", "--schema", "train.schema", "--target", "y",
            "--out", "o", "--ntree", "5",
        ])
        .status()
        .unwrap();
    std::fs::write(dir.path().join("other.csv"), "a,b\n1,2\n").unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "predict", "--model", "o/model.forest.txt", "--data", "other.csv", "--out", "p",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn run_config_echoes_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    bin()
        .current_dir(dir.path())
        .args([
            "forest", "--data", "train.csv", "--schema", "train.schema", "--target", "y",
            "--out", "o", "--ntree", "7",
        ])
        .status()
        .unwrap();
    let config = std::fs::read_to_string(dir.path().join("o/run_config.txt")).unwrap();
    assert!(config.contains("command = forest"));
    assert!(config.contains("ntree = 7"));
    assert!(config.contains("seed = 1")); // default
    assert!(config.contains("mtry = default"));
    assert!(config.contains("split-mode = exhaustive"));
}

#[test]
fn single_tree_forest_flags_high_variance_oob() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .args([
            "forest", "--data", "train.csv", "--schema", "train.schema", "--target", "y",
            "--out", "o", "--ntree", "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = std::fs::read_to_string(dir.path().join("o/oob_report.txt")).unwrap();
    assert!(report.contains("high variance"));
}

#[test]
fn bagging_mode_is_noted_in_the_report() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    bin()
        .current_dir(dir.path())
        .args([
            "forest", "--data", "train.csv", "--schema", "train.schema", "--target", "y",
            "--out", "o", "--ntree", "5", "--mtry", "2",
        ])
        .status()
        .unwrap();
    let report = std::fs::read_to_string(dir.path().join("o/oob_report.txt")).unwrap();
    assert!(report.contains("mode = bagging"));
}

#[test]
fn importance_single_group_covering_everything_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    std::fs::write(dir.path().join("groups.txt"), "all: x1,x2\n").unwrap();
    bin()
        .current_dir(dir.path())
        .args([
            "importance", "--data", "train.csv", "--schema", "train.schema", "--target", "y",
            "--out", "o", "--ntree", "10", "--nrep", "2", "--groups", "groups.txt",
        ])
        .status()
        .unwrap();
    let csv = std::fs::read_to_string(dir.path().join("o/importance.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2); // header + one group
    assert!(csv.lines().nth(1).unwrap().starts_with("all,"));
}

#[test]
fn importance_nrep_one_warns_about_sd() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path());
    bin()
        .current_dir(dir.path())
        .args([
            "importance", "--data", "train.csv", "--schema", "train.schema", "--target", "y",
            "--out", "o", "--ntree", "10", "--nrep", "1",
        ])
        .status()
        .unwrap();
    let report = std::fs::read_to_string(dir.path().join("o/importance_report.txt")).unwrap();
    assert!(report.contains("warning"));
    let csv = std::fs::read_to_string(dir.path().join("o/importance.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').nth(2).unwrap(), "0");
    }
}
