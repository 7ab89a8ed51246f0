//! Probe: contradiction counts and 1-SE leaf counts per split seed.

use cartforest::cart::{select_subtree_cv, GrowSettings, SelectionRule, DatasetRow};
use cartforest::data::{load_csv, read_schema_file, split_train_test, Dataset};
use std::collections::HashMap;

fn min_errors(ds: &Dataset) -> usize {
    let mut groups: HashMap<Vec<u64>, [usize; 2]> = HashMap::new();
    for i in 0..ds.n_rows() {
        let key: Vec<u64> = (0..ds.n_columns())
            .map(|j| ds.feature(i, j).map_or(u64::MAX, f64::to_bits))
            .collect();
        groups.entry(key).or_default()[ds.y_class(i) as usize] += 1;
    }
    groups.values().map(|c| c[0].min(c[1])).sum()
}

fn main() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let schema = read_schema_file(&root.join("data/spam.schema")).unwrap();
    let spam = load_csv(&root.join("data/spam.csv"), &schema, "type").unwrap();
    for seed in 1..=14u64 {
        let (train, test) = split_train_test(&spam, 2300, seed).unwrap();
        let floor = min_errors(&train);
        let (t1, _, _) =
            select_subtree_cv(&train, &GrowSettings::cart(), 10, SelectionRule::OneSe, seed).unwrap();
        let (tm, _, _) =
            select_subtree_cv(&train, &GrowSettings::cart(), 10, SelectionRule::Min, seed).unwrap();
        let err = |t: &cartforest::cart::Tree, ds: &Dataset| {
            (0..ds.n_rows())
                .filter(|&i| t.predict(&DatasetRow { ds, row: i }).class() != ds.y_class(i))
                .count() as f64 / ds.n_rows() as f64
        };
        println!(
            "seed {seed:2}: floor={floor} 1se_leaves={:3} 1se_test={:.4} min_test={:.4}",
            t1.leaf_count(), err(&t1, &test), err(&tm, &test)
        );
    }
}
