use std::io::Write;

use dfs_core::amortized::Targets;
use dfs_core::datasets::{
    generate_synthetic, load_csv, parse_group_spec, read_csv, split_standardize, Dataset, LabelKind, Split,
    SyntheticSpec, DEFAULT_FRACTIONS,
};
use dfs_core::Error;
use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn labels(ds: &Dataset) -> &[usize] {
    match &ds.targets {
        Targets::Classes { labels, .. } => labels,
        Targets::Real(_) => panic!("expected classes"),
    }
}

#[test]
fn channel_copies_label_ninety_percent() {
    let (ds, _) = generate_synthetic(SyntheticSpec::D2Channel, 100_000, &mut rng(1)).unwrap();
    let agree = ds.rows.column(0).iter().zip(labels(&ds)).filter(|(x, &y)| **x as usize == y).count();
    assert!((agree as f64 / 1e5 - 0.9).abs() < 0.01);
    assert_eq!(ds.feature_names, ["x1", "x2", "x3"]);
}

#[test]
fn empirical_cells_within_five_sigma() {
    let n = 100_000;
    for spec in [SyntheticSpec::D2Channel, SyntheticSpec::D3Switch] {
        let (ds, table) = generate_synthetic(spec, n, &mut rng(2)).unwrap();
        let k = table.classes().unwrap();
        let mut counts = vec![0usize; table.configuration_count() * k];
        for (row, &y) in ds.rows.rows().into_iter().zip(labels(&ds)) {
            let cats: Vec<usize> = row.iter().map(|&v| v as usize).collect();
            counts[table.encode(&cats) * k + y] += 1;
        }
        let mut cats = vec![0; table.feature_count()];
        for (cell, &c) in counts.iter().enumerate() {
            table.decode(cell / k, &mut cats);
            let pairs = cats.iter().copied().enumerate();
            let e = dfs_core::oracle::Evidence::from_pairs(pairs).unwrap();
            let p = table.evidence_prob(&e).unwrap() * table.bayes_posterior(&e).map_or(0.0, |q| q.as_slice()[cell % k]);
            let sigma = (n as f64 * p * (1.0 - p)).sqrt().max(1e-9);
            assert!((c as f64 - n as f64 * p).abs() <= 5.0 * sigma + 1e-9, "{spec} cell {cell}: {c} vs {}", n as f64 * p);
        }
    }
}

#[test]
fn regression_toy_rows_and_targets() {
    let (ds, table) = generate_synthetic(SyntheticSpec::R1Regression, 2000, &mut rng(3)).unwrap();
    assert!(table.is_regression());
    assert!(matches!(ds.targets, Targets::Real(ref v) if v.len() == 2000));
    assert_eq!(ds.classes(), None);
}

#[test]
fn random_tables_are_reproducible() {
    let spec: SyntheticSpec = "random_table(42,3,3,2)".parse().unwrap();
    assert_eq!(spec.table().unwrap(), spec.table().unwrap());
    let (a, _) = generate_synthetic(spec, 50, &mut rng(4)).unwrap();
    let (b, _) = generate_synthetic(spec, 50, &mut rng(4)).unwrap();
    assert_eq!(a, b);
    assert_eq!(spec.to_string().parse::<SyntheticSpec>().unwrap(), spec);
}

#[test]
fn unknown_distribution_rejected() {
    for bad in ["d9_nothing", "random_table(1,2)", "random_table(a,b,c,d)"] {
        assert!(matches!(bad.parse::<SyntheticSpec>(), Err(Error::UnknownDistribution(_))), "{bad}");
    }
}

#[test]
fn three_row_csv() {
    let text = "a,b,label\n1.0,2,0\n3,4.5,1\n-1,0,1\n";
    let ds = read_csv(text.as_bytes(), "label", LabelKind::Classes(2)).unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(ds.feature_names, ["a", "b"]);
    assert_eq!(labels(&ds), [0, 1, 1]);
    assert_eq!(ds.rows[[1, 1]], 4.5);
}

#[test]
fn bad_cells_name_row_and_column() {
    let text = "a,b,label\n1,2,0\n3,oops,1\n";
    match read_csv(text.as_bytes(), "label", LabelKind::Classes(2)) {
        Err(Error::CsvCell { row, column, .. }) => {
            assert_eq!(row, 3);
            assert_eq!(column, "b");
        }
        other => panic!("{other:?}"),
    }
    let missing = "a,b,label\n1,,0\n";
    let err = read_csv(missing.as_bytes(), "label", LabelKind::Classes(2)).unwrap_err();
    assert!(err.to_string().contains("row 2") && err.to_string().contains("'b'"), "{err}");
    let label = "a,label\n1,2\n";
    assert!(matches!(read_csv(label.as_bytes(), "label", LabelKind::Classes(2)), Err(Error::CsvCell { .. })));
    assert!(read_csv("a,b\n1,2\n".as_bytes(), "label", LabelKind::Classes(2)).is_err());
    assert!(read_csv("a,b,label\n1,2\n".as_bytes(), "label", LabelKind::Classes(2)).is_err());
}

#[test]
fn group_spec_partitions_columns() {
    let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let (g, n) = parse_group_spec("# comment\nfirst: a, c\n\nsecond: b\n", &names).unwrap();
    assert_eq!(n, ["first", "second"]);
    assert_eq!(g.assignment(), [0, 1, 0]);
    for bad in ["first: a\n", "first: a, b\nsecond: b, c\n", "first: a, b, c, zz\n", "no colon\n"] {
        assert!(matches!(parse_group_spec(bad, &names), Err(Error::InvalidGroups(_))), "{bad}");
    }
}

#[test]
fn load_csv_with_group_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    let spec = dir.path().join("groups.txt");
    std::fs::File::create(&csv).unwrap().write_all(b"a,b,c,y\n1,2,3,0.5\n4,5,6,1.5\n").unwrap();
    std::fs::write(&spec, "ab: a, b\nc: c\n").unwrap();
    let ds = load_csv(&csv, "y", LabelKind::Regression, Some(&spec)).unwrap();
    assert_eq!(ds.groups.group_count(), 2);
    assert_eq!(ds.group_names, ["ab", "c"]);
    assert!(matches!(load_csv(&dir.path().join("missing.csv"), "y", LabelKind::Regression, None), Err(Error::Io { .. })));
}

fn hundred_rows() -> Dataset {
    let rows = Array2::from_shape_fn((100, 3), |(i, j)| match j {
        0 => i as f64,
        1 => ((i * 37) % 11) as f64 * 0.5,
        _ => 4.0,
    });
    let labels = (0..100).map(|i| usize::from(i % 4 == 0)).collect();
    Dataset::new(rows, Targets::Classes { labels, classes: 2 }, vec!["a".into(), "b".into(), "c".into()]).unwrap()
}

#[test]
fn split_sizes_and_standardization() {
    let ds = split_standardize(&hundred_rows(), DEFAULT_FRACTIONS, &mut rng(5)).unwrap();
    let sizes: Vec<usize> = [Split::Train, Split::Val, Split::Test].iter().map(|&s| ds.indices(s).unwrap().len()).collect();
    assert_eq!(sizes, [70, 15, 15]);
    let data = ds.training_data::<f64>().unwrap();
    for (j, col) in data.train_x.axis_iter(Axis(1)).enumerate() {
        let mean = col.mean().unwrap();
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 1e-9);
        if j < 2 {
            assert!((var - 1.0).abs() < 1e-6);
        } else {
            assert!(col.iter().all(|&v| v == 0.0), "constant column standardizes to zero");
        }
    }
    assert!(data.val_x.iter().all(|v| v.is_finite()));
}

#[test]
fn split_is_stratified() {
    let ds = split_standardize(&hundred_rows(), DEFAULT_FRACTIONS, &mut rng(6)).unwrap();
    let train = ds.indices(Split::Train).unwrap();
    let pos = train.iter().filter(|&&i| labels(&ds)[i] == 1).count();
    // 25% positives overall
    assert!((pos as f64 - 17.5).abs() <= 1.0, "{pos}");
}

#[test]
fn standardization_ignores_held_out_rows() {
    let base = hundred_rows();
    let a = split_standardize(&base, DEFAULT_FRACTIONS, &mut rng(7)).unwrap();
    let mut perturbed = base.clone();
    for i in a.indices(Split::Val).unwrap().into_iter().chain(a.indices(Split::Test).unwrap()) {
        perturbed.rows.row_mut(i).fill(1e6);
    }
    let b = split_standardize(&perturbed, DEFAULT_FRACTIONS, &mut rng(7)).unwrap();
    assert_eq!(a.splits, b.splits);
    assert_eq!(a.standardization, b.standardization);
}

#[test]
fn too_small_for_a_class_is_rejected() {
    let rows = Array2::zeros((10, 1));
    let mut labels = vec![0; 10];
    labels[3] = 1;
    let ds = Dataset::new(rows, Targets::Classes { labels, classes: 3 }, vec!["a".into()]).unwrap();
    assert!(matches!(split_standardize(&ds, DEFAULT_FRACTIONS, &mut rng(8)), Err(Error::InvalidDataset(_))));
    assert!(split_standardize(&hundred_rows(), [0.5, 0.5, 0.0], &mut rng(8)).is_err());
}

#[test]
fn non_finite_rows_rejected() {
    let mut rows = Array2::zeros((2, 1));
    rows[[1, 0]] = f64::NAN;
    assert!(Dataset::new(rows, Targets::Real(vec![0.0, 1.0]), vec!["a".into()]).is_err());
}
