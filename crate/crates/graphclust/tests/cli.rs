//! End-to-end tests of the command layer and the binary: file formats,
//! reproducibility, and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

use graphclust::cli::{
    cmd_cluster, cmd_split, cmd_sweep, cmd_synth, ClusterArgs, InputOptions, QuantSpec, SplitArgs,
    SweepArgs, SynthArgs,
};
use graphclust::data::{parse_edge_list, ParseOptions, ScaleMethod, SplitManifest};
use graphclust::model::ClusterModel;
use graphclust::synth::{PlantedPartitionSpec, WeightModel};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graphclust"))
}

fn synth_dir(dir: &Path, spec: &PlantedPartitionSpec) {
    let code = cmd_synth(&SynthArgs { spec: spec.clone(), out_dir: dir.to_path_buf() }).unwrap();
    assert_eq!(code, 0);
}

fn default_input(path: &Path) -> InputOptions {
    InputOptions {
        path: path.to_path_buf(),
        symmetric: true,
        allow_self_loops: false,
        scale: ScaleMethod::None,
    }
}

#[test]
fn synth_then_cluster_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = PlantedPartitionSpec {
        intra_weight_mean: 0.9,
        inter_weight_mean: 0.1,
        weight_noise: 0.05,
        seed: 7,
        ..PlantedPartitionSpec::new(24, 4)
    };
    synth_dir(tmp.path(), &spec);
    let dataset_path = tmp.path().join("dataset.tsv");
    let labels_path = tmp.path().join("labels.tsv");
    assert!(dataset_path.exists() && labels_path.exists());

    // the emitted dataset re-parses to an identical dataset
    let text = fs::read_to_string(&dataset_path).unwrap();
    let opts = ParseOptions { symmetric: true, ..ParseOptions::default() };
    let once = parse_edge_list(&text, &opts).unwrap();
    let twice = parse_edge_list(&once.to_edge_list(), &opts).unwrap();
    assert_eq!(once, twice);

    let out = tmp.path().join("run");
    let code = cmd_cluster(&ClusterArgs {
        input: default_input(&dataset_path),
        clusters: 4,
        beta: 64.0,
        delta: 0.05,
        quantization: QuantSpec::RuleOfThumb,
        fractions: None,
        seed: 3,
        restarts: 5,
        anneal: true,
        out_dir: out.clone(),
        labels: Some(labels_path),
    })
    .unwrap();
    assert_eq!(code, 0);

    // the model file round-trips exactly
    let model_text = fs::read_to_string(out.join("model.txt")).unwrap();
    let model = ClusterModel::from_text(&model_text).unwrap();
    assert_eq!(model.to_text(), model_text);
    assert_eq!(model.num_clusters(), 4);
    assert_eq!(model.num_nodes(), 24);

    // trace and bound artifacts exist and carry the seed header
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("# graphclust cluster seed=3"));
    assert!(trace.contains("restart,beta,iter,objective,loss,mi"));
    let bound = fs::read_to_string(out.join("bound.txt")).unwrap();
    assert!(bound.contains("expected_loss_bound "));
    assert!(bound.contains("quantization_delta "));
}

#[test]
fn single_cluster_reports_variance_and_zero_information() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = PlantedPartitionSpec { seed: 11, ..PlantedPartitionSpec::new(12, 3) };
    synth_dir(tmp.path(), &spec);
    let dataset_path = tmp.path().join("dataset.tsv");

    let out = tmp.path().join("run");
    let code = cmd_cluster(&ClusterArgs {
        input: default_input(&dataset_path),
        clusters: 1,
        beta: 1.0,
        delta: 0.05,
        quantization: QuantSpec::RuleOfThumb,
        fractions: None,
        seed: 0,
        restarts: 2,
        anneal: true,
        out_dir: out.clone(),
        labels: None,
    })
    .unwrap();
    assert_eq!(code, 0);

    let text = fs::read_to_string(tmp.path().join("dataset.tsv")).unwrap();
    let opts = ParseOptions { symmetric: true, ..ParseOptions::default() };
    let data = parse_edge_list(&text, &opts).unwrap();
    let bound = fs::read_to_string(out.join("bound.txt")).unwrap();
    let field = |name: &str| -> f64 {
        bound
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{name} ")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((field("empirical_loss") - data.weight_variance().unwrap()).abs() < 1e-12);
    assert_eq!(field("mutual_info"), 0.0);
}

#[test]
fn split_writes_shares_and_manifest_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = PlantedPartitionSpec { seed: 5, ..PlantedPartitionSpec::new(20, 2) };
    synth_dir(tmp.path(), &spec);
    let dataset_path = tmp.path().join("dataset.tsv");

    let out = tmp.path().join("splits");
    let code = cmd_split(&SplitArgs {
        input: default_input(&dataset_path),
        fractions: (0.6, 0.2, 0.2),
        seed: 42,
        out_dir: out.clone(),
    })
    .unwrap();
    assert_eq!(code, 0);

    let opts = ParseOptions { symmetric: true, ..ParseOptions::default() };
    let full = parse_edge_list(&fs::read_to_string(&dataset_path).unwrap(), &opts).unwrap();
    let n = full.num_edges();
    let train =
        parse_edge_list(&fs::read_to_string(out.join("train.tsv")).unwrap(), &opts).unwrap();
    let cv = parse_edge_list(&fs::read_to_string(out.join("cv.tsv")).unwrap(), &opts).unwrap();
    let test = parse_edge_list(&fs::read_to_string(out.join("test.tsv")).unwrap(), &opts).unwrap();
    assert_eq!(train.num_edges(), (n as f64 * 0.6).floor() as usize);
    assert_eq!(cv.num_edges(), (n as f64 * 0.2).floor() as usize);
    assert_eq!(train.num_edges() + cv.num_edges() + test.num_edges(), n);

    // the manifest reproduces the exact same shares from the original
    let manifest =
        SplitManifest::from_text(&fs::read_to_string(out.join("split_manifest.txt")).unwrap())
            .unwrap();
    assert_eq!(manifest.seed, 42);
    let (tr2, cv2, te2) = manifest.apply(&full).unwrap();
    assert_eq!(tr2.num_edges(), train.num_edges());
    assert_eq!(cv2.num_edges(), cv.num_edges());
    assert_eq!(te2.num_edges(), test.num_edges());
    // identical seed, identical bytes
    let before = fs::read_to_string(out.join("train.tsv")).unwrap();
    let out2 = tmp.path().join("splits2");
    cmd_split(&SplitArgs {
        input: default_input(&dataset_path),
        fractions: (0.6, 0.2, 0.2),
        seed: 42,
        out_dir: out2.clone(),
    })
    .unwrap();
    assert_eq!(before, fs::read_to_string(out2.join("train.tsv")).unwrap());
}

#[test]
fn sweep_produces_ordered_csv_with_starred_minimum() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = PlantedPartitionSpec {
        intra_weight_mean: 0.85,
        inter_weight_mean: 0.15,
        weight_noise: 0.05,
        seed: 9,
        ..PlantedPartitionSpec::new(18, 3)
    };
    synth_dir(tmp.path(), &spec);
    let dataset_path = tmp.path().join("dataset.tsv");

    let out = tmp.path().join("sweep");
    let args = SweepArgs {
        input: default_input(&dataset_path),
        clusters: 3,
        beta: 4.0,
        beta_grid: None,
        cluster_grid: Some(vec![1, 2, 3, 4]),
        delta: 0.05,
        quantization: QuantSpec::RuleOfThumb,
        fractions: Some((0.8, 0.1, 0.1)),
        seed: 13,
        restarts: 3,
        anneal: true,
        out_dir: out.clone(),
        plot: true,
    };
    let code = cmd_sweep(&args).unwrap();
    assert_eq!(code, 0);

    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "param,train_loss,cv_loss,test_loss,mi,bound,best");
    assert_eq!(rows.len(), 1 + 4);
    // grid order preserved and the starred row carries the smallest bound
    let mut bounds = Vec::new();
    let mut starred = None;
    for (k, row) in rows[1..].iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0].parse::<f64>().unwrap(), (k + 1) as f64);
        bounds.push(cols[5].parse::<f64>().unwrap());
        if cols[6] == "1" {
            assert!(starred.is_none());
            starred = Some(k);
        }
    }
    let starred = starred.expect("one starred row");
    let min = bounds.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(bounds[starred], min);
    assert!(out.join("sweep.svg").exists());

    // identical config, byte-identical outputs
    let again = tmp.path().join("sweep2");
    cmd_sweep(&SweepArgs { out_dir: again.clone(), ..args }).unwrap();
    assert_eq!(csv, fs::read_to_string(again.join("sweep.csv")).unwrap());
}

#[test]
fn singleton_sweep_matches_cluster_bound() {
    // a one-point grid is just a cluster run: identical bound
    let tmp = tempfile::tempdir().unwrap();
    let spec = PlantedPartitionSpec { seed: 31, ..PlantedPartitionSpec::new(14, 2) };
    synth_dir(tmp.path(), &spec);
    let dataset_path = tmp.path().join("dataset.tsv");

    let run = tmp.path().join("run");
    cmd_cluster(&ClusterArgs {
        input: default_input(&dataset_path),
        clusters: 1,
        beta: 2.0,
        delta: 0.05,
        quantization: QuantSpec::RuleOfThumb,
        fractions: None,
        seed: 8,
        restarts: 3,
        anneal: true,
        out_dir: run.clone(),
        labels: None,
    })
    .unwrap();
    let bound_txt = fs::read_to_string(run.join("bound.txt")).unwrap();
    let cluster_bound: f64 = bound_txt
        .lines()
        .find_map(|l| l.strip_prefix("expected_loss_bound "))
        .unwrap()
        .parse()
        .unwrap();

    let sweep = tmp.path().join("sweep");
    cmd_sweep(&SweepArgs {
        input: default_input(&dataset_path),
        clusters: 1,
        beta: 2.0,
        beta_grid: None,
        cluster_grid: Some(vec![1]),
        delta: 0.05,
        quantization: QuantSpec::RuleOfThumb,
        fractions: None,
        seed: 8,
        restarts: 3,
        anneal: true,
        out_dir: sweep.clone(),
        plot: false,
    })
    .unwrap();
    let csv = fs::read_to_string(sweep.join("sweep.csv")).unwrap();
    let row = csv.lines().last().unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols.len(), 7);
    // the CSV carries 10 significant digits; bound.txt is full precision
    let sweep_bound: f64 = cols[5].parse().unwrap();
    assert!((sweep_bound - cluster_bound).abs() < 1e-9 * cluster_bound.max(1.0));
}

#[test]
fn auto_beta_grid_covers_the_default_range() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = PlantedPartitionSpec { seed: 17, ..PlantedPartitionSpec::new(12, 2) };
    synth_dir(tmp.path(), &spec);
    let out = tmp.path().join("sweep");
    let status = bin()
        .args([
            "sweep",
            "--input",
            tmp.path().join("dataset.tsv").to_str().unwrap(),
            "--symmetric",
            "--clusters",
            "2",
            "--beta-grid",
            "auto",
            "--restarts",
            "2",
            "--seed",
            "4",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 13); // beta*N = 1..4096 in two-fold steps
    let n = 12 * 11 / 2;
    let first: f64 = rows[1].split(',').next().unwrap().parse().unwrap();
    let last: f64 = rows[13].split(',').next().unwrap().parse().unwrap();
    assert!((first - 1.0 / n as f64).abs() < 1e-12);
    assert!((last - 4096.0 / n as f64).abs() < 1e-9);
}

#[test]
fn binary_bound_matches_library_numbers() {
    // the CLI is a thin wrapper: bound numbers must match the library
    let output = bin()
        .args([
            "bound",
            "--empirical-loss",
            "0.1",
            "--mutual-info",
            "0",
            "--nodes",
            "20",
            "--clusters",
            "1",
            "--samples",
            "500",
            "--alphabet",
            "2",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let field = |name: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{name} ")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((field("complexity") - 0.020970125914877936).abs() < 1e-14);
    assert!((field("expected_loss_bound") - 0.17231425555870966).abs() < 1e-10);
}

#[test]
fn binary_exit_codes() {
    // help and version are success
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    // usage error: unknown flag
    let out = bin().args(["cluster", "--definitely-not-a-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // config error: bad quantization value
    let out = bin()
        .args([
            "bound",
            "--empirical-loss",
            "0.1",
            "--mutual-info",
            "0",
            "--nodes",
            "20",
            "--clusters",
            "1",
            "--samples",
            "500",
            "--quantization",
            "nonsense",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // data error: unreadable input
    let out = bin()
        .args(["cluster", "--input", "/nonexistent/graph.tsv", "--clusters", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // data error: malformed edge list
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.tsv");
    fs::write(&bad, "a\tb\nnot-enough-fields\n").unwrap();
    let out = bin()
        .args(["cluster", "--input", bad.to_str().unwrap(), "--clusters", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn binary_synth_cluster_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_out = tmp.path().join("synth");
    let status = bin()
        .args([
            "synth",
            "--nodes",
            "24",
            "--blocks",
            "4",
            "--intra",
            "0.9",
            "--inter",
            "0.1",
            "--noise",
            "0.05",
            "--seed",
            "21",
            "--out-dir",
            synth_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    // default restart count; the best of those must recover the blocks
    let run_out = tmp.path().join("run");
    let output = bin()
        .args([
            "cluster",
            "--input",
            synth_out.join("dataset.tsv").to_str().unwrap(),
            "--symmetric",
            "--clusters",
            "4",
            "--beta",
            "64",
            "--seed",
            "2",
            "--labels",
            synth_out.join("labels.tsv").to_str().unwrap(),
            "--out-dir",
            run_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    let ari: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("ari "))
        .expect("ari printed when labels given")
        .parse()
        .unwrap();
    assert!(ari >= 0.9, "pipeline ARI {ari}");
}

#[test]
fn bernoulli_weight_model_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("synth");
    let status = bin()
        .args([
            "synth",
            "--nodes",
            "10",
            "--blocks",
            "2",
            "--intra",
            "0.8",
            "--inter",
            "0.2",
            "--weight-model",
            "bernoulli",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let opts = ParseOptions { symmetric: true, ..ParseOptions::default() };
    let data =
        parse_edge_list(&fs::read_to_string(out.join("dataset.tsv")).unwrap(), &opts).unwrap();
    assert!(data.edges().iter().all(|e| e.w == 0.0 || e.w == 1.0));
    let _ = WeightModel::Bernoulli; // flag maps onto this model
}
