use std::fs;
use std::path::Path;

use bbmh::cli::run_with;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("bbmh").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["sketch", "--scheme", "2u", "--k", "0", "--b", "8", "--dim-log2", "10", "a", "b"]).0, 2);
    assert_eq!(run(&["sketch", "--scheme", "5u", "--k", "4", "--b", "8", "--dim-log2", "10", "a", "b"]).0, 2);
    assert_eq!(run(&["sketch", "--scheme", "2u", "--k", "4", "--b", "33", "--dim-log2", "10", "a", "b"]).0, 2);
    assert_eq!(run(&["train", "--lambda", "0.1", "--C", "1", "a", "b"]).0, 2);
    assert_eq!(run(&["mse-sim", "--profile", "kong-hong", "--reps", "10"]).0, 2);
    assert_eq!(run(&["mse-sim", "--profile", "no-such-pair", "--reps", "100"]).0, 2);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("sketch"));
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    let out = dir.path().join("o.bbmh");
    let (code, _, err) =
        run(&["sketch", "--scheme", "2u", "--k", "4", "--b", "8", "--dim-log2", "10", p(&missing), p(&out)]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "+1 1:1\n-1 9:1 3:1\n").unwrap();
    let (code, _, err) =
        run(&["sketch", "--scheme", "2u", "--k", "4", "--b", "8", "--dim-log2", "10", p(&bad), p(&out)]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn end_to_end_sketch_train_predict() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    let sk = dir.path().join("d.bbmh");
    let model = dir.path().join("m.bblm");
    let metrics = dir.path().join("metrics.tsv");
    let synth =
        ["synth", "classification", "--n", "400", "--dim-log2", "12", "--density", "0.02", "--seed", "1", p(&data)];
    assert_eq!(run(&synth).0, 0);
    let sketch = [
        "sketch",
        "--scheme",
        "4u-bit",
        "--k",
        "64",
        "--b",
        "4",
        "--dim-log2",
        "12",
        "--min64",
        "--seed",
        "2",
        p(&data),
        p(&sk),
    ];
    assert_eq!(run(&sketch).0, 0);

    let (code, out, _) = run(&["estimate", p(&sk), "--pair", "0,1", "--corpus", p(&data)]);
    assert_eq!(code, 0);
    for key in ["r_hat", "r_raw", "p_hat", "c1", "c2", "var_theory", "r_full"] {
        assert!(out.lines().any(|l| l.starts_with(&format!("{key}\t"))), "{key} missing from {out}");
    }

    let train = ["train", "--epochs", "4", "--C", "1", "--metrics", p(&metrics), "--seed", "3", p(&sk), p(&model)];
    assert_eq!(run(&train).0, 0);
    let table = fs::read_to_string(&metrics).unwrap();
    assert_eq!(table.lines().next().unwrap(), "epoch\ttrain_obj\ttest_acc\tload_seconds\tupdate_seconds");
    assert_eq!(table.lines().count(), 5);

    let (code, out, _) = run(&["predict", p(&model), p(&sk)]);
    assert_eq!(code, 0);
    let acc: f64 = out.trim().strip_prefix("accuracy\t").unwrap().parse().unwrap();
    assert!(acc > 0.9, "training accuracy {acc}");
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.bbcv");
    run(&[
        "synth",
        "classification",
        "--n",
        "300",
        "--dim-log2",
        "12",
        "--density",
        "0.02",
        "--format",
        "corpus",
        p(&data),
    ]);
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2", "4"].iter().enumerate() {
        let out = dir.path().join(format!("s{i}.bbmh"));
        let args = ["--threads", threads, "--chunk-size", "17", "sketch", "--scheme", "perm", "--k", "30", "--b", "2"];
        let code = run(&[&args[..], &["--dim-log2", "12", "--seed", "5", p(&data), p(&out)]].concat()).0;
        assert_eq!(code, 0);
        outputs.push(fs::read(&out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let sim = ["mse-sim", "--profile", "gambia-kiribati", "--reps", "100", "--k", "10,20", "--b", "1", "--seed", "4"];
    let (code, first, _) = run(&sim);
    assert_eq!(code, 0);
    assert_eq!(first.lines().next().unwrap(), "b\tk\treps\tmse\tbias\tvar_theory\tscheme\tD");
    assert_eq!(run(&[&["--threads", "3"][..], &sim[..]].concat()).1, first);
}

#[test]
fn expand_and_vw_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    let sk = dir.path().join("d.bbmh");
    let expanded = dir.path().join("e.txt");
    let vw = dir.path().join("v.txt");
    fs::write(&data, "+1 1:1 5:1 9:1\n-1 2:1 3:1\n").unwrap();
    run(&["sketch", "--scheme", "2u", "--k", "3", "--b", "2", "--dim-log2", "4", p(&data), p(&sk)]);
    assert_eq!(run(&["expand", p(&sk), p(&expanded)]).0, 0);
    let text = fs::read_to_string(&expanded).unwrap();
    for line in text.lines() {
        let idx: Vec<u32> = line.split(' ').skip(1).map(|f| f.strip_suffix(":1").unwrap().parse().unwrap()).collect();
        assert_eq!(idx.len(), 3);
        for (j, &i) in idx.iter().enumerate() {
            assert!((4 * j as u32 + 1..=4 * j as u32 + 4).contains(&i), "{line}");
        }
    }
    assert_eq!(run(&["vw-project", "--bins", "8", p(&data), p(&vw)]).0, 0);
    assert_eq!(fs::read_to_string(&vw).unwrap().lines().count(), 2);
}
