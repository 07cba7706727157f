use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crate::util::{ensure, Ctx};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Result<Output, String> {
    Command::new(env!("CARGO_BIN_EXE_rffgpc"))
        .args(args)
        .env("RFFGPC_THREADS", "1")
        .output()
        .map_err(|e| format!("cannot run binary: {e}"))
}

fn expect_code(args: &[&str], want: i32) -> Result<Output, String> {
    let out = run(args)?;
    let got = out.status.code().unwrap_or(-1);
    ensure(got == want, || {
        format!(
            "`rffgpc {}` exited {got}, expected {want}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        )
    })?;
    Ok(out)
}

fn path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn read(p: &Path) -> Result<String, String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn train(dir: &Path, data: &str, name: &str, extra: &[&str]) -> Result<PathBuf, String> {
    let model = dir.join(name);
    let m = path(&model);
    let mut args = vec!["train", "--data", data, "--num-freqs", "20", "--seed", "4", "--out", &m];
    args.extend_from_slice(extra);
    expect_code(&args, 0)?;
    Ok(model)
}

fn exit_codes(dir: &Path) -> Result<usize, String> {
    let blobs = fixture("blobs.csv");
    let headerless = fixture("headerless.csv");
    let (d3, empty) = (fixture("d3.csv"), fixture("empty.csv"));
    let unused = path(&dir.join("unused.json"));
    let model = path(&train(dir, &blobs, "codes.json", &["--max-iters", "3"])?);
    let cases: [(Vec<&str>, i32); 7] = [
        (vec!["train", "--data", &headerless, "--no-header", "--num-freqs", "5", "--out", &unused], 2),
        (vec!["train", "--data", &blobs, "--num-freqs", "0", "--out", &unused], 2),
        (vec!["train", "--data", "/nonexistent/data.csv", "--num-freqs", "3", "--out", &unused], 2),
        (vec!["predict", "--model", &model, "--data", &d3, "--out", &unused], 2),
        (vec!["evaluate", "--data", &empty, "--model", &model], 2),
        (vec!["kernel-check", "--dims", "2", "--pairs", "0"], 2),
        (vec!["evaluate", "--data", &blobs, "--model", &model], 0),
    ];
    for (args, want) in &cases {
        expect_code(args, *want)?;
    }
    Ok(cases.len() + 1)
}

fn benchmark_rows(dir: &Path) -> Result<usize, String> {
    let annulus = fixture("annulus.csv");
    let once = |name: &str| -> Result<String, String> {
        let out = dir.join(name);
        expect_code(
            &[
                "benchmark", "--data", &annulus, "--grid-n", "60,40", "--grid-d", "8,4", "--modes", "rff", "--repeats",
                "2", "--seed", "3", "--max-iters", "5", "--out", &path(&out),
            ],
            0,
        )?;
        read(&out)
    };
    let (a, b) = (once("bench_a.csv")?, once("bench_b.csv")?);
    let mut lines = a.lines();
    ensure(lines.next() == Some("mode,n,D,seed,train_seconds,test_seconds,train_oa,test_oa,status"), || {
        "unexpected benchmark header".into()
    })?;
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    ensure(rows.len() == 8, || format!("expected 8 benchmark rows, found {}", rows.len()))?;
    let keys: Vec<(String, usize, usize, u64)> = rows
        .iter()
        .map(|r| {
            (
                r[0].to_string(),
                r[1].parse().unwrap_or(0),
                r[2].parse().unwrap_or(0),
                r[3].parse().unwrap_or(0),
            )
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    ensure(keys == sorted, || format!("benchmark rows out of order: {keys:?}"))?;
    ensure(rows.iter().all(|r| r[8] == "ok"), || "a benchmark cell failed".into())?;
    let accuracies = |text: &str| -> Vec<String> {
        text.lines().skip(1).map(|l| l.split(',').skip(6).take(2).collect::<Vec<_>>().join(",")).collect()
    };
    ensure(accuracies(&a) == accuracies(&b), || "benchmark accuracies differ between identical runs".into())?;
    Ok(1)
}

fn round_trip(dir: &Path) -> Result<usize, String> {
    let blobs = fixture("blobs.csv");
    let model = train(dir, &blobs, "rt.json", &["--preprocess", "standardize-pca:2", "--max-iters", "4"])?;
    let text = read(&model)?;
    let loaded = rffgpc::TrainedModel::load(&model).map_err(|e| e.to_string())?;
    let again = dir.join("rt_again.json");
    loaded.save(&again).map_err(|e| e.to_string())?;
    ensure(read(&again)? == text, || "re-saved model text differs".into())?;
    let proba = |m: &Path, name: &str| -> Result<String, String> {
        let out = dir.join(name);
        expect_code(&["predict", "--model", &path(m), "--data", &blobs, "--out", &path(&out), "--proba"], 0)?;
        read(&out)
    };
    ensure(proba(&model, "p1.txt")? == proba(&again, "p2.txt")?, || {
        "predictions differ after a save/load cycle".into()
    })?;
    Ok(2)
}

fn fixture_traces(dir: &Path) -> Result<usize, String> {
    let mut count = 0;
    for (name, mode) in [("blobs.csv", "rff"), ("annulus.csv", "rff"), ("annulus.csv", "vff")] {
        let stem = format!("trace_{}_{mode}", name.trim_end_matches(".csv"));
        train(dir, &fixture(name), &format!("{stem}.json"), &["--mode", mode])?;
        let trace = read(&dir.join(format!("{stem}.trace.csv")))?;
        let log_f: Vec<f64> = trace.lines().skip(1).filter_map(|l| l.split(',').nth(1)?.parse().ok()).collect();
        ensure(log_f.len() >= 2, || format!("{stem}: trace too short"))?;
        for w in log_f.windows(2) {
            ensure(w[1] >= w[0] - 1e-8 * w[0].abs(), || format!("{stem}: log_F fell {} -> {}", w[0], w[1]))?;
        }
        count += 1;
    }
    Ok(count)
}

pub fn cli_golden(_: &mut Ctx) -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let codes = exit_codes(dir.path())?;
    benchmark_rows(dir.path())?;
    round_trip(dir.path())?;
    let traces = fixture_traces(dir.path())?;
    Ok(format!(
        "{codes} exit-code cases, 8 sorted reproducible benchmark rows, bit-exact round trip, {traces} monotone fixture traces"
    ))
}
