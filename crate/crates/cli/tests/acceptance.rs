//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

#[path = "../../core/tests/support/gauntlet.rs"]
mod gauntlet;
#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use pulsekit_core::config::{ParamValue, Params};
use pulsekit_core::evaluation::EvaluationReport;
use pulsekit_core::imputers::{
    dft, impute_channel_fft, interpolate_channel, FftParams, ImputerRegistry,
};
use pulsekit_core::missingness::{extended_row, mcar_row, transient_row, DEFAULT_MAX_GAP};
use pulsekit_core::rng::rng_from_seed;
use pulsekit_core::signal::{default_channel_names, runs_of, Mask, Sample, SignalSet, SplitTag};
use pulsekit_core::MaskedSample;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn pulsekit(args: &[&str], results: &Path, data_root: Option<&Path>) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pulsekit"));
    cmd.current_dir(repo_root())
        .args(args)
        .arg("--results-dir")
        .arg(results);
    if let Some(d) = data_root {
        cmd.env("PULSEKIT_DATA_DIR", d);
    }
    cmd.output().expect("binary runs")
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!(
            "took {:.3}s, limit {limit_s}s",
            elapsed.as_secs_f64()
        ))
    }
}

fn linear_exactness() -> Outcome {
    let mut rng = rng_from_seed(1);
    let start_time = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 1000;
        let a: f64 = rng.random_range(-10.0..10.0);
        let b: f64 = rng.random_range(-10.0..10.0);
        let truth: Vec<f64> = (0..n).map(|t| a * t as f64 / n as f64 + b).collect();
        let len = (rng.random_range(0.1..=0.5) * n as f64).round() as usize;
        let start = rng.random_range(1..n - len);
        let mut missing = vec![false; n];
        missing[start..start + len].fill(true);
        let mut x = truth.clone();
        x[start..start + len].fill(0.0);
        interpolate_channel(&mut x, &missing, 0).map_err(|e| e.to_string())?;
        for t in start..start + len {
            worst = worst.max((x[t] - truth[t]).abs());
        }
    }
    within(start_time.elapsed(), 1.0)?;
    if worst < 1e-12 {
        Ok(format!("max error {worst:.2e}"))
    } else {
        Err(format!("max error {worst:.2e} >= 1e-12"))
    }
}

fn spectral_recovery() -> Outcome {
    let x = oracle::two_tone();
    let n = x.len();
    let gap = (0.1 * n as f64).round() as usize;
    let start = 115;
    let mut missing = vec![false; n];
    missing[start..start + gap].fill(true);
    let params = FftParams {
        top_k: 4,
        max_iters: 100,
        tol: 1e-6,
    };
    let mut y = x.clone();
    y[start..start + gap].fill(0.0);
    let t0 = Instant::now();
    let (iters, converged) =
        impute_channel_fft(&mut y, &missing, &params, 0).map_err(|e| e.to_string())?;
    within(t0.elapsed(), 1.0)?;

    let (reference, ref_iters, _) =
        oracle::brute_force_fft_fill(&x, &missing, params.top_k, params.max_iters, params.tol);
    let err = (start..start + gap)
        .map(|t| (y[t] - x[t]).abs())
        .fold(0.0, f64::max);
    let dev = (0..n)
        .map(|t| (y[t] - reference[t]).abs())
        .fold(0.0, f64::max);
    if !converged || iters > 100 {
        return Err(format!("converged={converged} after {iters} iterations"));
    }
    if err >= 0.05 {
        return Err(format!("max error {err:.3e} >= 0.05"));
    }
    if dev > 1e-9 || iters != ref_iters {
        return Err(format!(
            "disagrees with brute force: max diff {dev:.2e}, iterations {iters} vs {ref_iters}"
        ));
    }
    Ok(format!(
        "max error {err:.2e}, {iters} iterations, matches brute force"
    ))
}

fn dft_oracle() -> Outcome {
    let mut rng = rng_from_seed(3);
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for &n in &[8usize, 64, 255, 256] {
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = dft(&x);
            for (a, (re, im)) in fast.iter().zip(oracle::direct_dft(&x)) {
                worst = worst.max((a.re - re).abs()).max((a.im - im).abs());
            }
        }
    }
    within(t0.elapsed(), 5.0)?;
    if worst <= 1e-9 {
        Ok(format!("max elementwise diff {worst:.2e}"))
    } else {
        Err(format!("max elementwise diff {worst:.2e} > 1e-9"))
    }
}

fn missingness_exactness() -> Outcome {
    let mut rng = rng_from_seed(4);
    for draw in 0..200 {
        let len = rng.random_range(100..=2000usize);
        let p = rng.random_range(0.05..=0.9);
        let want = (p * len as f64).round() as usize;

        let mut r = rng_from_seed(draw);
        let ext =
            extended_row(len, p, &mut r).map_err(|e| format!("extended T={len} p={p}: {e}"))?;
        let runs = runs_of(&ext);
        if runs.len() != 1 || runs[0].1 != want {
            return Err(format!(
                "extended T={len} p={p}: runs {runs:?}, want one of {want}"
            ));
        }

        let tr = transient_row(len, p, DEFAULT_MAX_GAP, &mut r)
            .map_err(|e| format!("transient T={len} p={p}: {e}"))?;
        let runs = runs_of(&tr);
        let total: usize = runs.iter().map(|r| r.1).sum();
        if total != want || runs.iter().any(|r| r.1 > DEFAULT_MAX_GAP) {
            return Err(format!(
                "transient T={len} p={p}: total {total} (want {want}), longest {:?}",
                runs.iter().map(|r| r.1).max()
            ));
        }
    }
    let n = 10_000usize;
    for (i, &p) in [0.05, 0.1, 0.3, 0.5, 0.9].iter().enumerate() {
        let row = mcar_row(n, p, &mut rng_from_seed(100 + i as u64)).map_err(|e| e.to_string())?;
        let k = row.iter().filter(|&&m| m).count() as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        if (k - n as f64 * p).abs() > 3.0 * sigma {
            return Err(format!("mcar p={p}: {k} missing, outside 3 sigma"));
        }
    }
    Ok("200 extended/transient draws exact, mcar within 3 sigma".into())
}

fn run_shipped(
    model_dir: &str,
    results: &Path,
) -> Result<(Duration, EvaluationReport, PathBuf), String> {
    let config = format!("{model_dir}/synthetic_extended.yaml");
    let t0 = Instant::now();
    let out = pulsekit(&["run", "-c", &config], results, None);
    let elapsed = t0.elapsed();
    if !out.status.success() {
        return Err(format!(
            "{config} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let model = match model_dir {
        "MeanFill" => "mean_fill",
        "LinearInterp" => "linear_interp",
        _ => "fft",
    };
    let dir = results.join("synthetic_extended").join(model);
    let report = EvaluationReport::read(&dir.join("report.json")).map_err(|e| e.to_string())?;
    Ok((elapsed, report, dir))
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ta, _, da) = run_shipped("FFT", a.path())?;
    let (tb, _, db) = run_shipped("FFT", b.path())?;
    within(ta.max(tb), 30.0)?;
    for f in ["report.json", "bundle.json"] {
        let x = std::fs::read(da.join(f)).map_err(|e| e.to_string())?;
        let y = std::fs::read(db.join(f)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{f} differs between runs"));
        }
    }
    Ok(format!(
        "report.json and bundle.json byte-identical ({:.2}s, {:.2}s)",
        ta.as_secs_f64(),
        tb.as_secs_f64()
    ))
}

fn method_ordering() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut mse = Vec::new();
    for m in ["FFT", "LinearInterp", "MeanFill"] {
        let (_, report, _) = run_shipped(m, dir.path())?;
        if report.n_samples != 50 {
            return Err(format!("{m}: {} samples scored, want 50", report.n_samples));
        }
        mse.push(report.aggregate.mse);
    }
    let line = format!(
        "fft {:.4} < linear_interp {:.4} < mean_fill {:.4}",
        mse[0], mse[1], mse[2]
    );
    if mse[0] < mse[1] && mse[1] < mse[2] {
        Ok(line)
    } else {
        Err(format!("ordering violated: {line}"))
    }
}

fn config_gauntlet() -> Outcome {
    let (valid, invalid) = gauntlet::run(&gauntlet::fixture_root());
    if valid.len() < 8 || invalid.len() < 8 {
        return Err(format!(
            "{} valid / {} invalid fixtures, need 8 each",
            valid.len(),
            invalid.len()
        ));
    }
    let bad: Vec<String> = valid
        .iter()
        .chain(&invalid)
        .filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}")))
        .collect();
    if bad.is_empty() {
        Ok(format!(
            "{} valid and {} invalid fixtures as designated",
            valid.len(),
            invalid.len()
        ))
    } else {
        Err(bad.join("; "))
    }
}

fn single_command_workflow() -> Outcome {
    let data = tempfile::tempdir().unwrap();
    let results = tempfile::tempdir().unwrap();
    let ds = data.path().join("customdatasetname");
    std::fs::create_dir_all(&ds).unwrap();
    let mut csv = String::from("ppg\n");
    for t in 0..20_000 {
        let s = t as f64 / 125.0;
        let v = (2.0 * std::f64::consts::PI * 1.1 * s).sin()
            + 0.3 * (2.0 * std::f64::consts::PI * 2.2 * s).sin();
        csv.push_str(&format!("{v}\n"));
    }
    std::fs::write(ds.join("recording.csv"), csv).unwrap();

    let out = pulsekit(
        &["run", "-d", "customdatasetname"],
        results.path(),
        Some(data.path()),
    );
    if !out.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let dir = results.path().join("default").join("fft");
    for f in ["report.json", "bundle.json"] {
        if !dir.join(f).is_file() {
            return Err(format!("{f} not written under {}", dir.display()));
        }
    }
    Ok("exit 0, report.json and bundle.json written".into())
}

fn preservation_and_identity() -> Outcome {
    let reg = ImputerRegistry::with_builtins();
    let mut models = Vec::new();
    for name in reg.names() {
        let mut params = Params::new();
        if name == "fft" {
            params.insert("max_iters".into(), ParamValue::Int(20));
        }
        models.push(reg.build(name, &params).map_err(|e| e.to_string())?);
    }
    let mut train_params = Params::new();
    train_params.insert("scope".into(), ParamValue::Str("train".into()));
    let train_mean = reg
        .build("mean_fill", &train_params)
        .map_err(|e| e.to_string())?;
    let train_set = SignalSet {
        samples: vec![Sample::new("train", vec![vec![0.5; 32]; 2])],
        sampling_rate_hz: 100.0,
        channel_names: default_channel_names(2),
        split_tag: SplitTag::Train,
    };
    let fitted = train_mean.fit(&train_set).map_err(|e| e.to_string())?;
    let empty = pulsekit_core::FittedState::empty();

    let mut rng = rng_from_seed(9);
    for case in 0..1000 {
        let channels = rng.random_range(1..=2usize);
        let n = rng.random_range(8..=256usize);
        let values: Vec<Vec<f64>> = (0..channels)
            .map(|_| (0..n).map(|_| rng.random_range(-50.0..50.0)).collect())
            .collect();
        let rate = rng.random_range(0.0..0.8);
        let mut rows: Vec<Vec<bool>> = (0..channels)
            .map(|_| (0..n).map(|_| rng.random_bool(rate)).collect())
            .collect();
        for row in rows.iter_mut() {
            row[0] = false;
            row[n - 1] = false;
        }
        let truth = Sample::new(format!("case{case}"), values.clone());
        let masked = MaskedSample::new(truth.clone(), Mask::from_rows(rows.clone()))
            .map_err(|e| e.to_string())?;
        let clean = MaskedSample::new(truth, Mask::new(channels, n)).map_err(|e| e.to_string())?;

        let all = models
            .iter()
            .map(|m| (m.as_ref(), &empty))
            .chain(std::iter::once((train_mean.as_ref(), &fitted)));
        for (imp, state) in all {
            let out = imp
                .impute(&masked, state)
                .map_err(|e| format!("{} case {case}: {e}", imp.name()))?;
            for c in 0..channels {
                for t in 0..n {
                    if !rows[c][t] && out.values[c][t].to_bits() != values[c][t].to_bits() {
                        return Err(format!(
                            "{} changed observed ({c}, {t}) in case {case}",
                            imp.name()
                        ));
                    }
                }
            }
            let same = imp.impute(&clean, state).map_err(|e| e.to_string())?;
            if same
                .values
                .iter()
                .flatten()
                .zip(values.iter().flatten())
                .any(|(a, b)| a.to_bits() != b.to_bits())
            {
                return Err(format!("{} is not the identity on case {case}", imp.name()));
            }
        }
    }
    Ok(format!(
        "{} imputer configurations x 1000 cases bit-exact",
        models.len() + 1
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("linear exactness", linear_exactness),
        ("spectral recovery", spectral_recovery),
        ("DFT oracle", dft_oracle),
        ("missingness exactness", missingness_exactness),
        ("determinism", determinism),
        ("method ordering", method_ordering),
        ("config gauntlet", config_gauntlet),
        ("single-command workflow", single_command_workflow),
        (
            "observed preservation and identity",
            preservation_and_identity,
        ),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
