use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rffgpc::data::{balanced_sample, fit_standardize, overall_accuracy, synthetic};
use rffgpc::{fit, Dataset, Mode, TrainConfig, TrainTrace, TrainedModel};

use crate::util::{ensure, oa, within, Ctx};

fn train(ctx: &mut Ctx, label: String, data: &Dataset, config: &TrainConfig) -> Result<TrainedModel, String> {
    let (model, trace) = fit(data, config).map_err(|e| format!("{label}: {e}"))?;
    ctx.traces.push((label, trace));
    Ok(model)
}

/// `n_train` balanced training rows plus `n_test` held-out rows from the rest.
fn split(all: &Dataset, n_train: usize, seed: u64) -> Result<(Dataset, Dataset), String> {
    balanced_sample(all, n_train, seed).map_err(|e| e.to_string())
}

/// Bayes rule for unit-covariance Gaussians at ±(2, 2): pick the class whose
/// mean is closer.
fn bayes_rule_accuracy(data: &Dataset) -> f64 {
    let correct = data
        .x
        .rows()
        .into_iter()
        .zip(data.y.iter())
        .filter(|(r, &y)| {
            let d1 = (r[0] - 2.0).powi(2) + (r[1] - 2.0).powi(2);
            let d0 = (r[0] + 2.0).powi(2) + (r[1] + 2.0).powi(2);
            u8::from(d1 < d0) == y
        })
        .count();
    correct as f64 / data.len() as f64
}

pub fn blobs_accuracy(ctx: &mut Ctx) -> Result<String, String> {
    let start = Instant::now();
    let (train_set, test_set) = split(&synthetic::two_blobs(4000, 71), 2000, 71)?;
    let model = train(ctx, "blobs rff D=50".into(), &train_set, &TrainConfig::new(Mode::Rff, 50, 71))?;
    let test_oa = oa(&model, &test_set);
    let analytic = rffgpc::oracles::blobs_bayes_accuracy();
    let empirical = bayes_rule_accuracy(&test_set);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("held-out OA {test_oa:.4}; Bayes OA analytic {analytic:.4}, empirical {empirical:.4}");
    ensure((analytic - 0.998).abs() < 1e-3, || format!("{detail}; Bayes oracle off"))?;
    ensure(test_oa >= 0.95, || detail.clone())?;
    within(secs, 60.0, "blobs")?;
    Ok(detail)
}

/// Least-squares linear discriminant on `[x, 1]` with ±1 targets.
fn linear_classifier_accuracy(train_set: &Dataset, test_set: &Dataset) -> f64 {
    let aug = |x: ArrayView2<f64>| {
        let mut a = Array2::<f64>::ones((x.nrows(), x.ncols() + 1));
        a.slice_mut(ndarray::s![.., ..x.ncols()]).assign(&x);
        a
    };
    let a = aug(train_set.x.view());
    let t = train_set.y.mapv(|v| if v == 1 { 1.0 } else { -1.0 });
    let mut m = a.t().dot(&a);
    let mut b = a.t().dot(&t);
    // Gaussian elimination with partial pivoting on the small normal system.
    let k = m.nrows();
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| m[[i, c]].abs().total_cmp(&m[[j, c]].abs())).unwrap_or(c);
        for j in 0..k {
            m.swap([c, j], [p, j]);
        }
        b.swap(c, p);
        for r in (c + 1)..k {
            let f = m[[r, c]] / m[[c, c]];
            for j in c..k {
                m[[r, j]] -= f * m[[c, j]];
            }
            b[r] -= f * b[c];
        }
    }
    let mut w = vec![0.0; k];
    for c in (0..k).rev() {
        let s: f64 = ((c + 1)..k).map(|j| m[[c, j]] * w[j]).sum();
        w[c] = (b[c] - s) / m[[c, c]];
    }
    let scores = aug(test_set.x.view()).dot(&ndarray::Array1::from(w));
    let pred = scores.mapv(|s| u8::from(s >= 0.0));
    overall_accuracy(pred.view(), test_set.y.view()).unwrap_or(f64::NAN)
}

pub fn annulus_accuracy(ctx: &mut Ctx) -> Result<String, String> {
    let start = Instant::now();
    let (train_set, test_set) = split(&synthetic::annulus(4000, 72), 2000, 72)?;
    let model = train(ctx, "annulus rff D=50".into(), &train_set, &TrainConfig::new(Mode::Rff, 50, 72))?;
    let test_oa = oa(&model, &test_set);
    let linear = linear_classifier_accuracy(&train_set, &test_set);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("held-out OA {test_oa:.4}; linear discriminant OA {linear:.4}");
    ensure(linear < 0.6, || format!("{detail}; dataset is not linearly hard"))?;
    ensure(test_oa >= 0.90, || detail.clone())?;
    within(secs, 60.0, "annulus")?;
    Ok(detail)
}

pub fn vff_advantage(ctx: &mut Ctx) -> Result<String, String> {
    let start = Instant::now();
    let (mut rff_total, mut vff_total) = (0.0, 0.0);
    let mut per_seed = Vec::new();
    for seed in 0..5u64 {
        let (train_set, test_set) = split(&synthetic::anisotropic(3000, 20, 0.1, 90 + seed), 1000, seed)?;
        let rff = train(ctx, format!("anisotropic rff D=2 seed {seed}"), &train_set, &TrainConfig::new(Mode::Rff, 2, seed))?;
        let vff = train(ctx, format!("anisotropic vff D=2 seed {seed}"), &train_set, &TrainConfig::new(Mode::Vff, 2, seed))?;
        let (a, b) = (oa(&rff, &test_set), oa(&vff, &test_set));
        per_seed.push(format!("{:+.3}", b - a));
        rff_total += a;
        vff_total += b;
    }
    let (rff_mean, vff_mean) = (rff_total / 5.0, vff_total / 5.0);
    let gain = vff_mean - rff_mean;
    let detail = format!(
        "mean held-out OA VFF {vff_mean:.4} vs RFF {rff_mean:.4}, gain {gain:+.4} (per seed {})",
        per_seed.join(" ")
    );
    ensure(gain >= 0.03, || detail.clone())?;
    within(start.elapsed().as_secs_f64(), 300.0, "VFF comparison")?;
    Ok(detail)
}

pub fn overfitting(ctx: &mut Ctx) -> Result<String, String> {
    let (train_set, test_set) = split(&synthetic::anisotropic(2500, 20, 0.1, 100), 500, 100)?;
    let mut big = TrainConfig::new(Mode::Vff, 150, 5);
    big.max_outer_iters = 10;
    big.optimizer.max_evals = 50;
    let wide = train(ctx, "anisotropic vff D=150".into(), &train_set, &big)?;
    let narrow = train(ctx, "anisotropic vff D=2 n=500".into(), &train_set, &TrainConfig::new(Mode::Vff, 2, 5))?;
    let (train150, test150) = (oa(&wide, &train_set), oa(&wide, &test_set));
    let train2 = oa(&narrow, &train_set);
    let detail = format!(
        "D=150 train {train150:.4} test {test150:.4} (gap {:+.4}); D=2 train {train2:.4} (gap {:+.4})",
        train150 - test150,
        train150 - train2
    );
    ensure(train150 >= test150, || detail.clone())?;
    ensure(train150 > train2, || detail.clone())?;
    Ok(detail)
}

/// Fixed-work configuration: the tolerances never trigger, so every run does
/// the same number of outer iterations and (barring line-search stalls) the
/// same number of objective evaluations.
fn fixed_budget(outer: usize, evals: usize) -> TrainConfig {
    let mut c = TrainConfig::new(Mode::Rff, 50, 11);
    c.max_outer_iters = outer;
    c.rel_tol = 1e-300;
    c.optimizer.max_evals = evals;
    c.optimizer.grad_tol = 1e-300;
    c.optimizer.step_tol = 1e-300;
    c
}

fn timed_fit(ctx: &mut Ctx, label: String, data: &Dataset, config: &TrainConfig) -> Result<(TrainedModel, f64, usize), String> {
    let start = Instant::now();
    let (model, trace) = fit(data, config).map_err(|e| format!("{label}: {e}"))?;
    let secs = start.elapsed().as_secs_f64();
    let evals = total_evals(&trace);
    ctx.traces.push((label, trace));
    Ok((model, secs, evals))
}

fn total_evals(trace: &TrainTrace) -> usize {
    trace.records.iter().map(|r| r.evals).sum()
}

fn per_row_predict_seconds(model: &TrainedModel, x: ArrayView2<f64>) -> Result<f64, String> {
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let start = Instant::now();
        model.predict_proba(x).map_err(|e| e.to_string())?;
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best / x.nrows() as f64)
}

pub fn scaling(ctx: &mut Ctx) -> Result<String, String> {
    let start = Instant::now();
    let config = fixed_budget(5, 20);
    let small = synthetic::two_blobs(10_000, 111);
    let large = synthetic::two_blobs(40_000, 112);
    let (_, t_small, e_small) = timed_fit(ctx, "scaling n=10000".into(), &small, &config)?;
    let (_, t_large, e_large) = timed_fit(ctx, "scaling n=40000".into(), &large, &config)?;
    let fit_ratio = t_large / t_small;

    // Both prediction models get the same training budget; only n differs.
    let (m3, _, _) = timed_fit(ctx, "predict model n=1000".into(), &synthetic::two_blobs(1_000, 113), &config)?;
    let (m5, _, _) = timed_fit(ctx, "predict model n=100000".into(), &synthetic::two_blobs(100_000, 114), &config)?;
    let probe = synthetic::two_blobs(20_000, 115);
    let p3 = per_row_predict_seconds(&m3, probe.x.view())?;
    let p5 = per_row_predict_seconds(&m5, probe.x.view())?;
    let predict_diff = (p3 - p5).abs() / p3.min(p5);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "fit {t_small:.2} s ({e_small} evals) -> {t_large:.2} s ({e_large} evals), ratio {fit_ratio:.2}; \
         predict {:.2} vs {:.2} us/row (sigma {:.2} vs {:.2}), difference {:.1}%",
        p3 * 1e6,
        p5 * 1e6,
        m3.sigma,
        m5.sigma,
        100.0 * predict_diff
    );
    ensure(fit_ratio <= 5.0, || detail.clone())?;
    ensure(predict_diff < 0.5, || detail.clone())?;
    within(secs, 600.0, "scaling")?;
    Ok(detail)
}

pub fn monotonicity(ctx: &mut Ctx) -> Result<String, String> {
    // A few more configurations on top of the traces gathered so far.
    let annulus = synthetic::annulus(600, 73);
    let mut ridge = TrainConfig::new(Mode::Vff, 10, 73);
    ridge.ridge_on_v = true;
    train(ctx, "annulus vff D=10 ridge".into(), &annulus, &ridge)?;
    let blobs = synthetic::two_blobs(600, 74);
    let spec = fit_standardize(blobs.x.view());
    let scaled = Dataset::new(spec.apply(blobs.x.view()).map_err(|e| e.to_string())?, blobs.y.clone(), None)
        .map_err(|e| e.to_string())?;
    train(ctx, "standardized blobs rff D=5".into(), &scaled, &TrainConfig::new(Mode::Rff, 5, 74))?;

    let bad: Vec<&str> = ctx
        .traces
        .iter()
        .filter(|(_, t)| !t.is_monotone(1e-8))
        .map(|(l, _)| l.as_str())
        .collect();
    let steps: usize = ctx.traces.iter().map(|(_, t)| t.records.len().saturating_sub(1)).sum();
    let detail = format!("{} traces, {steps} outer steps checked", ctx.traces.len());
    ensure(bad.is_empty(), || format!("{detail}; non-monotone: {}", bad.join(", ")))?;
    Ok(detail)
}
