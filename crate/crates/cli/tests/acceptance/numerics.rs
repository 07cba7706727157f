use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1};
use rffgpc::oracles::{central_gradient, log_marginal_2d, posterior_2x2};
use rffgpc::rng::SeededRng;
use rffgpc::variational::{log_f_at, objective_gradient, vff_theta};
use rffgpc::{approx_kernel, compute_posterior, log_bound, update_xi, FrequencyBasis, Mode};

use crate::util::{ensure, instance, within, Ctx};

fn exact_se(a: ArrayView1<f64>, b: ArrayView1<f64>, sigma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b.iter()).map(|(p, q)| (p - q).powi(2)).sum();
    (-sq / (2.0 * sigma * sigma)).exp()
}

pub fn kernel_convergence(_: &mut Ctx) -> Result<String, String> {
    let start = Instant::now();
    let mut rng = SeededRng::new(2024);
    let pairs: Vec<(Array1<f64>, Array1<f64>)> = (0..20)
        .map(|_| (rng.normal_matrix(1, 2).row(0).to_owned(), rng.normal_matrix(1, 2).row(0).to_owned()))
        .collect();
    let mean_err = |nf: usize| -> f64 {
        let mut total = 0.0;
        for seed in 0..50u64 {
            let basis = FrequencyBasis::sample(nf, 2, seed).expect("basis");
            for (a, b) in &pairs {
                let approx = approx_kernel(a.view(), b.view(), &basis, 1.0, 1.0).expect("kernel");
                total += (approx - exact_se(a.view(), b.view(), 1.0)).abs();
            }
        }
        total / (50.0 * pairs.len() as f64)
    };
    let e10 = mean_err(10);
    let e1000 = mean_err(1000);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("mean |err| D=10 {e10:.4}, D=1000 {e1000:.4}");
    ensure(e1000 < 0.05, || format!("{detail}; D=1000 not below 0.05"))?;
    ensure(e1000 < e10, || format!("{detail}; no decrease"))?;
    within(secs, 10.0, "kernel check")?;
    Ok(detail)
}

pub fn bound_validity(_: &mut Ctx) -> Result<String, String> {
    let start = Instant::now();
    let (mut worst, mut mean_gap) = (f64::INFINITY, 0.0);
    for seed in 0..20u64 {
        let inst = instance(20, 2, 1, 100 + seed);
        let z = inst.basis.project(inst.x.view(), inst.sigma).map_err(|e| e.to_string())?;
        let exact = log_marginal_2d(z.view(), inst.y.view(), inst.gamma);
        // Check the bound at an arbitrary ξ and after tightening it.
        let mut rng = SeededRng::new(seed);
        let mut xi = Array1::from_iter((0..20).map(|_| 0.05 + 4.0 * rng.uniform()));
        for round in 0..2 {
            if round == 1 {
                for _ in 0..30 {
                    let post = compute_posterior(z.view(), inst.y.view(), inst.gamma, xi.view())
                        .map_err(|e| e.to_string())?;
                    xi = update_xi(z.view(), &post);
                }
            }
            let bound = log_bound(z.view(), inst.y.view(), inst.gamma, xi.view()).map_err(|e| e.to_string())?.log_f;
            let gap = exact - bound;
            worst = worst.min(gap);
            if round == 1 {
                mean_gap += gap / 20.0;
            }
        }
    }
    let detail = format!("min(exact - bound) {worst:.3e}, mean gap at tightened xi {mean_gap:.4}");
    ensure(worst >= -1e-6, || detail.clone())?;
    within(start.elapsed().as_secs_f64(), 30.0, "bound check")?;
    Ok(detail)
}

pub fn posterior_oracle(_: &mut Ctx) -> Result<String, String> {
    // Hand case: z = (1, 0), y = 1, γ = 1, ξ = 1 gives P = diag(1 + 2λ(1), 1)
    // and μ = (0.5 / (1 + 2λ(1)), 0).
    let lam1 = 0.5f64.tanh() / 4.0;
    let z = ndarray::array![[1.0, 0.0]];
    let post = compute_posterior(z.view(), ndarray::array![1u8].view(), 1.0, ndarray::array![1.0].view())
        .map_err(|e| e.to_string())?;
    let hand = (post.mu[0] - 0.5 / (1.0 + 2.0 * lam1)).abs().max(post.mu[1].abs());
    let mut worst = hand;
    for seed in 0..50u64 {
        let n = 1 + seed as usize % 3;
        let inst = instance(n, 2, 1, 300 + seed);
        let z = inst.basis.project(inst.x.view(), inst.sigma).map_err(|e| e.to_string())?;
        let mut rng = SeededRng::new(seed);
        let xi = Array1::from_iter((0..n).map(|_| 0.01 + 3.0 * rng.uniform()));
        let post = compute_posterior(z.view(), inst.y.view(), inst.gamma, xi.view()).map_err(|e| e.to_string())?;
        let (mu, s) = posterior_2x2(z.view(), inst.y.view(), inst.gamma, xi.view());
        for i in 0..2 {
            worst = worst.max((post.mu[i] - mu[i]).abs());
            for j in 0..2 {
                worst = worst.max((post.sigma[[i, j]] - s[i][j]).abs());
            }
        }
    }
    let detail = format!("max abs deviation {worst:.2e} over 50 random cases plus hand case ({hand:.1e})");
    ensure(worst <= 1e-10, || detail.clone())?;
    Ok(detail)
}

fn fixed_point(z: &Array2<f64>, y: &Array1<u8>, gamma: f64) -> Result<Array1<f64>, String> {
    let mut xi = Array1::<f64>::ones(z.nrows());
    for _ in 0..100_000 {
        let post = compute_posterior(z.view(), y.view(), gamma, xi.view()).map_err(|e| e.to_string())?;
        let next = update_xi(z.view(), &post);
        let change = (&next - &xi).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        xi = next;
        if change < 1e-14 {
            return Ok(xi);
        }
    }
    Err("xi iteration did not settle".into())
}

pub fn xi_stationarity(_: &mut Ctx) -> Result<String, String> {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let n = 2 + seed as usize % 9;
        let nf = 1 + seed as usize % 3;
        let inst = instance(n, 2, nf, 500 + seed);
        let z = inst.basis.project(inst.x.view(), inst.sigma).map_err(|e| e.to_string())?;
        let xi = fixed_point(&z, &inst.y, inst.gamma)?;
        let grad = central_gradient(
            |t| log_f_at(z.view(), inst.y.view(), inst.gamma, t).unwrap_or(f64::NAN),
            xi.view(),
            1e-5,
        );
        worst = grad.iter().fold(worst, |m, g| m.max(g.abs()));
    }
    let detail = format!("max |d log_F / d xi| {worst:.2e} over 20 instances");
    ensure(worst <= 1e-6, || detail.clone())?;
    Ok(detail)
}

pub fn gradient_correctness(_: &mut Ctx) -> Result<String, String> {
    let mut worst = [0.0f64; 2];
    for seed in 0..10u64 {
        let inst = instance(30, 2, 3, 700 + seed);
        let mut rng = SeededRng::new(seed);
        let xi = Array1::from_iter((0..30).map(|_| 0.2 + 2.0 * rng.uniform()));
        let rff = ndarray::array![inst.sigma.ln(), inst.gamma.ln()];
        let v = &inst.basis.weights() / inst.sigma;
        let vff = vff_theta(v.view(), inst.gamma);
        for (k, (mode, theta)) in [(Mode::Rff, rff), (Mode::Vff, vff)].into_iter().enumerate() {
            let eval = |t: ArrayView1<f64>| {
                objective_gradient(t, inst.x.view(), inst.y.view(), xi.view(), &inst.basis, mode)
                    .map_err(|e| e.to_string())
            };
            let (_, analytic) = eval(theta.view())?;
            let numeric = central_gradient(|t| eval(t).map(|r| r.0).unwrap_or(f64::NAN), theta.view(), 1e-6);
            for (a, b) in analytic.iter().zip(numeric.iter()) {
                let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
                worst[k] = worst[k].max(if rel.is_nan() { f64::INFINITY } else { rel });
            }
        }
    }
    let detail = format!("max relative error RFF {:.2e}, VFF {:.2e}", worst[0], worst[1]);
    ensure(worst[0] <= 1e-5 && worst[1] <= 1e-5, || detail.clone())?;
    Ok(detail)
}
