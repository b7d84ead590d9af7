//! Acceptance criteria, one `PASS`/`FAIL` line each.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use concordia_core::biconvex::{biconvex_form, Method};
use concordia_core::concordance::{check_moc_axioms, kappa, ConcordanceGenerator};
use concordia_core::copula::{copula_from_density, discretize, Copula, Rect};
use concordia_core::estimator::{
    comonotone_form_exact, countermonotone_form_exact, empirical_biconvex_exact, estimate_ranks, gini_sample_form,
    minimal_sample_size, rearrange_toward_comonotone, spearman_rank_form,
};
use concordia_core::group::{invariance_report, Subgroup, DEFAULT_LATTICE};
use concordia_core::simulation::{run_study, sample_copula, GeneratorSpec, StudyConfig};
use concordia_core::spec::CopulaSpec;
use concordia_core::{estimate, GroupElement, RelativeRankMatrix};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Density = fn(f64, f64) -> f64;
type Criterion = (&'static str, fn() -> Outcome);

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn generators() -> Vec<ConcordanceGenerator> {
    let mut g = vec![ConcordanceGenerator::spearman(), ConcordanceGenerator::gini()];
    for q in [0.1, 0.5, 0.9] {
        g.push(ConcordanceGenerator::interpolated(q).unwrap());
    }
    g.push(ConcordanceGenerator::new("E", Copula::E).unwrap());
    g
}

fn exact_constants() -> Outcome {
    let start = Instant::now();
    let cases = [
        ("[M,M]", Copula::M, Copula::M, 0.5),
        ("[Pi,Pi]", Copula::Pi, Copula::Pi, 0.25),
        ("[M,Pi]", Copula::M, Copula::Pi, 1.0 / 3.0),
        ("[M,(M+W)/2]", Copula::M, Copula::gini(), 0.375),
    ];
    let mut worst: f64 = 0.0;
    for (name, c, d, expected) in cases {
        let r = biconvex_form(&c, &d).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.resolution_used <= 512, || format!("{name}: resolution {}", r.resolution_used))?;
        let err = (r.value - expected).abs();
        ensure(err <= 1e-12, || format!("{name} = {} (error {err:e})", r.value))?;
        worst = worst.max(err);
    }
    let grid = biconvex_form(&Copula::Pi, &Copula::Pi).map_err(|e| e.to_string())?;
    ensure(grid.method == Method::ExactGrid, || format!("[Pi,Pi] used {:?}", grid.method))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("max error {worst:.1e} in {elapsed:.2?}"))
}

fn closed_form_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (sp, gi) = (ConcordanceGenerator::spearman(), ConcordanceGenerator::gini());
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mass = common::random_grid_mass(&mut rng, 16, 5);
        let c = Copula::grid(16, mass.clone()).map_err(|e| e.to_string())?;
        let rho = 12.0 * common::grid_against_pi(16, &mass) - 3.0;
        let gamma = 8.0 * common::grid_against_gini(16, &mass) - 2.0;
        worst = worst.max((kappa(&sp, &c).unwrap() - rho).abs());
        worst = worst.max((kappa(&gi, &c).unwrap() - gamma).abs());
    }
    ensure(worst <= 1e-8, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn interpolation_weights() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (sp, gi) = (ConcordanceGenerator::spearman(), ConcordanceGenerator::gini());
    let grids: Vec<Copula> = (0..5).map(|_| common::random_grid(&mut rng, 16)).collect();
    let mut worst: f64 = 0.0;
    for k in 1..=9 {
        let q = k as f64 / 10.0;
        let g = ConcordanceGenerator::interpolated(q).unwrap();
        for c in &grids {
            let (rho, gamma) = (kappa(&sp, c).unwrap(), kappa(&gi, c).unwrap());
            let expected = 2.0 * (1.0 - q) / (2.0 + q) * rho + 3.0 * q / (2.0 + q) * gamma;
            worst = worst.max((kappa(&g, c).unwrap() - expected).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn spearman_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = ConcordanceGenerator::spearman();
    for case in 0..1000 {
        let n = rng.random_range(2..=30);
        let u = common::random_ranks(&mut rng, n);
        let r = estimate_ranks(&u, &g).map_err(|e| e.to_string())?;
        let classical = spearman_rank_form(&u);
        ensure(r.kappa_hat == classical, || format!("case {case}, n = {n}: {} vs {classical}", r.kappa_hat))?;
    }
    Ok("1000 random cases exact".into())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut next = p.clone();
            next.insert(pos, n);
            out.push(next);
        }
    }
    out
}

fn gini_check(u: &RelativeRankMatrix, g: &ConcordanceGenerator) -> Result<bool, String> {
    let r = estimate_ranks(u, g).map_err(|e| e.to_string())?;
    let forms = gini_sample_form(u);
    let n = u.n() as i64;
    let minus_one: i64 = u.rank_pairs().map(|(a, b)| (a as i64 + b as i64 - 1).abs() - (a as i64 - b as i64).abs()).sum();
    let minus_one = q(minus_one, n * n / 2);
    ensure(r.kappa_hat == forms.absolute && r.kappa_hat == forms.relative, || {
        format!("{:?}/{:?}: {} vs {} vs {}", u.first_ranks(), u.second_ranks(), r.kappa_hat, forms.absolute, forms.relative)
    })?;
    Ok(minus_one != forms.absolute)
}

fn gini_identity() -> Outcome {
    let g = ConcordanceGenerator::gini();
    let mut exhaustive = 0usize;
    let mut minus_one_differs = 0usize;
    for n in 2..=6 {
        let perms = permutations(n);
        let results: Vec<Result<bool, String>> = perms
            .par_iter()
            .flat_map_iter(|a| {
                let g = &g;
                perms.iter().map(move |b| gini_check(&RelativeRankMatrix::from_ranks(a.clone(), b.clone()).unwrap(), g))
            })
            .collect();
        for r in results {
            minus_one_differs += r? as usize;
            exhaustive += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        minus_one_differs += gini_check(&common::random_ranks(&mut rng, n), &g)? as usize;
    }
    ensure(minus_one_differs > 0, || "the |R1 + R2 - 1| variant never differs".into())?;
    Ok(format!("{exhaustive} exhaustive + 1000 random cases exact; |R1 + R2 - 1| variant differs in {minus_one_differs}"))
}

fn sandwich_suite() -> Outcome {
    let a_list =
        [("Pi", Copula::Pi), ("Gini", Copula::gini()), ("E", Copula::E), ("E_0.5", Copula::interpolated(0.5).unwrap())];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let samples: Vec<RelativeRankMatrix> =
        (0..10_000).map(|_| {
            let n = rng.random_range(2..=30);
            common::random_ranks(&mut rng, n)
        }).collect();
    let half = q(1, 2);
    for (name, a) in &a_list {
        samples.par_iter().try_for_each(|u| {
            let n = u.n();
            let (m, w) = (comonotone_form_exact(a, n), countermonotone_form_exact(a, n));
            let c = empirical_biconvex_exact(u, a);
            ensure(w <= c && c <= m, || format!("{name}, n = {n}: sandwich fails"))?;
            ensure(&m + &w == half, || format!("{name}, n = {n}: <M,A> + <W,A> = {}", &m + &w))
        })?;
    }
    Ok("10000 rank matrices x 4 generators exact".into())
}

fn counterexample() -> Outcome {
    let m3 = comonotone_form_exact(&Copula::E, 3);
    ensure(m3 == q(1, 4), || format!("<M,E>_(3) = {m3}"))?;
    let n_e = minimal_sample_size(&Copula::E, 10_000).map_err(|e| e.to_string())?;
    ensure(n_e >= 4, || format!("n_E = {n_e}"))?;
    Ok(format!("<M,E>_(3) = 1/4, n_E = {n_e}"))
}

fn estimator_bounds() -> Outcome {
    let one = q(1, 1);
    let mut checked = 0;
    for g in generators() {
        let n_a = g.minimal_sample_size().map_err(|e| e.to_string())?;
        for n in n_a..=50 {
            let co = estimate_ranks(&RelativeRankMatrix::comonotone(n), &g).map_err(|e| e.to_string())?;
            let counter = estimate_ranks(&RelativeRankMatrix::countermonotone(n), &g).map_err(|e| e.to_string())?;
            ensure(co.kappa_hat == one, || format!("{}: n = {n} comonotone gives {}", g.name(), co.kappa_hat))?;
            ensure(counter.kappa_hat == -&one, || format!("{}: n = {n} countermonotone gives {}", g.name(), counter.kappa_hat))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (generator, n) pairs exact"))
}

fn rearrangement_monotone() -> Outcome {
    let a_list = [("Pi", Copula::Pi), ("Gini", Copula::gini()), ("E", Copula::E)];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut steps = 0usize;
    for start in 0..500 {
        let n = rng.random_range(2..=12);
        let u = common::random_ranks(&mut rng, n);
        let traj = rearrange_toward_comonotone(&u);
        for (name, a) in &a_list {
            let values: Vec<BigRational> = traj.iter().map(|s| empirical_biconvex_exact(s, a)).collect();
            for w in values.windows(2) {
                ensure(w[0] <= w[1], || format!("start {start}, {name}: {} then {}", w[0], w[1]))?;
                steps += 1;
            }
            ensure(values.last() == Some(&comonotone_form_exact(a, n)), || format!("start {start}, {name}: wrong endpoint"))?;
        }
    }
    Ok(format!("{steps} steps nondecreasing"))
}

fn symmetric_densities() -> Outcome {
    let rect = Rect::square(3.0);
    let densities: [(&str, Density); 3] = [
        ("gaussian", |x, y| (-(x * x + y * y) / 2.0).exp()),
        ("cauchy-like", |x, y| 1.0 / (1.0 + x * x + y * y).powi(2)),
        ("cross", |x, y| (-x.abs() - y.abs() - 0.5 * (x * y).abs()).exp() * (1.0 + (x * y).cos().powi(2))),
    ];
    let reps = 100;
    let n = 1000;
    let mut notes = Vec::new();
    for (name, f) in densities {
        let grid = copula_from_density(f, rect, 24, 4).map_err(|e| format!("{name}: {e}"))?;
        let report = invariance_report(&grid.clone().into_copula(), Subgroup::GammaNu, DEFAULT_LATTICE, 1e-8);
        ensure(report.invariant, || format!("{name}: deviation {:e}", report.max_deviation))?;
        let c = grid.into_copula();
        for g in [ConcordanceGenerator::spearman(), ConcordanceGenerator::gini()] {
            let values: Vec<f64> = (0..reps)
                .into_par_iter()
                .map(|r| estimate(&sample_copula(&c, n, 1000 + r as u64).unwrap(), &g).unwrap().kappa_hat_f64())
                .collect();
            let mean = values.iter().sum::<f64>() / reps as f64;
            let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
            let band = 3.0 * sd / (reps as f64).sqrt();
            ensure(mean.abs() <= band, || format!("{name}/{}: |mean| {:.2e} > band {band:.2e}", g.name(), mean.abs()))?;
            if g.name() == "spearman" {
                notes.push(format!("{name} |mean| {:.1e} <= {band:.1e}", mean.abs()));
            }
        }
    }
    let control = copula_from_density(|x, y| (-x * x - y * y - x * y).exp(), rect, 24, 4).map_err(|e| e.to_string())?;
    let report = invariance_report(&control.into_copula(), Subgroup::GammaNu, DEFAULT_LATTICE, 1e-8);
    ensure(!report.invariant, || "asymmetric control passed the invariance check".into())?;
    notes.push(format!("control deviation {:.1e}", report.max_deviation));
    Ok(notes.join("; "))
}

fn consistency() -> Outcome {
    let start = Instant::now();
    let target = CopulaSpec::from_copula(&discretize(&Copula::M, 32).unwrap().into_copula());
    let mut notes = Vec::new();
    for name in ["spearman", "gini"] {
        let cfg = StudyConfig {
            generator: GeneratorSpec::Named(name.into()),
            copula: target.clone(),
            sizes: vec![2000],
            replications: 200,
            seed: 20240611,
            resolution: 32,
            output: None,
        };
        let report = run_study(&cfg).map_err(|e| e.to_string())?;
        let s = &report.summary[0];
        ensure(s.failures == 0, || format!("{name}: {} failed replications", s.failures))?;
        let (mean, sd) = (s.mean.unwrap(), s.sd.unwrap());
        let bound = 3.0 * sd / 200f64.sqrt() + 0.005;
        let err = (mean - report.target_kappa).abs();
        ensure(err <= bound, || format!("{name}: |mean - kappa| = {err:.2e} > {bound:.2e}"))?;
        notes.push(format!("{name} {err:.1e} <= {bound:.1e}"));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    notes.push(format!("{elapsed:.1?}"));
    Ok(notes.join("; "))
}

fn axiom_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut corpus = vec![Copula::M, Copula::W, Copula::Pi, Copula::E];
    for _ in 0..6 {
        corpus.push(common::random_grid(&mut rng, 8));
    }
    corpus.push(Copula::mixture(vec![(0.3, Copula::M), (0.7, Copula::E.transformed(GroupElement::NU2))]).unwrap());
    corpus.push(Copula::mixture(vec![(0.5, common::random_grid(&mut rng, 5)), (0.5, Copula::W)]).unwrap());
    corpus.push(common::random_grid(&mut rng, 6).transformed(GroupElement::PI_NU1));
    let mut worst: f64 = 0.0;
    for g in generators() {
        let r = check_moc_axioms(&g, &corpus).map_err(|e| e.to_string())?;
        ensure(r.passed, || format!("{}: {r:?}", g.name()))?;
        worst = worst.max(r.upper_bound).max(r.permutation).max(r.reflection).max(r.reflection_sum);
    }
    Ok(format!("{} copulas x 6 generators, max deviation {worst:.1e}", corpus.len()))
}

/// Writes past the test harness's output capture so the lines always show.
fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 12] = [
        ("exact biconvex constants", exact_constants),
        ("closed-form Spearman and Gini identities", closed_form_identities),
        ("interpolation weights", interpolation_weights),
        ("sample Spearman identity", spearman_identity),
        ("sample Gini identity", gini_identity),
        ("sandwich and antipodal sum", sandwich_suite),
        ("counterexample copula E", counterexample),
        ("estimator bounds", estimator_bounds),
        ("rearrangement monotonicity", rearrangement_monotone),
        ("symmetric densities", symmetric_densities),
        ("consistency study", consistency),
        ("concordance axioms", axiom_suite),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => report(&format!("PASS {:>2} {name}: {detail} [{:.2?}]", i + 1, start.elapsed())),
            Err(detail) => {
                report(&format!("FAIL {:>2} {name}: {detail} [{:.2?}]", i + 1, start.elapsed()));
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
