//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ucplab::constants::{self, ModelParams, RadiiScheme};
use ucplab::discrete::{assemble, eigs_lowest};
use ucplab::experiments::*;
use ucplab::fields::{sample_field, GridSpec, Identity};

struct Outcome {
    pass: bool,
    detail: String,
}

fn from_report(r: ucplab::Result<ExperimentReport>) -> Outcome {
    match r {
        Ok(r) => {
            let failed: Vec<&str> = r.failures().map(|c| c.key.as_str()).collect();
            let detail = if failed.is_empty() {
                format!("{} cases", r.cases.len())
            } else {
                format!("{} of {} cases failed: {}", failed.len(), r.cases.len(), failed.join(", "))
            };
            Outcome { pass: r.pass, detail }
        }
        Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
    }
}

fn radii_consistency() -> Outcome {
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for d in 1..=3 {
        for te in [1.0, 2.0, 5.0] {
            for tl in [0.0, 1.0, 10.0] {
                let p = ModelParams::<f64>::new(d, te, tl).unwrap();
                let d0 = constants::delta0(&p);
                match constants::standard_radii(&p, RadiiScheme::InterpDelta(d0)) {
                    Ok(r) => {
                        let rel = ((r.r2 - d0) / d0).abs();
                        worst = worst.max(rel);
                        if rel > 1e-14 || !constants::check_assumption_radii(&r, &p) {
                            bad.push(format!("d{d}/te{te}/tl{tl}"));
                        }
                    }
                    Err(e) => bad.push(format!("d{d}/te{te}/tl{tl}: {e}")),
                }
            }
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("27 parameter sets, max rel |r2 - delta0| = {worst:.1e} {}", bad.join(" ")).trim_end().to_string() }
}

fn fd_accuracy() -> Outcome {
    let (l, n) = (1.0, 99);
    let grid = GridSpec::new(1, l, n).unwrap();
    let h = grid.h();
    let field = sample_field(Arc::new(Identity { d: 1 }), grid).unwrap();
    let spec = match assemble(&field, None).and_then(|op| eigs_lowest(&op, 1, 1e-12, 0)) {
        Ok(s) => s,
        Err(e) => return Outcome { pass: false, detail: format!("error: {e}") },
    };
    let lam = spec.eigenvalues[0];
    let oracle = (2.0 / (h * h)) * (1.0 - (PI * h / l).cos());
    let cont = PI * PI / (l * l);
    let e_fd = ((lam - oracle) / oracle).abs();
    let e_c = ((lam - cont) / cont).abs();
    Outcome { pass: e_fd <= 1e-10 && e_c <= 1e-3, detail: format!("rel err vs dispersion {e_fd:.1e}, vs continuum {e_c:.1e}") }
}

fn main() -> ExitCode {
    type Check = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(&str, Duration, Check)> = vec![
        ("radii self-consistency", Duration::from_secs(1), Box::new(radii_consistency)),
        ("carleman weight bounds", Duration::from_secs(5), Box::new(|| from_report(carleman_weight(&WeightConfig::default())))),
        ("chain paths", Duration::from_secs(5), Box::new(|| from_report(chain_demo(&ChainDemoConfig::default())))),
        ("reflection extension", Duration::from_secs(30), Box::new(|| from_report(extend_demo(&ExtendConfig::default())))),
        ("finite difference spectrum", Duration::from_secs(1), Box::new(fd_accuracy)),
        ("observability", Duration::from_secs(120), Box::new(|| from_report(observability_experiment(&ObserveConfig::default())))),
        ("eigenvalue lifting", Duration::from_secs(120), Box::new(|| from_report(lifting_experiment(&LiftConfig::default())))),
        ("abstract lemmas", Duration::from_secs(30), Box::new(|| from_report(abstract_lemma_tests(&LemmaConfig::default())))),
        ("three annuli", Duration::from_secs(30), Box::new(|| from_report(three_annuli_empirical(&AnnuliConfig::default())))),
        ("wegner shape", Duration::from_secs(300), Box::new(|| from_report(wegner_monte_carlo(&WegnerConfig::default())))),
    ];
    let mut all = true;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = check();
        let took = t.elapsed();
        let pass = out.pass && took <= *budget;
        all &= pass;
        println!(
            "[{}] {:>2} {name}: {} ({:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
