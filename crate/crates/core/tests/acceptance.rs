//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::time::Instant;

use algebroid_hj::algebroid::{AlgebroidSpec, SectionEStar, StructureEntry};
use algebroid_hj::dynamics::{hamilton_rhs, integrate, verify_lifted_curves, CurveSettings, HamiltonianSpec};
use algebroid_hj::expr::Expr;
use algebroid_hj::hamilton_jacobi::{
    cocycle_residual, hj_residual, on_section_points, symplectic_residual, type1_residual, type2_agree,
    type2_residuals, FiberMorphism, Type2Options,
};
use algebroid_hj::prolongation::{
    dh_on_basis, hamiltonian_section, hamiltonian_section_closed_form, omega_closed_form, verify_omega,
    verify_pullback_identities, verify_section_pullback, DualPoint,
};
use algebroid_hj::report::ResidualReport;
use algebroid_hj::sampling::{CoordBox, Sampler};
use algebroid_hj::scenario::{catalog, Scenario};
use algebroid_hj::time_extension::{td_verify, TdKind, TdSettings, TimeSection};

const SAMPLES: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            detail: String::new(),
            failures: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.pass = false;
            self.failures.push(what());
        }
    }
}

type Check = fn() -> Outcome;

fn autonomous() -> Vec<Scenario> {
    catalog().into_iter().filter(|s| !s.time_dependent).collect()
}

fn sections_of(s: &Scenario) -> Vec<(String, SectionEStar, HamiltonianSpec)> {
    s.sections
        .iter()
        .map(|(name, def)| {
            (
                name.clone(),
                s.section_estar(name).unwrap(),
                s.hamiltonian(&def.hamiltonian).unwrap(),
            )
        })
        .collect()
}

fn identity_anchor(m: usize) -> Vec<Vec<Expr>> {
    (0..m)
        .map(|a| (0..m).map(|i| Expr::constant(if a == i { 1.0 } else { 0.0 })).collect())
        .collect()
}

fn structure_validation() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let all = catalog();
    for s in &all {
        let mut sampler = Sampler::new(s.seed);
        let pts = sampler.points_in(&s.domain, SAMPLES);
        let r = s.spec.validate(&pts, 1e-8, s.seed).unwrap();
        worst = worst.max(r.max);
        out.require(r.pass && r.samples.len() == SAMPLES, || {
            format!("{}: max {:e}", s.name, r.max)
        });
        if s.time_dependent {
            for name in s.hamiltonians.keys() {
                let ext = s.extended(name).unwrap();
                let pts = sampler.points_in(&s.extended_domain(None).unwrap(), SAMPLES);
                let r = ext.spec.validate(&pts, 1e-8, s.seed).unwrap();
                worst = worst.max(r.max);
                out.require(r.pass, || format!("{} extended: max {:e}", s.name, r.max));
            }
        }
    }
    // a = identity with a central bracket: the anchor cannot be a morphism
    let corrupted = AlgebroidSpec::new(
        3,
        3,
        identity_anchor(3),
        vec![StructureEntry {
            alpha: 0,
            beta: 1,
            gamma: 2,
            expr: Expr::one(),
        }],
    )
    .unwrap();
    let pts = Sampler::new(0).points_in(&CoordBox::cube(3, -1.0, 1.0), SAMPLES);
    let bad = corrupted.validate(&pts, 1e-8, 0).unwrap();
    out.require(!bad.pass && bad.max >= 0.5, || {
        format!("corrupted Heisenberg max {}", bad.max)
    });
    let elapsed = start.elapsed().as_secs_f64();
    out.require(elapsed <= 10.0, || format!("took {elapsed:.2} s"));
    out.detail = format!(
        "{} scenarios, worst residual {worst:.1e}, corrupted case {:.3}, {elapsed:.2} s",
        all.len(),
        bad.max
    );
    out
}

fn omega_oracle() -> Outcome {
    let mut out = Outcome::new();
    let mut worst = 0.0f64;
    let mut specs = Vec::new();
    for s in catalog() {
        let mut sampler = Sampler::new(s.seed + 100);
        if s.time_dependent {
            for name in s.hamiltonians.keys() {
                let ext = s.extended(name).unwrap();
                let bx = s
                    .extended_domain(None)
                    .unwrap()
                    .product(&CoordBox::cube(s.spec.rank() + 1, -2.0, 2.0));
                let pts: Vec<DualPoint> = sampler
                    .points_in(&bx, SAMPLES)
                    .into_iter()
                    .map(|p| {
                        let m = ext.spec.base_dim();
                        DualPoint::new(p[..m].to_vec(), p[m..].to_vec())
                    })
                    .collect();
                specs.push((format!("{} extended", s.name), ext.spec.clone(), pts));
            }
        }
        let pts = s.dual_samples(SAMPLES, &mut sampler);
        specs.push((s.name.clone(), s.spec.clone(), pts));
    }
    for (name, spec, pts) in &specs {
        let r = verify_omega(spec, pts, 1e-10, 0).unwrap();
        worst = worst.max(r.family_max("oracle"));
        out.require(r.pass && r.samples.len() == SAMPLES, || {
            format!("{name}: {:?}", r.families)
        });
    }
    out.detail = format!("{} algebroids, worst entrywise gap {worst:.1e}", specs.len());
    out
}

fn hamiltonian_contract() -> Outcome {
    let mut out = Outcome::new();
    let (mut solve_worst, mut closed_worst, mut cases) = (0.0f64, 0.0f64, 0);
    for s in catalog() {
        let mut sampler = Sampler::new(s.seed + 200);
        for name in s.hamiltonians.keys() {
            let (spec, h, pts) = if s.time_dependent {
                let ext = s.extended(name).unwrap();
                let pts = s
                    .dual_samples(SAMPLES, &mut sampler)
                    .into_iter()
                    .map(|p| ext.zero_level(sampler.unit_vector(1)[0].abs(), &p).unwrap())
                    .collect::<Vec<_>>();
                (ext.spec.clone(), ext.k.clone(), pts)
            } else {
                (
                    s.spec.clone(),
                    s.hamiltonian(name).unwrap(),
                    s.dual_samples(SAMPLES, &mut sampler),
                )
            };
            cases += 1;
            for p in &pts {
                let xi = hamiltonian_section(&spec, &h, p).unwrap();
                let omega = omega_closed_form(&spec, p).unwrap();
                let lhs = omega.contract(&xi.basis_coords());
                let rhs = dh_on_basis(&spec, &h, p).unwrap();
                let solve_res = (lhs - rhs).amax();
                let closed = hamiltonian_section_closed_form(&spec, &h, p).unwrap();
                let closed_res = (closed.basis_coords() - xi.basis_coords()).amax();
                solve_worst = solve_worst.max(solve_res);
                closed_worst = closed_worst.max(closed_res);
                out.require(solve_res <= 1e-10 && closed_res <= 1e-10, || {
                    format!(
                        "{}/{name} at {:?}: solve {solve_res:e}, closed {closed_res:e}",
                        s.name,
                        p.coords()
                    )
                });
            }
        }
    }
    out.detail = format!(
        "{cases} (scenario, Hamiltonian) pairs, solve residual {solve_worst:.1e}, closed-form gap {closed_worst:.1e}"
    );
    out
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn reduction_oracles() -> Outcome {
    let mut out = Outcome::new();
    let by_name = |n: &str| catalog().into_iter().find(|s| s.name == n).unwrap();

    // hand-written canonical equations (∂H/∂μ, −∂H/∂x)
    type Oracle = fn(&DualPoint) -> Vec<f64>;
    let canonical: [(&str, &str, Oracle); 3] = [
        ("canonical_r1", "default", |p| vec![p.mu[0], -p.x[0]]),
        ("canonical_r1", "pendulum", |p| vec![p.mu[0], -p.x[0].sin()]),
        ("canonical_r2", "default", |p| vec![p.mu[0], p.mu[1], -p.x[0], -p.x[1]]),
    ];
    let mut canon_worst = 0.0f64;
    for (scn, ham, oracle) in canonical {
        let s = by_name(scn);
        let h = s.hamiltonian(ham).unwrap();
        for p in s.dual_samples(SAMPLES, &mut Sampler::new(s.seed + 300)) {
            let gap = max_gap(&hamilton_rhs(&s.spec, &h, &p).unwrap(), &oracle(&p));
            canon_worst = canon_worst.max(gap);
        }
    }
    out.require(canon_worst <= 1e-12, || format!("canonical gap {canon_worst:e}"));

    // so(3)*: μ̇ = μ × ∇H
    let so3 = by_name("so3");
    let inertia = [1.0, 2.0, 3.0];
    let h = so3.hamiltonian("default").unwrap();
    let mut euler_worst = 0.0f64;
    for p in so3.dual_samples(SAMPLES, &mut Sampler::new(so3.seed + 300)) {
        let omega: Vec<f64> = p.mu.iter().zip(inertia).map(|(m, i)| m / i).collect();
        let gap = max_gap(&hamilton_rhs(&so3.spec, &h, &p).unwrap(), &cross(&p.mu, &omega));
        euler_worst = euler_worst.max(gap);
    }
    out.require(euler_worst <= 1e-12, || format!("so3 gap {euler_worst:e}"));

    let start = so3.dual_samples(1, &mut Sampler::new(so3.seed + 301)).remove(0);
    let traj = integrate(&so3.spec, &h, &start, 0.0, 10.0, 1e-3).unwrap();
    let norm2 = |p: &DualPoint| p.mu.iter().map(|m| m * m).sum::<f64>();
    let casimir = traj
        .states
        .iter()
        .map(|p| (norm2(p) - norm2(&start)).abs())
        .fold(0.0, f64::max);
    out.require(casimir <= 1e-8, || format!("|mu|^2 drift {casimir:e}"));

    let r1 = by_name("canonical_r1");
    let osc = r1.hamiltonian("default").unwrap();
    let p0 = DualPoint::new(vec![1.0], vec![0.0]);
    let period = 2.0 * std::f64::consts::PI;
    let end_err = |dt: f64| {
        let end = integrate(&r1.spec, &osc, &p0, 0.0, period, dt)
            .unwrap()
            .states
            .pop()
            .unwrap();
        (end.x[0] - 1.0).abs().max(end.mu[0].abs())
    };
    let (e1, e2) = (end_err(0.01), end_err(0.005));
    let ratio = e1 / e2;
    out.require(e1 <= 1e-8, || format!("oscillator return error {e1:e}"));
    out.require((10.0..=24.0).contains(&ratio), || format!("RK4 halving ratio {ratio}"));

    out.detail = format!(
        "canonical {canon_worst:.1e}, Euler {euler_worst:.1e}, |mu|^2 drift {casimir:.1e}, oscillator return {e1:.1e}, halving ratio {ratio:.2}"
    );
    out
}

fn lifted_curves() -> Outcome {
    let mut out = Outcome::new();
    let mut summary = Vec::new();
    for s in autonomous() {
        for (name, gamma, h) in sections_of(&s) {
            let exp = s.sections[&name].expect;
            let positive = exp.cocycle == Some(true) && exp.solves_hj == Some(true);
            let negative = exp.cocycle == Some(true) && exp.solves_hj == Some(false);
            if !positive && !negative {
                continue;
            }
            let bx = s.section_domain(&name).unwrap();
            let mut sampler = Sampler::new(s.seed + 500);
            let samples = sampler.points_in(bx, SAMPLES);
            let starts = sampler.points_in(bx, 5);
            let r = verify_lifted_curves(
                &s.spec,
                &h,
                &gamma,
                &samples,
                &starts,
                CurveSettings::default(),
                1e-6,
                s.seed,
            )
            .unwrap();
            let (hj, lifted) = (r.family_max("hj"), r.family_max("lifted"));
            if positive {
                out.require(hj <= 1e-6 && lifted <= 1e-6 && r.skipped == 0, || {
                    format!("{}/{name}: hj {hj:e}, lifted {lifted:e}, skipped {}", s.name, r.skipped)
                });
            } else {
                out.require(hj > 0.1 && lifted > 0.1, || {
                    format!("{}/{name}: hj {hj:e}, lifted {lifted:e}", s.name)
                });
            }
            summary.push(format!("{}/{name} {hj:.1e}/{lifted:.1e}", s.name));
        }
    }
    out.detail = format!("hj/lifted maxima: {}", summary.join(", "));
    out
}

fn pullback_checks() -> Outcome {
    let mut out = Outcome::new();
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for s in catalog() {
        for (name, def) in &s.sections {
            let mut sampler = Sampler::new(s.seed + 600);
            let (spec, gamma, samples) = if s.time_dependent {
                let ext = s.extended(&def.hamiltonian).unwrap();
                let g = ext.lift(&s.time_section(name).unwrap()).unwrap();
                let pts = sampler.points_in(&s.extended_domain(Some(name)).unwrap(), SAMPLES);
                (ext.spec, g, pts)
            } else {
                let pts = sampler.points_in(s.section_domain(name).unwrap(), SAMPLES);
                (s.spec.clone(), s.section_estar(name).unwrap(), pts)
            };
            let p4 = verify_section_pullback(&spec, &gamma, &samples, 1e-8, &mut sampler).unwrap();
            let l7 = verify_pullback_identities(&spec, &gamma, &samples, 1e-8, &mut sampler).unwrap();
            worst = worst.max(p4.max).max(l7.max);
            pairs += 1;
            out.require(p4.pass && l7.pass, || {
                format!("{}/{name}: {:e} / {:e}", s.name, p4.max, l7.max)
            });
        }
    }
    out.detail = format!("{pairs} (scenario, section) pairs, worst residual {worst:.1e}");
    out
}

fn type1() -> Outcome {
    let mut out = Outcome::new();
    let (mut positives, mut negatives) = (Vec::new(), Vec::new());
    for s in autonomous() {
        for (name, gamma, h) in sections_of(&s) {
            let mut sampler = Sampler::new(s.seed + 700);
            let samples = sampler.points_in(s.section_domain(&name).unwrap(), SAMPLES);
            let coc = cocycle_residual(&s.spec, &gamma, &samples, 1e-10, s.seed).unwrap();
            let hj = hj_residual(&s.spec, &h, &gamma, &samples, 1e-10, s.seed).unwrap();
            let t1 = type1_residual(&s.spec, &h, &gamma, &samples, 1e-7, s.seed).unwrap();
            if coc.pass && hj.pass {
                out.require(t1.pass, || format!("{}/{name}: type1 {:e}", s.name, t1.max));
                positives.push(format!("{}/{name} {:.1e}", s.name, t1.max));
            }
            let exp = s.sections[&name].expect;
            let negative = exp.type1 == Some(false) || (exp.cocycle == Some(true) && exp.solves_hj == Some(false));
            if negative {
                out.require(t1.max >= 0.1, || format!("{}/{name}: type1 only {:e}", s.name, t1.max));
                negatives.push(format!("{}/{name} {:.2}", s.name, t1.max));
            }
        }
    }
    out.require(!negatives.is_empty(), || "no negative case".into());
    out.detail = format!(
        "hypothesis holds: {}; negatives: {}",
        positives.join(", "),
        negatives.join(", ")
    );
    out
}

fn type2() -> Outcome {
    let mut out = Outcome::new();
    let (mut compared, mut skipped_nonsymplectic) = (0, 0);
    for s in autonomous() {
        for eps_name in s.morphisms.keys() {
            let eps = s.morphism(eps_name).unwrap();
            let mut sampler = Sampler::new(s.seed + 800);
            let dual = s.dual_samples(SAMPLES, &mut sampler);
            let sym = symplectic_residual(&s.spec, &eps, &dual, 1e-8, &mut sampler).unwrap();
            if !sym.pass {
                skipped_nonsymplectic += 1;
                continue;
            }
            for (name, gamma, h) in sections_of(&s) {
                let xs = sampler.points_in(s.section_domain(&name).unwrap(), SAMPLES);
                let on_section = on_section_points(&s.spec, &gamma, &eps, &xs).unwrap();
                for (label, pts) in [("on-section", on_section), ("box", dual.clone())] {
                    let r = type2_residuals(&s.spec, &h, &gamma, &eps, &pts, 1e-6, s.seed, Type2Options::default())
                        .unwrap();
                    compared += 1;
                    for tol in [1e-6, 1e-3] {
                        out.require(type2_agree(&r, tol), || {
                            format!(
                                "{}/{name}/{eps_name} {label} at {tol:e}: A {:e}, B {:e}",
                                s.name,
                                r.family_max("residual_A"),
                                r.family_max("residual_B")
                            )
                        });
                    }
                }
            }
        }
    }
    let r1 = catalog().into_iter().find(|s| s.name == "canonical_r1").unwrap();
    let mut sampler = Sampler::new(r1.seed + 801);
    let dual = r1.dual_samples(SAMPLES, &mut sampler);
    let scale: FiberMorphism = r1.morphism("scale2").unwrap();
    let sym = symplectic_residual(&r1.spec, &scale, &dual, 1e-8, &mut sampler).unwrap();
    out.require(!sym.pass, || "scaling morphism passed the symplectic test".into());
    out.detail = format!(
        "{compared} (scenario, section, morphism, sampling) runs agree at 1e-6 and 1e-3; {skipped_nonsymplectic} non-symplectic morphism(s) excluded; scaling defect {:.3}",
        sym.max
    );
    out
}

fn time_extension() -> Outcome {
    let mut out = Outcome::new();
    let settings = |tol| TdSettings {
        tol,
        seed: 0,
        curve: CurveSettings::default(),
        type2: Type2Options::default(),
    };

    // autonomous scenarios through the extension
    let mut reduced = 0;
    for s in autonomous() {
        for (name, gamma, h) in sections_of(&s) {
            let hname = &s.sections[&name].hamiltonian;
            let ext = s.extended(hname).unwrap();
            let mut sampler = Sampler::new(s.seed + 900);
            let xs = sampler.points_in(s.section_domain(&name).unwrap(), 20);
            let t = sampler.unit_vector(1)[0];
            let ext_xs: Vec<Vec<f64>> = xs.iter().map(|x| [vec![t], x.clone()].concat()).collect();
            let family = TimeSection::constant_in_time(&gamma);

            let auto = type1_residual(&s.spec, &h, &gamma, &xs, 1e-7, 0).unwrap();
            let ext_r = td_verify(TdKind::Type1, &ext, &family, None, &ext_xs, settings(1e-7)).unwrap();
            let a: Vec<f64> = auto.values_of("type1").collect();
            let b: Vec<f64> = ext_r.values_of("type1_inner").collect();
            out.require(a == b, || format!("{}/{name}: type1 differs", s.name));

            let curve = CurveSettings { horizon: 0.5, dt: 0.05 };
            let starts = &xs[..2];
            let ext_starts = &ext_xs[..2];
            if let Ok(auto) = verify_lifted_curves(&s.spec, &h, &gamma, starts, starts, curve, 1e-6, 0) {
                let mut st = settings(1e-6);
                st.curve = curve;
                let ext_r = td_verify(TdKind::LiftedCurves, &ext, &family, None, ext_starts, st).unwrap();
                let a: Vec<f64> = auto.values_of("lifted").collect();
                let b: Vec<f64> = ext_r.values_of("lifted_inner").collect();
                out.require(a == b, || format!("{}/{name}: lifted differs", s.name));
            }
            reduced += 1;
        }
    }

    // time-dependent solutions
    let td = catalog().into_iter().find(|s| s.time_dependent).unwrap();
    let mut td_worst = 0.0f64;
    for (name, def) in &td.sections {
        if def.expect.solves_hj != Some(true) {
            continue;
        }
        let ext = td.extended(&def.hamiltonian).unwrap();
        let pts = Sampler::new(td.seed).points_in(&td.extended_domain(Some(name)).unwrap(), SAMPLES);
        let r = td_verify(
            TdKind::Type1,
            &ext,
            &td.time_section(name).unwrap(),
            None,
            &pts,
            settings(1e-7),
        )
        .unwrap();
        td_worst = td_worst.max(r.max);
        out.require(r.pass, || format!("{}/{name}: extended type1 {:e}", td.name, r.max));
    }

    // K along zero-level trajectories
    let mut drift = 0.0f64;
    for name in td.hamiltonians.keys() {
        let ext = td.extended(name).unwrap();
        let mut sampler = Sampler::new(td.seed + 1);
        for p in td.dual_samples(3, &mut sampler) {
            let p0 = ext.zero_level(0.0, &p).unwrap();
            let traj = ext.integrate(&p0, 5.0, 1e-3).unwrap();
            for st in &traj.states {
                drift = drift.max(ext.k.value_at(&ext.spec, st).unwrap().abs());
            }
        }
    }
    out.require(drift <= 1e-6, || format!("K drift {drift:e}"));
    out.detail = format!(
        "{reduced} autonomous sections reduce exactly; extended Type I worst {td_worst:.1e}; K drift {drift:.1e}"
    );
    out
}

fn reports_for_determinism() -> Vec<ResidualReport> {
    let mut out = Vec::new();
    for s in catalog() {
        let mut sampler = Sampler::new(s.seed);
        let pts = sampler.points_in(&s.domain, 30);
        out.push(s.spec.validate(&pts, 1e-8, s.seed).unwrap());
        let dual = s.dual_samples(30, &mut sampler);
        out.push(verify_omega(&s.spec, &dual, 1e-10, s.seed).unwrap());
        if s.time_dependent {
            for name in s.sections.keys() {
                let ext = s.extended(&s.sections[name].hamiltonian).unwrap();
                let xs = sampler.points_in(&s.extended_domain(Some(name)).unwrap(), 30);
                let st = TdSettings {
                    tol: 1e-7,
                    seed: s.seed,
                    curve: CurveSettings::default(),
                    type2: Type2Options::default(),
                };
                out.push(td_verify(TdKind::Type1, &ext, &s.time_section(name).unwrap(), None, &xs, st).unwrap());
            }
            continue;
        }
        for (name, gamma, h) in sections_of(&s) {
            let xs = sampler.points_in(s.section_domain(&name).unwrap(), 30);
            out.push(type1_residual(&s.spec, &h, &gamma, &xs, 1e-7, s.seed).unwrap());
            out.push(verify_pullback_identities(&s.spec, &gamma, &xs, 1e-8, &mut sampler).unwrap());
            let eps = FiberMorphism::identity(&s.spec);
            let pts = on_section_points(&s.spec, &gamma, &eps, &xs).unwrap();
            out.push(type2_residuals(&s.spec, &h, &gamma, &eps, &pts, 1e-6, s.seed, Type2Options::default()).unwrap());
        }
    }
    out
}

fn determinism() -> Outcome {
    let mut out = Outcome::new();
    let first: Vec<String> = reports_for_determinism().iter().map(|r| r.to_json()).collect();
    let second: Vec<String> = reports_for_determinism().iter().map(|r| r.to_json()).collect();
    out.require(first == second, || "reports differ between runs".into());
    let bytes: usize = first.iter().map(String::len).sum();
    out.detail = format!("{} reports, {bytes} bytes, identical across two runs", first.len());
    out
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("structure validation", structure_validation),
        ("symplectic form oracle", omega_oracle),
        ("Hamiltonian section contract", hamiltonian_contract),
        ("reduction oracles", reduction_oracles),
        ("HJ equivalence via lifted curves", lifted_curves),
        ("section morphism pullbacks", pullback_checks),
        ("Type I equation", type1),
        ("Type II equivalence", type2),
        ("time-dependent extension", time_extension),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {status}: {name} ({}) [{:.2} s]",
            k + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        for f in o.failures.iter().take(10) {
            println!("    {f}");
        }
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
