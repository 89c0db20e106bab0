//! The subcommands.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use zipper_core::cones::{self, ConditionReport, ProjectiveCone};
use zipper_core::holder::{self, DirectOptions};
use zipper_core::pressure::{self, PressureCurve, PressureOptions, SpectrumFlags};
use zipper_core::zipper::{describe_failures, ValidationOptions};
use zipper_core::{derham, Matrix, Zipper};

use crate::output::{self, num, Csv};
use crate::{config_hash, load, Betas, CliError, ConesArgs, HolderArgs, Loaded, PressureArgs, PressureOpts, RenderArgs, SpectrumArgs, ValidateArgs};

fn validated(loaded: &Loaded) -> Result<(), CliError> {
    let r = loaded.zipper.validate(&ValidationOptions::default());
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::Domain(format!("invalid zipper: {}", describe_failures(&r))))
    }
}

fn note(loaded: &Loaded) {
    if let Some(n) = loaded.omega.and_then(derham::capability_note) {
        eprintln!("note: {n}");
    }
}

#[derive(Serialize)]
struct FailureJson {
    invariant: &'static str,
    index: Option<usize>,
    residual: f64,
}

#[derive(Serialize)]
struct ValidationJson {
    pass: bool,
    tol: f64,
    cross_residual: f64,
    cross_residuals: Vec<f64>,
    invertibility_margins: Vec<f64>,
    weight_sum_residual: f64,
    min_weight: f64,
    contraction_depth: usize,
    contraction_factor: f64,
    failures: Vec<FailureJson>,
    note: Option<&'static str>,
}

pub fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let loaded = load(&a.source)?;
    let r = loaded.zipper.validate(&ValidationOptions {
        tol: a.tol,
        contraction_depth: a.contraction_depth,
    });
    let json = ValidationJson {
        pass: r.passed(),
        tol: r.tol,
        cross_residual: r.cross_residual,
        cross_residuals: r.cross_residuals.clone(),
        invertibility_margins: r.invertibility_margins.clone(),
        weight_sum_residual: r.weight_sum_residual,
        min_weight: r.min_weight,
        contraction_depth: r.contraction_depth,
        contraction_factor: r.contraction_factor,
        failures: r
            .failures
            .iter()
            .map(|f| FailureJson {
                invariant: f.invariant,
                index: f.index,
                residual: f.residual,
            })
            .collect(),
        note: loaded.omega.and_then(derham::capability_note),
    };
    let mut text = serde_json::to_string_pretty(&json).expect("report serializes");
    text.push('\n');
    match &a.report {
        Some(p) => output::write(p, &text)?,
        None => print!("{text}"),
    }
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::Domain(format!("validation failed: {}", describe_failures(&r))))
    }
}

fn pressure_options(p: &PressureOpts) -> PressureOptions {
    PressureOptions {
        norm: p.norm.into(),
        budget: p.budget,
        ..PressureOptions::default()
    }
}

fn pressure_curve(loaded: &Loaded, p: &PressureOpts) -> Result<PressureCurve, CliError> {
    let system = loaded.zipper.matrix_system()?;
    let grid = p.t.points()?;
    if grid.len() < 3 {
        return Err(CliError::Config("the t-grid needs at least three points".into()));
    }
    let curve = PressureCurve::compute(&system, &grid, &p.depths.0, &pressure_options(p))?;
    for w in &curve.warnings {
        eprintln!("warning: {w}");
    }
    Ok(curve)
}

fn print_summary(curve: &PressureCurve) {
    let s = &curve.summary;
    println!("d0         {}", num(s.d0));
    println!("alpha_min  {}", num(s.alpha_min));
    println!("alpha_max  {}", num(s.alpha_max));
    println!("alpha_hat  {}", num(s.alpha_hat));
}

pub fn pressure(a: &PressureArgs) -> Result<(), CliError> {
    let loaded = load(&a.source)?;
    validated(&loaded)?;
    note(&loaded);
    let curve = pressure_curve(&loaded, &a.pressure)?;
    let hash = config_hash("pressure", &loaded.file, a);
    let mut header = vec!["t".to_string()];
    header.extend(curve.depths.iter().map(|n| format!("P_{n}")));
    header.extend(["P".to_string(), "P_prime".to_string(), "residual".to_string()]);
    let mut csv = Csv::new(&header);
    for (j, t) in curve.t_grid.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(curve.per_depth.iter().map(|p| num(p[j])));
        row.extend([num(curve.extrapolated[j]), num(curve.derivative[j]), num(curve.residual[j])]);
        csv.row(&row);
    }
    output::write(&a.out.out.join("pressure.csv"), &csv.finish(&hash))?;
    print_summary(&curve);
    Ok(())
}

/// Positive coordinates and a certified cone for a planar zipper, if the
/// conjugation search finds them.
struct Certified {
    transform: cones::Conjugation,
    zipper: Zipper,
    cone: cones::ConeCertificate,
}

fn certify(z: &Zipper, margin: f64) -> Result<Certified, String> {
    if z.dim() != 2 {
        return Err("conjugation search is limited to d = 2".into());
    }
    let conj = cones::conjugation_search(&z.matrices()).map_err(|e| e.to_string())?;
    let zc = z.conjugate(&conj.matrix).map_err(|e| e.to_string())?;
    let cone = cones::invariant_cone_2d(&zc.matrices(), 1000, margin, Some((0.0, FRAC_PI_2))).map_err(|e| e.to_string())?;
    Ok(Certified {
        transform: conj,
        zipper: zc,
        cone,
    })
}

fn assumption_a(z: &Zipper, margin: f64, seed: u64) -> bool {
    match certify(z, margin) {
        Ok(c) => cones::check_assumption_a(&c.zipper, &c.cone.cone, 2000, margin, seed).is_ok_and(|r| r.passed()),
        Err(_) => false,
    }
}

pub fn spectrum(a: &SpectrumArgs) -> Result<(), CliError> {
    let loaded = load(&a.source)?;
    validated(&loaded)?;
    note(&loaded);
    let system = loaded.zipper.matrix_system()?;
    let curve = pressure_curve(&loaded, &a.pressure)?;
    let flags = SpectrumFlags {
        symmetric: pressure::symmetry_check(&system, 30, a.pressure.norm.into()).symmetric,
        assumption_a: assumption_a(&loaded.zipper, 1e-3, 0),
    };
    let betas = match a.betas {
        Betas::Auto => {
            let mut b = pressure::auto_betas(&curve, a.beta_count);
            let hat = curve.summary.alpha_hat;
            if !b.contains(&hat) {
                b.push(hat);
                b.sort_by(f64::total_cmp);
            }
            b
        }
        Betas::Grid(g) => g.points()?,
    };
    let spec = pressure::spectrum_curve(&curve, &betas, flags, a.tol)?;
    let hash = config_hash("spectrum", &loaded.file, a);
    let mut csv = Csv::new(&["beta", "D", "t_star", "window_tag"].map(String::from));
    for p in &spec.points {
        csv.row(&[num(p.beta), num(p.value), num(p.t_star), p.tag.as_str().to_string()]);
    }
    output::write(&a.out.out.join("spectrum.csv"), &csv.finish(&hash))?;

    let counting = pressure::counting_spectrum(&system, a.counting_r, a.delta, &betas, &pressure_options(&a.pressure))?;
    let mut csv = Csv::new(&["beta", "D_count", "bin_count"].map(String::from));
    for c in &counting {
        csv.row(&[num(c.beta), num(c.value), c.count.to_string()]);
    }
    output::write(&a.out.out.join("counting.csv"), &csv.finish(&hash))?;

    print_summary(&curve);
    if spec.degenerate {
        println!("degenerate spectrum: P' is constant");
    }
    if let Some(w) = loaded.omega {
        match derham::nondiff_dimension(w, &curve) {
            Ok(n) => println!(
                "nondiff    t_star {} dim {} residual {}",
                num(n.t_star),
                num(n.dim),
                num(n.residual)
            ),
            Err(e) => println!("nondiff    {e}"),
        }
        println!("projected  {}", num(derham::projected_measure_dim(&curve).value));
    }
    Ok(())
}

pub fn holder(a: &HolderArgs) -> Result<(), CliError> {
    let loaded = load(&a.source)?;
    validated(&loaded)?;
    note(&loaded);
    let points: Vec<f64> = match &a.points {
        Some(p) => {
            if let Some(x) = p.0.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
                return Err(CliError::Config(format!("--points: {x} is not in (0, 1)")));
            }
            p.0.clone()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..a.random).map(|_| rng.gen_range(0.001..0.999)).collect()
        }
    };
    let z = &loaded.zipper;
    let ev = z.evaluator()?;
    let opts = DirectOptions {
        scale_count: a.scales,
        samples_per_scale: a.samples,
        seed: a.seed,
    };
    let estimates = points
        .par_iter()
        .map(|&x| holder::estimate_with(z, &ev, x, a.depth, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let hash = config_hash("holder", &loaded.file, a);
    let mut csv = Csv::new(&["x", "symbolic_final", "direct_min", "direct_regression"].map(String::from));
    for e in &estimates {
        csv.row(&[
            num(e.x),
            num(e.symbolic_final().unwrap_or(f64::NAN)),
            num(e.direct_min),
            num(e.direct_regression),
        ]);
    }
    output::write(&a.out.out.join("holder.csv"), &csv.finish(&hash))?;
    Ok(())
}

#[derive(Serialize)]
struct ConditionJson {
    condition: String,
    pass: bool,
    margin: f64,
    witness: Option<String>,
}

impl From<ConditionReport> for ConditionJson {
    fn from(c: ConditionReport) -> Self {
        ConditionJson {
            condition: c.condition,
            pass: c.pass,
            margin: finite(c.margin),
            witness: c.witness,
        }
    }
}

/// JSON has no infinities.
fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

fn failed(condition: &str, witness: String) -> ConditionJson {
    ConditionJson {
        condition: condition.into(),
        pass: false,
        margin: 0.0,
        witness: Some(witness),
    }
}

pub fn cones(a: &ConesArgs) -> Result<(), CliError> {
    let loaded = load(&a.source)?;
    validated(&loaded)?;
    note(&loaded);
    let z = &loaded.zipper;
    let ms = z.matrices();
    let mut out: Vec<ConditionJson> = Vec::new();

    let pos = cones::check_positivity(&ms);
    out.push(ConditionJson {
        condition: "positivity".into(),
        pass: pos.positive,
        margin: pos.min_entry,
        witness: pos
            .location
            .filter(|_| !pos.positive)
            .map(|(i, r, c)| format!("map {i}, entry ({r}, {c})")),
    });

    if z.dim() == 2 {
        match certify(z, a.margin) {
            Ok(c) => {
                out.push(ConditionJson {
                    condition: "conjugation".into(),
                    pass: true,
                    margin: c.transform.min_entry,
                    witness: Some(c.transform.transform.name()),
                });
                let (lo, hi) = c.cone.cone.bounds().expect("planar cone");
                out.push(ConditionJson {
                    condition: "invariant-cone".into(),
                    pass: true,
                    margin: c.cone.clearance,
                    witness: Some(format!("arc [{}, {}]", num(lo), num(hi))),
                });
                let r = cones::check_assumption_a(&c.zipper, &c.cone.cone, a.samples, a.margin, a.seed)?;
                out.extend(r.conditions.into_iter().map(ConditionJson::from));
            }
            Err(e) => {
                out.push(failed("conjugation", e));
                match cones::invariant_cone_2d(&ms, 1000, a.margin, None) {
                    Ok(c) => {
                        let (lo, hi) = c.cone.bounds().expect("planar cone");
                        out.push(ConditionJson {
                            condition: "invariant-cone".into(),
                            pass: true,
                            margin: c.clearance,
                            witness: Some(format!("arc [{}, {}]", num(lo), num(hi))),
                        });
                        let r = cones::check_assumption_a(z, &c.cone, a.samples, a.margin, a.seed)?;
                        out.extend(r.conditions.into_iter().map(ConditionJson::from));
                    }
                    Err(e) => out.push(failed("invariant-cone", e.to_string())),
                }
            }
        }
    } else if pos.positive {
        let d = z.dim();
        let gens: Vec<Vec<f64>> = (0..d).map(|k| Matrix::identity(d).as_slice()[k * d..(k + 1) * d].to_vec()).collect();
        let cone = ProjectiveCone::simplicial(gens)?;
        let r = cones::check_assumption_a(z, &cone, a.samples, a.margin, a.seed)?;
        out.extend(r.conditions.into_iter().map(ConditionJson::from));
    } else {
        out.push(failed("invariant-cone", format!("no cone search for d = {} without positivity", z.dim())));
    }

    match cones::splitting_diagnostic(&ms, a.splitting.lo, a.splitting.hi, a.splitting_samples, a.seed) {
        Ok(s) => out.push(ConditionJson {
            condition: "dominated-splitting".into(),
            pass: !s.no_splitting,
            margin: finite(1.0 - s.decay_rate),
            witness: Some(format!(
                "decay_rate={} constant={} residual={}",
                num(s.decay_rate),
                num(s.constant),
                num(s.residual)
            )),
        }),
        Err(e) => out.push(failed("dominated-splitting", e.to_string())),
    }

    if z.dim() == 2 {
        match cones::well_ordered_check(z, a.level, a.delta, a.direction_depth) {
            Ok(r) => out.push(ConditionJson {
                condition: "well-ordered".into(),
                pass: r.pass,
                margin: a.delta,
                witness: r.witness.map(|w| {
                    format!(
                        "angle={} parameters=[{}, {}, {}] projections=[{}, {}, {}]",
                        num(w.angle),
                        num(w.parameters[0]),
                        num(w.parameters[1]),
                        num(w.parameters[2]),
                        num(w.projections[0]),
                        num(w.projections[1]),
                        num(w.projections[2])
                    )
                }),
            }),
            Err(e) => out.push(failed("well-ordered", e.to_string())),
        }
    }

    let mut text = serde_json::to_string_pretty(&out).expect("report serializes");
    text.push('\n');
    output::write(&a.out.out.join("cones.json"), &text)?;
    for c in &out {
        println!(
            "{:<22} {:<5} {:>14}  {}",
            c.condition,
            if c.pass { "pass" } else { "FAIL" },
            output::sig(c.margin, 6),
            c.witness.as_deref().unwrap_or("")
        );
    }
    Ok(())
}

pub fn render(a: &RenderArgs) -> Result<(), CliError> {
    let loaded = load(&a.source)?;
    validated(&loaded)?;
    note(&loaded);
    let z = &loaded.zipper;
    let pts = z.sample_curve(a.depth, zipper_core::DEFAULT_LEAF_BUDGET)?;
    let hash = config_hash("render", &loaded.file, a);
    let d = z.dim();
    let mut header = vec!["x".to_string()];
    header.extend((1..=d).map(|k| format!("v{k}")));
    let mut csv = Csv::new(&header);
    for p in &pts {
        let mut row = vec![num(p.parameter)];
        row.extend(p.position.iter().map(|v| num(*v)));
        csv.row(&row);
    }
    output::write(&a.out.out.join("curve.csv"), &csv.finish(&hash))?;
    let planar: Vec<[f64; 2]> = pts
        .iter()
        .map(|p| match d {
            1 => [p.parameter, p.position[0]],
            _ => [p.position[0], p.position[1]],
        })
        .collect();
    output::write(&a.out.out.join("curve.svg"), &output::svg(&planar))?;
    println!("{} points", pts.len());
    Ok(())
}
