use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::Path;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use scalelaw_core::isoflop::svg::curves_chart;
use scalelaw_core::{
    compare_laws, curve_minimum, default_n_range, detect_spike, grid_search, isoflop_curve, local_refine,
    optimal_allocation, optimal_sparsity, parse_records, parse_scales, published_coefficients,
    published_literals, random_search, reference_grid, smbo_fit, synthesize_dataset, write_records,
    write_scales, AllocationPlan, CoefficientSet, ComputeBudget, FitObjectiveConfig, FitResult, IsoflopCurve,
    IsoflopSample, LawId, Metric, ModelScale, ResidualSpace, SearchSpace, SpikeReport, TraceEntry,
};

use crate::args::{
    CompareArgs, EvalArgs, FitArgs, Format, GridArgs, IsoflopArgs, LawArgs, Method, MetricArg, PlanArgs,
    ResidualArg, SynthArgs,
};
use crate::number::significant;
use crate::Failure;

type Out<'a> = &'a mut Vec<u8>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_coeffs(law: LawId, path: Option<&Path>) -> Result<CoefficientSet, Failure> {
    let Some(path) = path else {
        return Ok(published_coefficients(law));
    };
    let set = CoefficientSet::from_json(&read(path)?)?;
    if set.law() != law {
        return Err(Failure::Input(format!(
            "{} holds {} coefficients, expected {law}",
            path.display(),
            set.law()
        )));
    }
    Ok(set)
}

fn coefficients(args: &LawArgs) -> Result<CoefficientSet, Failure> {
    load_coeffs(args.law, args.coeffs.as_deref())
}

fn json<T: Serialize>(out: Out, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Failure::Input(e.to_string()))?;
    out.push(b'\n');
    Ok(())
}

fn unsupported(format: Format, command: &str) -> Failure {
    Failure::Input(format!("{command} does not support --format {format:?}").to_lowercase())
}

fn budget(flops: f64) -> Result<ComputeBudget, Failure> {
    Ok(ComputeBudget::new(flops)?)
}

#[derive(Serialize)]
struct Evaluation {
    law: LawId,
    n: f64,
    d: f64,
    s: f64,
    loss: f64,
}

pub fn eval(args: &EvalArgs, out: Out) -> Result<(), Failure> {
    let coeffs = coefficients(&args.law)?;
    let scales = match &args.scales {
        Some(path) => parse_scales(open(path)?)?,
        None => {
            let (n, d) = (args.n.expect("required by clap"), args.d.expect("required by clap"));
            vec![ModelScale::new(n, d, args.s)?]
        }
    };
    let rows = scales
        .iter()
        .map(|sc| {
            Ok(Evaluation {
                law: coeffs.law(),
                n: sc.n_active(),
                d: sc.d_tokens(),
                s: sc.sparsity(),
                loss: coeffs.eval(sc)?,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    match args.format {
        Format::Text => {
            for r in &rows {
                writeln!(out, "{}", significant(r.loss, 6))?;
            }
        }
        Format::Json if args.scales.is_none() => json(out, &rows[0])?,
        Format::Json => json(out, &rows)?,
        Format::Csv => {
            writeln!(out, "n_active,d_tokens,sparsity,loss")?;
            for r in &rows {
                writeln!(out, "{},{},{},{}", r.n, r.d, r.s, r.loss)?;
            }
        }
        f => return Err(unsupported(f, "eval")),
    }
    Ok(())
}

fn objective_config(args: &FitArgs) -> FitObjectiveConfig {
    FitObjectiveConfig {
        metric: match args.metric {
            MetricArg::Mse => Metric::Mse,
            MetricArg::Huber => Metric::Huber { delta: args.huber_delta },
            MetricArg::LogMse => Metric::LogMse,
        },
        space: match args.residuals {
            ResidualArg::Loss => ResidualSpace::Loss,
            ResidualArg::LogLoss => ResidualSpace::LogLoss,
        },
    }
}

/// Appends a refinement run to a search result; the combined trace keeps
/// evaluation order and the best entry wins as usual.
fn chain(search: FitResult, refined: FitResult) -> FitResult {
    let mut trace = search.trace;
    for e in refined.trace {
        let index = trace.len();
        trace.push(TraceEntry { index, ..e });
    }
    let (coefficients, objective) = if refined.objective < search.objective {
        (refined.coefficients, refined.objective)
    } else {
        (search.coefficients, search.objective)
    };
    FitResult {
        law: search.law,
        method: format!("{}+local_refine", search.method),
        coefficients,
        objective,
        evaluations: trace.len(),
        seed: search.seed,
        trace,
    }
}

pub fn fit(args: &FitArgs, seed: u64, out: Out) -> Result<(), Failure> {
    let records = parse_records(open(&args.records)?)?;
    let config = objective_config(args);
    let space = match &args.space {
        Some(path) => SearchSpace::from_json(args.law, &read(path)?)?,
        None => SearchSpace::default_for(&published_coefficients(args.law)),
    };
    let result = match args.method {
        Method::Grid => grid_search(&space, &records, &config, args.points_per_dim)?,
        Method::Random => random_search(&space, &records, &config, args.budget, seed)?,
        Method::Smbo => smbo_fit(&space, &records, &config, args.budget, args.init_samples, seed)?,
        Method::Refine => {
            let start = load_coeffs(args.law, args.start.as_deref())?;
            local_refine(&start, &records, &config, args.budget, args.tolerance)?
        }
    };
    let result = if args.refine && args.method != Method::Refine {
        let refined = local_refine(&result.coefficients, &records, &config, 20_000, args.tolerance)?;
        chain(result, refined)
    } else {
        result
    };
    if let Some(path) = &args.trace {
        let file = File::create(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        result.write_trace_csv(file)?;
    }
    writeln!(out, "{}", result.to_json())?;
    Ok(())
}

#[derive(Serialize)]
struct SparsityChoice {
    s_best: f64,
    plan: AllocationPlan,
    candidates: Vec<AllocationPlan>,
}

pub fn plan(args: &PlanArgs, out: Out) -> Result<(), Failure> {
    let coeffs = coefficients(&args.law)?;
    let c = budget(args.compute)?;
    let Some(grid) = &args.sparsity_grid else {
        let plan = optimal_allocation(&coeffs, c, args.s)?;
        return write_plans(args.format, out, &plan, &[plan]);
    };
    let candidates =
        grid.iter().map(|&s| optimal_allocation(&coeffs, c, s)).collect::<Result<Vec<_>, _>>()?;
    let best = match coeffs {
        CoefficientSet::Generalized(g) => optimal_sparsity(&g, c, grid)?.1,
        _ => {
            // same tie rule as optimal_sparsity: lowest loss, then smallest s
            let mut best =
                candidates.first().copied().ok_or_else(|| Failure::Input("empty --sparsity-grid".into()))?;
            for p in &candidates[1..] {
                if p.predicted_loss < best.predicted_loss
                    || (p.predicted_loss == best.predicted_loss && p.sparsity < best.sparsity)
                {
                    best = *p;
                }
            }
            best
        }
    };
    if args.format == Format::Json {
        return json(out, &SparsityChoice { s_best: best.sparsity, plan: best, candidates });
    }
    write_plans(args.format, out, &best, &candidates)
}

fn write_plans(
    format: Format,
    out: Out,
    best: &AllocationPlan,
    all: &[AllocationPlan],
) -> Result<(), Failure> {
    match format {
        Format::Json => json(out, best),
        Format::Csv => {
            writeln!(out, "compute,sparsity,n_opt,d_opt,predicted_loss,method")?;
            for p in all {
                let method = serde_json::to_value(p.method).expect("plain enum");
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    p.budget.flops(),
                    p.sparsity,
                    p.n_opt,
                    p.d_opt,
                    p.predicted_loss,
                    method.as_str().unwrap_or_default()
                )?;
            }
            Ok(())
        }
        Format::Text => {
            writeln!(out, "sparsity {}", significant(best.sparsity, 6))?;
            writeln!(out, "n_opt    {}", significant(best.n_opt, 6))?;
            writeln!(out, "d_opt    {}", significant(best.d_opt, 6))?;
            writeln!(out, "loss     {}", significant(best.predicted_loss, 6))?;
            Ok(())
        }
        f => Err(unsupported(f, "plan")),
    }
}

#[derive(Serialize)]
struct CurveReport {
    #[serde(flatten)]
    curve: IsoflopCurve,
    minimum: IsoflopSample,
    spike: SpikeReport,
}

pub fn isoflop(args: &IsoflopArgs, out: Out) -> Result<(), Failure> {
    let coeffs = coefficients(&args.law)?;
    let c = budget(args.compute)?;
    let (lo, hi) = default_n_range(c);
    let (n_min, n_max) = (args.n_min.unwrap_or(lo), args.n_max.unwrap_or(hi));
    let reports = args
        .s
        .iter()
        .map(|&s| {
            let curve = isoflop_curve(&coeffs, c, s, n_min, n_max, args.samples)?;
            let spike = detect_spike(&curve, args.threshold)?;
            Ok(CurveReport { minimum: curve_minimum(&curve), spike, curve })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    match args.format {
        Format::Json => json(out, &reports)?,
        Format::Csv if reports.len() == 1 => reports[0].curve.write_csv(&mut *out)?,
        Format::Csv => {
            writeln!(out, "sparsity,n,d,loss")?;
            for r in &reports {
                for p in &r.curve.samples {
                    writeln!(out, "{},{},{},{}", r.curve.sparsity, p.n, p.d, p.loss)?;
                }
            }
        }
        Format::Svg => {
            let curves: Vec<IsoflopCurve> = reports.into_iter().map(|r| r.curve).collect();
            out.extend_from_slice(curves_chart(&curves)?.as_bytes());
        }
        Format::Text => {
            for r in &reports {
                writeln!(
                    out,
                    "s={} min loss {} at n={} d={} rise {} spiky {}",
                    significant(r.curve.sparsity, 6),
                    significant(r.minimum.loss, 6),
                    significant(r.minimum.n, 6),
                    significant(r.minimum.d, 6),
                    significant(r.spike.rise, 6),
                    r.spike.spiky
                )?;
            }
        }
    }
    Ok(())
}

pub fn compare(args: &CompareArgs, out: Out) -> Result<(), Failure> {
    let a = load_coeffs(args.law_a, args.coeffs_a.as_deref())?;
    let b = load_coeffs(args.law_b, args.coeffs_b.as_deref())?;
    let mut grid = reference_grid(args.grid).records;
    if let Some(s) = args.s {
        grid = grid.iter().map(|sc| sc.with_sparsity(s)).collect::<Result<_, _>>()?;
    }
    let report = compare_laws(&a, &b, &grid)?;
    match args.format {
        Format::Json => json(out, &report)?,
        Format::Csv => report.write_csv(&mut *out)?,
        Format::Text => writeln!(
            out,
            "max |{} - {}| = {:.6e} at n={} d={} s={}",
            report.law_a,
            report.law_b,
            report.max_abs_diff,
            significant(report.argmax.n_active(), 6),
            significant(report.argmax.d_tokens(), 6),
            significant(report.argmax.sparsity(), 6)
        )?,
        f => return Err(unsupported(f, "compare")),
    }
    Ok(())
}

/// Published values written with their printed digits.
struct Literals(LawId);

impl Serialize for Literals {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let names = self.0.coefficient_names();
        let mut map = serializer.serialize_map(Some(names.len()))?;
        for (name, lit) in names.iter().zip(published_literals(self.0)) {
            let raw: Box<RawValue> =
                RawValue::from_string(lit.to_string()).map_err(serde::ser::Error::custom)?;
            map.serialize_entry(name, &raw)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct Table {
    law: LawId,
    coefficients: Literals,
}

/// Each entry doubles as a coefficient document for `--coeffs`.
pub fn tables(out: Out) -> Result<(), Failure> {
    let tables: Vec<Table> =
        LawId::ALL.into_iter().map(|law| Table { law, coefficients: Literals(law) }).collect();
    json(out, &tables)
}

pub fn grid(args: &GridArgs, out: Out) -> Result<(), Failure> {
    let grid = reference_grid(args.source);
    match args.format {
        Format::Csv => write_scales(&mut *out, &grid.records)?,
        Format::Json => json(out, &grid)?,
        f => return Err(unsupported(f, "grid")),
    }
    Ok(())
}

pub fn synth(args: &SynthArgs, seed: u64, out: Out) -> Result<(), Failure> {
    let coeffs = coefficients(&args.law)?;
    let scales = match (&args.grid, &args.scales) {
        (Some(g), _) => reference_grid(*g).records,
        (None, Some(path)) => parse_scales(open(path)?)?,
        (None, None) => return Err(Failure::Input("synth needs --grid or --scales".into())),
    };
    let records = synthesize_dataset(&coeffs, &scales, args.noise, seed)?;
    write_records(&mut *out, &records)?;
    Ok(())
}
