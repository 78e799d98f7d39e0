use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use measura::exact::{cantor_level_rat, limit_measure, null_cover, outer_measure_of_cover, IntervalSet, NestedFamily, COVER_HORIZON};
use measura::expr::{eval_set, parse_func, parse_func_in, parse_set};
use measura::l2::{self, ambient};
use measura::lebesgue::{general_over, integrate_over, lebesgue_in, convergence_run, ConvergenceMode, General, Measure, Truncation};
use measura::rat::{format_g, format_rat, parse_rat, to_f64};
use measura::step::{regulated_integral, riemann_integrable, RiemannVerdict};
use measura::{Error, FuncExpr, IntegralEnclosure, Rat};

use crate::{Cli, Command, Engine, Format};

pub struct Output {
    pub text: String,
    pub code: u8,
}

#[derive(Serialize)]
struct Envelope {
    op: &'static str,
    input: Value,
    value: Value,
    verdict: String,
    certificate: Value,
}

impl Envelope {
    fn render(&self, code: u8) -> Result<Output> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(Output { text, code })
    }
}

fn annotate(e: Error, text: &str) -> anyhow::Error {
    match e {
        Error::Syntax { pos, ref msg } => {
            let caret = " ".repeat(pos.saturating_sub(1));
            anyhow!("syntax error at position {pos}: {msg}\n  {text}\n  {caret}^")
        }
        other => anyhow!(other),
    }
}

fn func(text: &str) -> Result<FuncExpr> {
    parse_func(text).map_err(|e| annotate(e, text))
}

fn func_sym(text: &str) -> Result<FuncExpr> {
    parse_func_in(text, &ambient()).map_err(|e| annotate(e, text))
}

fn set(text: &str) -> Result<IntervalSet<Rat>> {
    let s = parse_set(text).map_err(|e| annotate(e, text))?;
    Ok(eval_set(&s)?)
}

fn rational(text: &str, what: &str) -> Result<Rat> {
    parse_rat(text).ok_or_else(|| anyhow!("invalid {what} '{text}': expected p/q or a decimal"))
}

fn positive(text: &str, what: &str) -> Result<Rat> {
    let q = rational(text, what)?;
    if q <= Rat::from_integer(0.into()) {
        bail!("{what} must be positive, got {text}");
    }
    Ok(q)
}

fn measure_arg(text: &str) -> Result<Measure> {
    if text == "lebesgue" {
        return Ok(Measure::Lebesgue);
    }
    if let Some(x) = text.strip_prefix("dirac:") {
        let x0 = rational(x, "dirac point")?;
        if x0 < Rat::from_integer(0.into()) || x0 > Rat::from_integer(1.into()) {
            bail!("dirac point {x} lies outside [0, 1]");
        }
        return Ok(Measure::Dirac(x0));
    }
    if let Some(g) = text.strip_prefix("density:") {
        return Ok(Measure::density(func(g)?)?);
    }
    bail!("unknown measure '{text}': expected lebesgue, dirac:<rat> or density:<expr>")
}

fn enc(e: &IntegralEnclosure) -> Value {
    serde_json::to_value(e).unwrap()
}

fn q(v: &Rat) -> Value {
    Value::String(format_rat(v))
}

fn dec(v: &Rat) -> String {
    format_g(to_f64(v), 12)
}

pub fn run(cli: &Cli) -> Result<Output> {
    let tol = positive(&cli.common.tol, "tolerance")?;
    let fmt = cli.common.format;
    match &cli.command {
        Command::Measure { set: s, measure } => cmd_measure(s, measure, &tol),
        Command::Integrate { expr, engine, measure, over, depth, bound } => {
            let bound = positive(bound, "bound")?;
            cmd_integrate(expr, *engine, measure, over.as_deref(), *depth, &bound, &tol)
        }
        Command::Cantor { n, full } => cmd_cantor(*n, *full, fmt.unwrap_or(Format::Json)),
        Command::Cover { family, full } => cmd_cover(family, *full, &tol),
        Command::Converge { template, mode, ns, limit } => {
            cmd_converge(template, mode, ns, limit.as_deref(), &tol, fmt.unwrap_or(Format::Json))
        }
        Command::Fourier { expr, n, emit_plot } => {
            cmd_fourier(expr, *n, emit_plot.as_deref(), &tol, fmt.unwrap_or(Format::Csv))
        }
        Command::L2check { f, g } => cmd_l2check(f, g, &tol),
    }
}

fn cmd_measure(text: &str, measure: &str, tol: &Rat) -> Result<Output> {
    let a = set(text)?;
    let m = measure_arg(measure)?;
    let input = json!({ "set": text, "measure": measure });
    let certificate = json!({ "set": a });
    let (value, verdict) = match m {
        Measure::Lebesgue => (q(&a.measure()), "exact"),
        Measure::Dirac(_) => (q(&m.measure_of(&a)?.lo), "exact"),
        Measure::Density(ref g) => {
            let e = integrate_over(g, &a, &Measure::Lebesgue, tol)?.enclosure;
            (enc(&e), if e.is_exact() { "exact" } else { "enclosure" })
        }
    };
    Envelope { op: "measure", input, value, verdict: verdict.into(), certificate }.render(0)
}

struct EngineResult {
    value: Value,
    verdict: &'static str,
    certificate: Value,
    enclosure: Option<IntegralEnclosure>,
}

impl EngineResult {
    fn integrable(e: IntegralEnclosure, certificate: Value) -> Self {
        EngineResult { value: enc(&e), verdict: "integrable", certificate, enclosure: Some(e) }
    }

    fn uncertified(msg: String) -> Self {
        EngineResult { value: Value::Null, verdict: "not-certified", certificate: json!({ "reason": msg }), enclosure: None }
    }

    fn code(&self) -> u8 {
        match self.verdict {
            "non-integrable" | "exceeded-bound" => 1,
            _ => 0,
        }
    }
}

fn soft(r: measura::Result<EngineResult>) -> Result<EngineResult> {
    match r {
        Err(e @ (Error::NotCertified(_) | Error::Unbounded(_))) => Ok(EngineResult::uncertified(e.to_string())),
        other => Ok(other?),
    }
}

fn riemann_engine(f: &FuncExpr, tol: &Rat, depth: u32) -> measura::Result<EngineResult> {
    Ok(match riemann_integrable(f, tol, depth)? {
        RiemannVerdict::Integrable(e) => {
            let c = json!({ "lower": q(&e.lo), "upper": q(&e.hi) });
            EngineResult::integrable(e, c)
        }
        RiemannVerdict::NotCertified(b) => EngineResult {
            value: Value::Null,
            verdict: "not-certified",
            certificate: serde_json::to_value(&b).unwrap(),
            enclosure: None,
        },
        RiemannVerdict::NonIntegrable(w) => EngineResult {
            value: Value::Null,
            verdict: "non-integrable",
            certificate: serde_json::to_value(&w).unwrap(),
            enclosure: None,
        },
    })
}

fn lebesgue_engine(f: &FuncExpr, region: &IntervalSet<Rat>, m: &Measure, tol: &Rat, bound: &Rat) -> measura::Result<EngineResult> {
    if !matches!(m, Measure::Lebesgue) {
        let r = integrate_over(f, region, m, tol)?;
        let c = json!({ "at_tolerance": r.at_tolerance });
        return Ok(EngineResult::integrable(r.enclosure, c));
    }
    match lebesgue_in(f, region, &measura::exact::Interval::unit(), tol) {
        Ok(r) => {
            let c = json!({ "at_tolerance": r.at_tolerance, "path": "bounded" });
            return Ok(EngineResult::integrable(r.enclosure, c));
        }
        Err(Error::Unbounded(_)) => {}
        Err(e) => return Err(e),
    }
    let g = general_over(f, region, tol, bound)?;
    let certificate = serde_json::to_value(&g).unwrap();
    Ok(match g {
        General::Integrable { enclosure, .. } => EngineResult::integrable(enclosure, certificate),
        General::NotIntegrableAtBound { positive, negative } => {
            let exceeded = matches!(positive, Truncation::Exceeded { .. }) || matches!(negative, Truncation::Exceeded { .. });
            EngineResult {
                value: Value::Null,
                verdict: if exceeded { "exceeded-bound" } else { "not-certified" },
                certificate,
                enclosure: None,
            }
        }
    })
}

fn regulated_engine(f: &FuncExpr, tol: &Rat) -> measura::Result<EngineResult> {
    if f.has_dirichlet() {
        return Ok(EngineResult::uncertified("dirichlet terms are not uniform limits of step functions".into()));
    }
    let e = regulated_integral(f, tol)?;
    let c = json!({ "lower": q(&e.lo), "upper": q(&e.hi) });
    Ok(EngineResult::integrable(e, c))
}

fn cmd_integrate(text: &str, engine: Engine, measure: &str, over: Option<&str>, depth: u32, bound: &Rat, tol: &Rat) -> Result<Output> {
    let f = func(text)?;
    let m = measure_arg(measure)?;
    let region = match over {
        Some(s) => set(s)?,
        None => IntervalSet::from_interval(measura::exact::Interval::unit()),
    };
    let literal = match over {
        Some(_) => f.clone() * FuncExpr::indicator(&region),
        None => f.clone(),
    };
    if engine != Engine::Lebesgue && !matches!(m, Measure::Lebesgue) {
        bail!("only the lebesgue engine integrates against {measure}");
    }
    let input = json!({
        "expr": text,
        "engine": format!("{engine:?}").to_lowercase(),
        "measure": measure,
        "over": over,
        "tol": q(tol),
    });
    let single = |r: EngineResult| {
        let code = r.code();
        Envelope { op: "integrate", input: input.clone(), value: r.value, verdict: r.verdict.into(), certificate: r.certificate }
            .render(code)
    };
    match engine {
        Engine::Riemann => single(soft(riemann_engine(&literal, tol, depth))?),
        Engine::Lebesgue => single(soft(lebesgue_engine(&f, &region, &m, tol, bound))?),
        Engine::Regulated => single(soft(regulated_engine(&literal, tol))?),
        Engine::All => {
            let runs = [
                ("riemann", soft(riemann_engine(&literal, tol, depth))?),
                ("lebesgue", soft(lebesgue_engine(&f, &region, &m, tol, bound))?),
                ("regulated", soft(regulated_engine(&literal, tol))?),
            ];
            let encs: Vec<&IntegralEnclosure> = runs.iter().filter_map(|(_, r)| r.enclosure.as_ref()).collect();
            let agree = encs.iter().all(|a| encs.iter().all(|b| a.meets(b, &Rat::from_integer(0.into()))));
            let mut value = serde_json::Map::new();
            let mut certificate = serde_json::Map::new();
            for (name, r) in &runs {
                value.insert(name.to_string(), r.value.clone());
                certificate.insert(name.to_string(), json!({ "verdict": r.verdict, "certificate": r.certificate }));
            }
            let verdict = if agree { "agree" } else { "disagree" };
            Envelope { op: "integrate", input, value: Value::Object(value), verdict: verdict.into(), certificate: Value::Object(certificate) }
                .render(if agree { 0 } else { 1 })
        }
    }
}

fn cmd_cantor(n: u32, full: bool, fmt: Format) -> Result<Output> {
    if n > 24 {
        bail!("cantor level {n} is above the supported maximum 24");
    }
    let report = limit_measure(&NestedFamily::cantor(), n as usize)?;
    if fmt == Format::Csv {
        let mut text = String::from("n,measure,components,measure_decimal\n");
        for (k, m) in report.measures.iter().enumerate() {
            let _ = writeln!(text, "{k},{},{},{}", format_rat(m), 1u64 << k, dec(m));
        }
        return Ok(Output { text, code: 0 });
    }
    let last = cantor_level_rat(n);
    let mut certificate = json!({
        "components": last.len(),
        "nested": true,
        "strictly_decreasing": report.strict,
        "measures": report.measures.iter().map(format_rat).collect::<Vec<_>>(),
    });
    if full {
        certificate["set"] = serde_json::to_value(&last)?;
    }
    Envelope { op: "cantor", input: json!({ "n": n }), value: q(report.measures.last().unwrap()), verdict: "exact".into(), certificate }
        .render(0)
}

fn cmd_cover(family: &str, full: bool, eps: &Rat) -> Result<Output> {
    if family != "cantor" {
        bail!("unknown family '{family}': only cantor is available");
    }
    let fam = NestedFamily::cantor();
    let cover = null_cover(&fam, eps, COVER_HORIZON)?;
    let (covers, total) = outer_measure_of_cover(&cover, &fam.level(cover.level));
    let verified = covers && total < *eps;
    let mut certificate = json!({
        "level": cover.level,
        "intervals": cover.intervals.len(),
        "covers_level": covers,
        "total_below_eps": total < *eps,
    });
    if full {
        certificate["cover"] = serde_json::to_value(&cover.intervals)?;
    }
    let verdict = if verified { "verified" } else { "failed" };
    Envelope { op: "cover", input: json!({ "family": family, "eps": q(eps) }), value: q(&total), verdict: verdict.into(), certificate }
        .render(if verified { 0 } else { 1 })
}

fn parse_ns(text: &str) -> Result<Vec<i64>> {
    let bad = || anyhow!("invalid --ns '{text}': expected a comma list or a range a..b");
    if let Some((a, b)) = text.split_once("..") {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse::<i64>().map_err(|_| bad())).collect()
}

fn cmd_converge(template: &str, mode: &str, ns: &str, limit: Option<&str>, tol: &Rat, fmt: Format) -> Result<Output> {
    let ns_v = parse_ns(ns)?;
    let m = match mode {
        "bounded" => ConvergenceMode::Bounded,
        "monotone" => ConvergenceMode::Monotone,
        _ => match mode.strip_prefix("dominated:") {
            Some(g) => ConvergenceMode::Dominated(func(g)?),
            None => bail!("unknown mode '{mode}': expected bounded, monotone or dominated:<expr>"),
        },
    };
    let lim = limit.map(func).transpose()?;
    let table = convergence_run(template, &m, &ns_v, lim.as_ref(), tol).with_context(|| format!("template '{template}'"))?;
    if fmt == Format::Csv {
        let mut text = String::from("n,lo,hi,sup_lo,sup_hi,hypothesis,integral_decimal\n");
        for r in &table.rows {
            let h = match r.hypothesis {
                Some(true) => "holds",
                Some(false) => "violated",
                None => "",
            };
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{}",
                r.n,
                format_rat(&r.integral.lo),
                format_rat(&r.integral.hi),
                format_rat(&r.sup_lo),
                r.sup_hi.as_deref().unwrap_or("inf"),
                h,
                dec(&((&r.integral.lo + &r.integral.hi) / Rat::from_integer(2.into())))
            );
        }
        return Ok(Output { text, code: 0 });
    }
    let mut flags = Vec::new();
    if table.uniform_bound_violated {
        flags.push("uniform-bound-violated");
    }
    if table.hypothesis_violated {
        flags.push("hypothesis-violated");
    }
    if table.limit_matches == Some(false) {
        flags.push("limit-mismatch");
    }
    let verdict = if flags.is_empty() { "consistent".to_string() } else { flags.join(",") };
    let input = json!({ "template": template, "mode": mode, "ns": ns, "limit": limit, "tol": q(tol) });
    let value = serde_json::to_value(&table.rows)?;
    let certificate = json!({
        "uniform_bound_violated": table.uniform_bound_violated,
        "hypothesis_violated": table.hypothesis_violated,
        "limit_integral": table.limit_integral,
        "limit_matches": table.limit_matches,
        "probe_residual": table.probe_residual,
    });
    Envelope { op: "converge", input, value, verdict, certificate }.render(0)
}

fn cmd_fourier(text: &str, n: usize, plot: Option<&str>, tol: &Rat, fmt: Format) -> Result<Output> {
    let grid = match plot {
        None => None,
        Some(p) => {
            let g = p.strip_prefix("grid=").ok_or_else(|| anyhow!("invalid --emit-plot '{p}': expected grid=<int>"))?;
            Some(g.parse::<usize>().ok().filter(|&g| g > 0).ok_or_else(|| anyhow!("invalid grid size '{g}'"))?)
        }
    };
    let f = func_sym(text)?;
    let coeffs = l2::fourier_coeffs(&f, n, tol)?;
    let s = l2::partial_sum(&coeffs, n)?;
    let plot_csv = grid.map(|g| l2::plot_csv(&f, &s, g)).transpose()?;
    if fmt == Format::Csv {
        let mut text = l2::coeffs_csv(&coeffs);
        if let Some(p) = plot_csv {
            text.push('\n');
            text.push_str(&p);
        }
        return Ok(Output { text, code: 0 });
    }
    let bp = l2::bessel_from(&f, coeffs, tol)?;
    let input = json!({ "expr": text, "N": n, "tol": q(tol), "emit_plot": plot });
    let mut certificate = json!({
        "max_width": q(&bp.coeffs.max_width()),
        "norm_sq": bp.norm_sq,
        "bessel_sum": bp.bessel_sum,
        "gap": bp.gap,
        "partial_sum": s.expr.to_string(),
        "perturbation": q(&s.perturbation),
    });
    if let Some(p) = plot_csv {
        let rows: Vec<Vec<&str>> = p.lines().skip(1).map(|l| l.split(',').collect()).collect();
        certificate["plot"] = serde_json::to_value(rows)?;
    }
    let verdict = if bp.bessel_holds() { "bessel-holds" } else { "bessel-violated" };
    let value = json!({ "a0": bp.coeffs.a0, "a": bp.coeffs.a, "b": bp.coeffs.b });
    Envelope { op: "fourier", input, value, verdict: verdict.into(), certificate }.render(if bp.bessel_holds() { 0 } else { 1 })
}

fn cmd_l2check(f: &str, g: &str, tol: &Rat) -> Result<Output> {
    let (fe, ge) = (func_sym(f)?, func_sym(g)?);
    let r = l2::inequality_suite(&fe, &ge, tol)?;
    let pass = r.all_pass();
    let certificate = json!({
        "holder_equality_possible": r.holder.equality_possible,
        "pythagorean_checked": r.pythagorean.is_some(),
    });
    let input = json!({ "f": f, "g": g, "tol": q(tol) });
    Envelope { op: "l2check", input, value: serde_json::to_value(&r)?, verdict: if pass { "pass" } else { "fail" }.into(), certificate }
        .render(if pass { 0 } else { 1 })
}
