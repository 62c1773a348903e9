//! One function per subcommand, each producing a [`Table`].

use mllt_core::bernstein::{
    limit_constant_min_cross, limit_constant_sum_cube, limit_constant_sum_sq, power_divergence,
    LimitPair,
};
use mllt_core::exact::{central_moment_exact, pmf};
use mllt_core::fit::loglog_slope;
use mllt_core::gauss_compare::tv_distance_numeric;
use mllt_core::llt::{
    expansion_terms, expansion_terms_symmetrized, max_bulk_ratio_error, Expansion, Order,
};
use mllt_core::model::{bulk_points, delta_vector};
use mllt_core::moments::{closed_form_central_moment, MomentSpec, Remainder};
use mllt_core::region::{leading_set_approx, region_prob_approx, region_prob_exact, Region};
use mllt_core::{par, LatticePoint, ModelParams, SimplexLattice};

use crate::error::CliError;
use crate::output::{Cell, Table};
use crate::settings::{parse_count_list, parse_float_list, Settings, Trials};

/// Row cap for per-point tables.
pub const MAX_ROWS: u64 = 10_000_000;

/// Sweeps shorter than this cannot support a slope fit.
pub const MIN_SWEEP_LEN: usize = 4;

fn count_columns(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

fn parse_point(s: &str, d: usize) -> Result<LatticePoint, CliError> {
    let k = parse_count_list(s, "--k")?;
    if k.len() != d {
        return Err(CliError::Args(format!(
            "--k has {} coordinates, expected {d}",
            k.len()
        )));
    }
    Ok(LatticePoint::new(k))
}

/// A region whose bounds may still refer to `N`.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionSpec {
    All,
    Points(Vec<Vec<u64>>),
    Box { lo: Vec<Bound>, hi: Vec<Bound> },
    HalfSpace { a: Vec<f64>, b: Bound },
}

/// `value` or `value * N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    value: f64,
    per_trial: bool,
}

impl Bound {
    fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        let bad = || {
            CliError::Args(format!(
                "region bound `{s}` is not a number or a multiple of N"
            ))
        };
        let (num, per_trial) = match s.strip_suffix('N') {
            Some("") => ("1", true),
            Some("-") => ("-1", true),
            Some(rest) => (rest.strip_suffix('*').unwrap_or(rest), true),
            None => (s, false),
        };
        let value: f64 = num.parse().map_err(|_| bad())?;
        if value.is_nan() || (per_trial && value.is_infinite()) {
            return Err(bad());
        }
        Ok(Self { value, per_trial })
    }

    fn at(self, n: u64) -> f64 {
        if self.per_trial {
            self.value * n as f64
        } else {
            self.value
        }
    }
}

impl RegionSpec {
    pub fn parse(s: &str, d: usize) -> Result<Self, CliError> {
        let bad = |why: String| CliError::Args(format!("bad region `{s}`: {why}"));
        let list = |t: &str| -> Result<Vec<Bound>, CliError> {
            let v = t
                .split(',')
                .map(Bound::parse)
                .collect::<Result<Vec<_>, _>>()?;
            if v.len() != d {
                return Err(bad(format!("{} bounds, expected {d}", v.len())));
            }
            Ok(v)
        };
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match (kind.trim(), rest.split(':').collect::<Vec<_>>().as_slice()) {
            ("all", [""]) => Ok(RegionSpec::All),
            ("points", [pts]) => {
                let pts = pts
                    .split(';')
                    .map(|p| parse_point(p, d).map(|k| k.0))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(RegionSpec::Points(pts))
            }
            ("box", [lo, hi]) => Ok(RegionSpec::Box {
                lo: list(lo)?,
                hi: list(hi)?,
            }),
            ("halfspace", [a, b]) => {
                let a = parse_float_list(a, "half-space normal")?;
                if a.len() != d || a.iter().any(|x| !x.is_finite()) {
                    return Err(bad(format!("normal needs {d} finite entries")));
                }
                let b = Bound::parse(b)?;
                if b.value.is_infinite() {
                    return Err(bad("offset must be finite".into()));
                }
                Ok(RegionSpec::HalfSpace { a, b })
            }
            _ => Err(bad(
                "expected all, points:K;K, box:LO:HI or halfspace:A:B".into()
            )),
        }
    }

    pub fn at(&self, n: u64) -> Region {
        let resolve = |v: &[Bound]| v.iter().map(|b| b.at(n)).collect();
        match self {
            RegionSpec::All => Region::All,
            RegionSpec::Points(pts) => {
                Region::Points(pts.iter().cloned().map(LatticePoint::new).collect())
            }
            RegionSpec::Box { lo, hi } => Region::Box {
                lo: resolve(lo),
                hi: resolve(hi),
            },
            RegionSpec::HalfSpace { a, b } => Region::HalfSpace {
                a: a.clone(),
                b: b.at(n),
            },
        }
    }
}

fn region_members(m: &ModelParams, region: &Region) -> Result<Vec<LatticePoint>, CliError> {
    if let Region::Points(pts) = region {
        let mut out: Vec<LatticePoint> = Vec::new();
        for k in pts {
            m.check_point(k)?;
            if !out.contains(k) {
                out.push(k.clone());
            }
        }
        return Ok(out);
    }
    let lat = SimplexLattice::new(m.dim(), m.n())?;
    if lat.len() > MAX_ROWS {
        return Err(CliError::TooLarge(format!(
            "{} lattice points exceed the row limit of {MAX_ROWS}",
            lat.len()
        )));
    }
    Ok(lat.iter().filter(|k| region.contains(k)).collect())
}

pub fn pmf_table(
    s: &Settings,
    k: Option<&str>,
    all: bool,
    region: Option<&str>,
) -> Result<Table, CliError> {
    let m = s.model(s.single_n()?)?;
    let d = m.dim();
    let points = match (k, all, region) {
        (Some(k), _, _) => {
            let k = parse_point(k, d)?;
            m.check_point(&k)?;
            vec![k]
        }
        (None, true, _) => region_members(&m, &Region::All)?,
        (None, false, Some(r)) => region_members(&m, &RegionSpec::parse(r, d)?.at(m.n()))?,
        (None, false, None) => bulk_points(&m, s.eta)?,
    };
    let exp = Expansion::new(&m);
    let rows = par::map_items(&points, |k| -> Result<[f64; 5], CliError> {
        let exact = pmf(&m, k)?;
        let [a0, ah, a1] = Order::ALL.map(|o| exp.approx(k, o).map(|a| a.value));
        Ok([exact, a0?, ah?, a1?, exp.ratio_error(k, Order::One)?])
    });
    let mut cols = count_columns("k", d);
    cols.extend(
        [
            "exact",
            "approx0",
            "approx_half",
            "approx_one",
            "ratio_error_one",
        ]
        .map(String::from),
    );
    let mut t = Table::new(cols);
    for (k, row) in points.iter().zip(rows) {
        let mut cells: Vec<Cell> = k.0.iter().map(|&x| x.into()).collect();
        cells.extend(row?.map(Cell::from));
        t.push(cells)?;
    }
    Ok(t)
}

pub fn expand_table(s: &Settings, k: &str) -> Result<Table, CliError> {
    let m = s.model(s.single_n()?)?;
    let d = m.dim();
    let k = parse_point(k, d)?;
    let dv = delta_vector(&m, &k)?;
    let sym = expansion_terms_symmetrized(&m, &k)?;
    let raw = expansion_terms(&m, &k)?;
    let approx = Expansion::new(&m).approx(&k, s.order)?;

    let mut cols = count_columns("k", d);
    cols.extend(count_columns("delta", d + 1));
    cols.extend(
        [
            "base",
            "c_half",
            "c_one",
            "c_half_raw",
            "c_one_raw",
            "order",
            "approx",
            "clamped",
        ]
        .map(String::from),
    );
    let mut cells: Vec<Cell> = k.0.iter().map(|&x| x.into()).collect();
    cells.extend(dv.full().map(Cell::from));
    cells.extend([
        sym.base.into(),
        sym.c_half.into(),
        sym.c_one.into(),
        raw.c_half.into(),
        raw.c_one.into(),
        s.order.label().into(),
        approx.value.into(),
        approx.clamped.into(),
    ]);
    let mut t = Table::new(cols).single();
    t.push(cells)?;
    Ok(t)
}

pub fn region_table(s: &Settings, region: &str) -> Result<Table, CliError> {
    let d = s.probabilities()?.len();
    let spec = RegionSpec::parse(region, d)?;
    let mut t = Table::new(["N", "order", "exact", "approx", "abs_error", "leading_set"]);
    for &n in s.trials()?.values() {
        let m = s.model(n)?;
        let r = spec.at(n);
        let ctx = format!("N = {n}");
        let exact = region_prob_exact(&m, &r).map_err(|e| CliError::from(e).context(&ctx))?;
        let approx = region_prob_approx(&m, &r, s.order, s.nodes)
            .map_err(|e| CliError::from(e).context(&ctx))?;
        let leading = match r {
            Region::Points(_) => Cell::Text(String::new()),
            _ => leading_set_approx(&m, &r, s.nodes)
                .map_err(|e| CliError::from(e).context(&ctx))?
                .into(),
        };
        t.push(vec![
            n.into(),
            s.order.label().into(),
            exact.into(),
            approx.into(),
            (approx - exact).abs().into(),
            leading,
        ])?;
    }
    Ok(t)
}

pub fn tv_table(s: &Settings) -> Result<Table, CliError> {
    let mut t = Table::new([
        "N",
        "tv",
        "tv_sqrtN",
        "cell_contribution",
        "outside_mass",
        "cells",
    ]);
    for &n in s.trials()?.values() {
        let m = s.model(n)?;
        let r = tv_distance_numeric(&m, s.nodes)
            .map_err(|e| CliError::from(e).context(&format!("N = {n}")))?;
        t.push(vec![
            n.into(),
            r.tv.into(),
            (r.tv * (n as f64).sqrt()).into(),
            r.cell_contribution.into(),
            r.outside_mass.into(),
            r.cells_evaluated.into(),
        ])?;
    }
    Ok(t)
}

fn moment_specs(d: usize) -> Vec<MomentSpec> {
    let mut v: Vec<MomentSpec> = (0..d).map(MomentSpec::Mean).collect();
    for i in 0..d {
        for j in i..d {
            v.push(MomentSpec::Cov(i, j));
        }
    }
    for i in 0..d {
        for j in i..d {
            for l in j..d {
                v.push(MomentSpec::Third(i, j, l));
            }
        }
    }
    v.extend((0..d).map(MomentSpec::Fourth));
    v.extend((0..d).map(MomentSpec::Sixth));
    for i in 0..d {
        for j in i + 1..d {
            v.push(MomentSpec::Mixed33(i, j));
        }
    }
    v
}

fn remainder_label(r: Remainder) -> &'static str {
    match r {
        Remainder::Exact => "exact",
        Remainder::LinearN => "O(N)",
        Remainder::QuadraticN => "O(N^2)",
    }
}

pub fn moments_table(s: &Settings) -> Result<Table, CliError> {
    let mut t = Table::new(["N", "moment", "closed_form", "oracle", "remainder"]);
    for &n in s.trials()?.values() {
        let m = s.model(n)?;
        let d = m.dim();
        for spec in moment_specs(d) {
            let c = closed_form_central_moment(&m, spec)?;
            let oracle = central_moment_exact(&m, &spec.exponents(d))
                .map_err(|e| CliError::from(e).context(&format!("N = {n}")))?;
            t.push(vec![
                n.into(),
                spec.label().into(),
                c.leading.into(),
                oracle.into(),
                remainder_label(c.remainder).into(),
            ])?;
        }
    }
    Ok(t)
}

pub fn bernstein_constants_table(s: &Settings) -> Result<Table, CliError> {
    let mut t = Table::new(["N", "constant", "finite_n", "limit", "relative_gap"]);
    for &n in s.trials()?.values() {
        let m = s.model(n)?;
        let ctx = format!("N = {n}");
        let mut pairs: Vec<(String, LimitPair)> = vec![
            (
                "sum_sq".into(),
                limit_constant_sum_sq(&m).map_err(|e| CliError::from(e).context(&ctx))?,
            ),
            (
                "sum_cube".into(),
                limit_constant_sum_cube(&m).map_err(|e| CliError::from(e).context(&ctx))?,
            ),
        ];
        for i in 0..m.dim() {
            pairs.push((
                format!("min_cross_{}", i + 1),
                limit_constant_min_cross(&m, i)?,
            ));
        }
        for (name, pair) in pairs {
            t.push(vec![
                n.into(),
                name.into(),
                pair.finite_n.into(),
                pair.limit.into(),
                pair.relative_gap().into(),
            ])?;
        }
    }
    Ok(t)
}

pub fn divergence_table(s: &Settings, counts: &str, lambdas: &str) -> Result<Table, CliError> {
    let k = parse_count_list(counts, "--counts")?;
    let total: u64 = k.iter().sum();
    if let Some(Trials::Single(n)) = &s.trials {
        if *n != total {
            return Err(CliError::Args(format!(
                "counts sum to {total}, not --N {n}"
            )));
        }
    }
    let m = s.model(total)?;
    let mut t = Table::new(["N", "lambda", "statistic"]);
    for lambda in parse_float_list(lambdas, "--lambda")? {
        let v = power_divergence(&m, &k, lambda)?;
        t.push(vec![total.into(), lambda.into(), v.into()])
            .map_err(|e| e.context(&format!("lambda = {lambda}")))?;
    }
    Ok(t)
}

pub fn error_table(s: &Settings) -> Result<Table, CliError> {
    let ns = match s.trials()? {
        Trials::Sweep(v) if v.len() >= MIN_SWEEP_LEN => v.clone(),
        Trials::Sweep(v) => {
            return Err(CliError::Args(format!(
                "error-table needs a sweep of at least {MIN_SWEEP_LEN} values, got {}",
                v.len()
            )))
        }
        Trials::Single(_) => return Err(CliError::Args("error-table needs --N-sweep".into())),
    };
    let mut t = Table::new([
        "N",
        "points",
        "max_err_0",
        "max_err_half",
        "max_err_one",
        "remainder_constant",
    ]);
    let mut maxima: [Vec<f64>; 3] = Default::default();
    for &n in &ns {
        let m = s.model(n)?;
        let summary = max_bulk_ratio_error(&m, s.eta)
            .map_err(|e| CliError::from(e).context(&format!("N = {n}")))?;
        for (acc, v) in maxima.iter_mut().zip(summary.max_abs) {
            acc.push(v);
        }
        t.push(vec![
            n.into(),
            summary.points.into(),
            summary.max_abs[0].into(),
            summary.max_abs[1].into(),
            summary.max_abs[2].into(),
            summary.remainder_constant.into(),
        ])?;
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut slope_row: Vec<Cell> = vec!["slope".into(), Cell::Text(String::new())];
    for (o, ys) in Order::ALL.iter().zip(&maxima) {
        let slope = loglog_slope(&xs, ys)
            .map_err(|e| CliError::Numeric(format!("slope for order {}: {e}", o.label())))?;
        slope_row.push(slope.into());
    }
    slope_row.push(Cell::Text(String::new()));
    t.push(slope_row)?;
    Ok(t)
}
