//! Merges flags, the optional config file and defaults into a validated run configuration.

use std::path::Path;

use mllt_core::llt::Order;
use mllt_core::ModelParams;
use toml::{Table, Value};

use crate::args::CommonArgs;
use crate::error::CliError;
use crate::output::Format;

pub const DEFAULT_ETA: f64 = 0.5;
pub const DEFAULT_NODES: usize = mllt_core::quadrature::DEFAULT_NODES;
pub const THREADS_ENV: &str = "MLLT_THREADS";

const CONFIG_KEYS: [&str; 9] = [
    "p", "N", "N-sweep", "eta", "order", "nodes", "format", "out", "threads",
];

/// Trial counts requested on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trials {
    Single(u64),
    Sweep(Vec<u64>),
}

impl Trials {
    pub fn values(&self) -> &[u64] {
        match self {
            Trials::Single(n) => std::slice::from_ref(n),
            Trials::Sweep(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub p: Option<Vec<f64>>,
    pub trials: Option<Trials>,
    pub eta: f64,
    pub order: Order,
    pub nodes: usize,
    pub format: Option<Format>,
    pub out: Option<String>,
    pub threads: Option<usize>,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => load_config(path)?,
            None => Table::new(),
        };
        let from_file = |key: &str| file.get(key);

        let p = match (&args.p, from_file("p")) {
            (Some(s), _) => Some(parse_float_list(s, "--p")?),
            (None, Some(v)) => Some(config_float_list(v, "p")?),
            (None, None) => None,
        };

        let trials = if args.n.is_some() || args.n_sweep.is_some() {
            trials_from(args.n, args.n_sweep.as_deref())?
        } else {
            let n = from_file("N").map(|v| config_u64(v, "N")).transpose()?;
            let sweep = from_file("N-sweep")
                .map(|v| config_str(v, "N-sweep"))
                .transpose()?;
            if n.is_some() && sweep.is_some() {
                return Err(CliError::Args("config sets both N and N-sweep".into()));
            }
            trials_from(n, sweep)?
        };

        let eta = match (args.eta, from_file("eta")) {
            (Some(e), _) => e,
            (None, Some(v)) => config_f64(v, "eta")?,
            (None, None) => DEFAULT_ETA,
        };
        if !(eta > 0.0 && eta < 1.0) {
            return Err(CliError::Args(format!("eta = {eta} is not in (0, 1)")));
        }

        let order = match (&args.order, from_file("order")) {
            (Some(s), _) => parse_order(s)?,
            (None, Some(Value::Integer(i))) => parse_order(&i.to_string())?,
            (None, Some(v)) => parse_order(config_str(v, "order")?)?,
            (None, None) => Order::One,
        };

        let nodes = match (args.nodes, from_file("nodes")) {
            (Some(n), _) => n,
            (None, Some(v)) => config_u64(v, "nodes")? as usize,
            (None, None) => DEFAULT_NODES,
        };
        if nodes == 0 {
            return Err(CliError::Args("nodes must be positive".into()));
        }

        let format = match (&args.format, from_file("format")) {
            (Some(s), _) => Some(s.parse().map_err(CliError::Args)?),
            (None, Some(v)) => Some(config_str(v, "format")?.parse().map_err(CliError::Args)?),
            (None, None) => None,
        };

        let out = match (&args.out, from_file("out")) {
            (Some(s), _) => Some(s.clone()),
            (None, Some(v)) => Some(config_str(v, "out")?.to_string()),
            (None, None) => None,
        };

        let threads = match (args.threads, from_file("threads")) {
            (Some(t), _) => Some(t),
            (None, Some(v)) => Some(config_u64(v, "threads")? as usize),
            (None, None) => match std::env::var(THREADS_ENV) {
                Ok(s) => Some(s.trim().parse().map_err(|_| {
                    CliError::Args(format!("{THREADS_ENV}=`{s}` is not an integer"))
                })?),
                Err(_) => None,
            },
        };
        if threads == Some(0) {
            return Err(CliError::Args("threads must be positive".into()));
        }

        Ok(Self {
            p,
            trials,
            eta,
            order,
            nodes,
            format,
            out,
            threads,
        })
    }

    pub fn probabilities(&self) -> Result<&[f64], CliError> {
        self.p
            .as_deref()
            .ok_or_else(|| CliError::Args("missing --p".into()))
    }

    pub fn trials(&self) -> Result<&Trials, CliError> {
        self.trials
            .as_ref()
            .ok_or_else(|| CliError::Args("missing --N or --N-sweep".into()))
    }

    /// The single `N` of a command that does not sweep.
    pub fn single_n(&self) -> Result<u64, CliError> {
        match self.trials()? {
            Trials::Single(n) => Ok(*n),
            Trials::Sweep(_) => Err(CliError::Args(
                "this command takes --N, not --N-sweep".into(),
            )),
        }
    }

    pub fn model(&self, n: u64) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.probabilities()?.to_vec(), n)?)
    }
}

fn load_config(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Args(format!("cannot read config {}: {e}", path.display())))?;
    let table: Table = text
        .parse()
        .map_err(|e| CliError::Args(format!("config {}: {e}", path.display())))?;
    if let Some(key) = table.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(CliError::Args(format!("unknown config key `{key}`")));
    }
    Ok(table)
}

fn config_str<'a>(v: &'a Value, key: &str) -> Result<&'a str, CliError> {
    v.as_str()
        .ok_or_else(|| CliError::Args(format!("config key `{key}` must be a string")))
}

fn config_u64(v: &Value, key: &str) -> Result<u64, CliError> {
    v.as_integer()
        .and_then(|i| u64::try_from(i).ok())
        .ok_or_else(|| CliError::Args(format!("config key `{key}` must be a non-negative integer")))
}

fn config_f64(v: &Value, key: &str) -> Result<f64, CliError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(CliError::Args(format!(
            "config key `{key}` must be a number"
        ))),
    }
}

fn config_float_list(v: &Value, key: &str) -> Result<Vec<f64>, CliError> {
    match v {
        Value::String(s) => parse_float_list(s, key),
        Value::Array(items) => items.iter().map(|x| config_f64(x, key)).collect(),
        other => Ok(vec![config_f64(other, key)?]),
    }
}

fn trials_from(n: Option<u64>, sweep: Option<&str>) -> Result<Option<Trials>, CliError> {
    match (n, sweep) {
        (Some(_), Some(_)) => Err(CliError::Args(
            "--N and --N-sweep are mutually exclusive".into(),
        )),
        (Some(n), None) => Ok(Some(Trials::Single(n))),
        (None, Some(s)) => Ok(Some(Trials::Sweep(parse_sweep(s)?))),
        (None, None) => Ok(None),
    }
}

pub fn parse_order(s: &str) -> Result<Order, CliError> {
    s.parse()
        .map_err(|_| CliError::Args(format!("unknown order `{s}` (expected 0, half or one)")))
}

pub fn parse_float_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Args(format!("{what}: `{t}` is not a number")))
        })
        .collect()
}

pub fn parse_count_list(s: &str, what: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Args(format!("{what}: `{t}` is not a non-negative integer")))
        })
        .collect()
}

/// Expands `start:end:xF` or `start:end:+K`.
pub fn parse_sweep(spec: &str) -> Result<Vec<u64>, CliError> {
    let bad = |why: &str| CliError::Args(format!("bad sweep `{spec}`: {why}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, step] = parts.as_slice() else {
        return Err(bad("expected start:end:xF or start:end:+K"));
    };
    let start: u64 = start
        .trim()
        .parse()
        .map_err(|_| bad("start is not an integer"))?;
    let end: u64 = end
        .trim()
        .parse()
        .map_err(|_| bad("end is not an integer"))?;
    if start == 0 || end < start {
        return Err(bad("need 1 <= start <= end"));
    }
    let step = step.trim();
    let next: Box<dyn Fn(u64) -> Option<u64>> = if let Some(f) = step.strip_prefix('x') {
        let f: u64 = f.parse().map_err(|_| bad("factor is not an integer"))?;
        if f < 2 {
            return Err(bad("factor must be at least 2"));
        }
        Box::new(move |n| n.checked_mul(f))
    } else if let Some(k) = step.strip_prefix('+') {
        let k: u64 = k.parse().map_err(|_| bad("increment is not an integer"))?;
        if k == 0 {
            return Err(bad("increment must be positive"));
        }
        Box::new(move |n| n.checked_add(k))
    } else {
        return Err(bad("step must start with `x` or `+`"));
    };
    let mut out = vec![start];
    while let Some(n) = next(*out.last().expect("non-empty")) {
        if n > end {
            break;
        }
        out.push(n);
    }
    Ok(out)
}
