//! Tab-separated estimate records: `name<TAB>i,j,...<TAB>value`.
//!
//! | name | indices |
//! |---|---|
//! | `theta` | user, topic |
//! | `phi_global` | topic, word |
//! | `phi_local` | network, topic, word |
//! | `phi_background` | word |
//! | `rho` | user, topic, network |
//! | `sigma_switch` | network, topic, switch (0 global, 1 local) |
//! | `sigma_background` | 0 non-background, 1 background |
//!
//! Values are printed with the shortest representation that parses back to
//! the same `f64`. Other names (such as the generator's `rho_used`) are
//! carried as extra scalar records with empty indices.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use msnt_core::model::Dims;
use msnt_core::PosteriorEstimates;

use crate::error::{Error, Result};

fn push_table(out: &mut String, name: &str, values: &[f64], shape: &[usize]) {
    let mut idx = vec![0usize; shape.len()];
    for v in values {
        let joined: Vec<String> = idx.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{name}\t{}\t{v}", joined.join(","));
        for d in (0..shape.len()).rev() {
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

pub fn estimates_to_tsv(est: &PosteriorEstimates, extras: &BTreeMap<String, f64>) -> String {
    let d = est.dims;
    let mut out = String::new();
    for (k, v) in extras {
        let _ = writeln!(out, "{k}\t\t{v}");
    }
    push_table(&mut out, "theta", &est.theta, &[d.users, d.topics]);
    push_table(
        &mut out,
        "phi_global",
        &est.phi_global,
        &[d.topics, d.vocab],
    );
    push_table(
        &mut out,
        "phi_local",
        &est.phi_local,
        &[d.networks, d.topics, d.vocab],
    );
    push_table(&mut out, "phi_background", &est.phi_background, &[d.vocab]);
    push_table(&mut out, "rho", &est.rho, &[d.users, d.topics, d.networks]);
    push_table(
        &mut out,
        "sigma_switch",
        &est.sigma_switch,
        &[d.networks, d.topics, 2],
    );
    push_table(&mut out, "sigma_background", &est.sigma_background, &[2]);
    out
}

pub fn write_estimates(
    path: &Path,
    est: &PosteriorEstimates,
    extras: &BTreeMap<String, f64>,
) -> Result<()> {
    std::fs::write(path, estimates_to_tsv(est, extras)).map_err(|e| Error::io(path, e))
}

/// Parses an export; dimensions are inferred from the largest indices.
pub fn read_estimates(path: &Path) -> Result<(PosteriorEstimates, BTreeMap<String, f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut extras = BTreeMap::new();
    let mut rows: Vec<(usize, &str, Vec<usize>, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(name), Some(idx), Some(value), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::parse(path, n, "expected 3 tab-separated fields"));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| Error::parse(path, n, format!("bad value {value:?}")))?;
        if idx.is_empty() {
            extras.insert(name.to_string(), value);
            continue;
        }
        let idx = idx
            .split(',')
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::parse(path, n, format!("bad indices {idx:?}")))?;
        rows.push((n, name, idx, value));
    }

    let mut dims = Dims {
        users: 0,
        networks: 0,
        topics: 0,
        vocab: 0,
    };
    let arity = |name: &str| match name {
        "theta" | "phi_global" => Some(2),
        "phi_local" | "rho" | "sigma_switch" => Some(3),
        "phi_background" | "sigma_background" => Some(1),
        _ => None,
    };
    for (n, name, idx, _) in &rows {
        if arity(name) != Some(idx.len()) {
            return Err(Error::parse(
                path,
                *n,
                format!("unknown record {name}/{}", idx.len()),
            ));
        }
        let grow = |slot: &mut usize, i: usize| *slot = (*slot).max(i + 1);
        match *name {
            "theta" => {
                grow(&mut dims.users, idx[0]);
                grow(&mut dims.topics, idx[1]);
            }
            "phi_global" => {
                grow(&mut dims.topics, idx[0]);
                grow(&mut dims.vocab, idx[1]);
            }
            "phi_local" => {
                grow(&mut dims.networks, idx[0]);
                grow(&mut dims.topics, idx[1]);
                grow(&mut dims.vocab, idx[2]);
            }
            "phi_background" => grow(&mut dims.vocab, idx[0]),
            "rho" => {
                grow(&mut dims.users, idx[0]);
                grow(&mut dims.topics, idx[1]);
                grow(&mut dims.networks, idx[2]);
            }
            "sigma_switch" => {
                grow(&mut dims.networks, idx[0]);
                grow(&mut dims.topics, idx[1]);
            }
            _ => {}
        }
    }
    let d = dims;
    let mut est = PosteriorEstimates {
        dims,
        theta: vec![f64::NAN; d.users * d.topics],
        phi_global: vec![f64::NAN; d.topics * d.vocab],
        phi_local: vec![f64::NAN; d.networks * d.topics * d.vocab],
        phi_background: vec![f64::NAN; d.vocab],
        rho: vec![f64::NAN; d.users * d.topics * d.networks],
        sigma_switch: vec![f64::NAN; d.networks * d.topics * 2],
        sigma_background: [f64::NAN; 2],
    };
    for (n, name, idx, value) in rows {
        let (table, shape): (&mut [f64], [usize; 3]) = match name {
            "theta" => (&mut est.theta, [1, d.users, d.topics]),
            "phi_global" => (&mut est.phi_global, [1, d.topics, d.vocab]),
            "phi_local" => (&mut est.phi_local, [d.networks, d.topics, d.vocab]),
            "phi_background" => (&mut est.phi_background, [1, 1, d.vocab]),
            "rho" => (&mut est.rho, [d.users, d.topics, d.networks]),
            "sigma_switch" => (&mut est.sigma_switch, [d.networks, d.topics, 2]),
            _ => (&mut est.sigma_background, [1, 1, 2]),
        };
        let mut full = [0usize; 3];
        full[3 - idx.len()..].copy_from_slice(&idx);
        if full.iter().zip(shape).any(|(&i, s)| i >= s) {
            return Err(Error::parse(path, n, format!("{name} index out of range")));
        }
        table[(full[0] * shape[1] + full[1]) * shape[2] + full[2]] = value;
    }
    let all = [
        &est.theta[..],
        &est.phi_global,
        &est.phi_local,
        &est.phi_background,
        &est.rho,
        &est.sigma_switch,
        &est.sigma_background,
    ];
    if all.iter().any(|t| t.iter().any(|v| v.is_nan())) {
        return Err(Error::parse(path, 0, "estimate tables are incomplete"));
    }
    Ok((est, extras))
}
