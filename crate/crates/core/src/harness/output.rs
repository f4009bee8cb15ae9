//! CSV results, summary tables and gnuplot CDF blocks.

use std::collections::BTreeSet;
use std::io::Write;

use super::config::Metric;
use super::run::RunResult;
use crate::error::{Error, Result};

fn value_column(results: &[RunResult]) -> Result<&'static str> {
    let metrics: BTreeSet<&'static str> = results
        .iter()
        .map(|r| match r.metric() {
            Metric::Snr => "snr_linear",
            Metric::GroupingRate => "rate_bpcu",
        })
        .collect();
    match metrics.len() {
        0 => Err(Error::invalid("no results to write")),
        1 => Ok(metrics.into_iter().next().expect("one element")),
        _ => Err(Error::invalid("cannot mix SNR and rate scenarios in one result file")),
    }
}

/// One row per sample: `scenario,seed,trial,<value>`, preceded by `#`
/// comment lines carrying the config hash and the mean power split.
pub fn write_results<W: Write>(mut w: W, results: &[RunResult]) -> Result<()> {
    let column = value_column(results)?;
    for r in results {
        writeln!(
            w,
            "# scenario={} seed={} config_sha256={}",
            r.config.name, r.config.seed, r.config_hash
        )?;
        writeln!(
            w,
            "# power rho={} rho_p_mean={} rho_d_mean={} tau_p={} tau_c={}",
            r.power.rho, r.power.rho_p_mean, r.power.rho_d_mean, r.config.tau_p, r.config.tau_c
        )?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["scenario", "seed", "trial", column])?;
    for r in results {
        let seed = r.config.seed.to_string();
        for s in &r.series {
            for (i, v) in s.values.iter().enumerate() {
                csv.write_record([s.label.as_str(), seed.as_str(), &i.to_string(), &v.to_string()])?;
            }
        }
    }
    csv.flush()?;
    Ok(())
}

/// `scenario,epsilon,gamma_eps,rate_bpcu,ci_halfwidth,n_trials`.
pub fn write_summary<W: Write>(w: W, results: &[RunResult]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "scenario",
        "epsilon",
        "gamma_eps",
        "rate_bpcu",
        "ci_halfwidth",
        "n_trials",
    ])?;
    for r in results {
        for s in &r.series {
            let o = &s.outage;
            csv.write_record([
                s.label.clone(),
                o.epsilon.to_string(),
                o.gamma_eps.to_string(),
                o.rate.to_string(),
                o.ci_halfwidth.to_string(),
                o.n_trials.to_string(),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// Order-statistic indices used for a CDF table: evenly spaced plus
/// log-spaced towards the lower tail.
fn cdf_indices(n: usize, points: usize) -> Vec<usize> {
    let mut idx = BTreeSet::new();
    if n == 0 {
        return Vec::new();
    }
    let last = n - 1;
    for k in 0..=points {
        idx.insert(k * last / points.max(1));
        let p = (n as f64).powf(k as f64 / points as f64);
        idx.insert((p as usize).saturating_sub(1).min(last));
    }
    idx.into_iter().collect()
}

/// Gnuplot-readable empirical CDFs: one `# label` block of `value cdf`
/// lines per series, blocks separated by two blank lines.
pub fn write_cdf_table<W: Write>(mut w: W, results: &[RunResult], points: usize) -> Result<()> {
    let column = value_column(results)?;
    for r in results {
        for s in &r.series {
            let mut sorted = s.values.clone();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            writeln!(w, "# {}", s.label)?;
            writeln!(w, "# {column} cdf")?;
            for i in cdf_indices(n, points) {
                writeln!(w, "{} {}", sorted[i], (i + 1) as f64 / n as f64)?;
            }
            writeln!(w)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_cover_both_ends() {
        let idx = cdf_indices(100_000, 100);
        assert_eq!(idx[0], 0);
        assert_eq!(*idx.last().unwrap(), 99_999);
        assert!(idx.iter().filter(|&&i| i < 100).count() > 10);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }
}
