use std::fmt::Write as _;

use msnt_core::sampler::LogPoint;

pub const HEADER: &str = "iteration,train_perplexity,frac_global,frac_local,frac_background";

pub fn csv_line(p: &LogPoint) -> String {
    let [g, l, b] = p.switch_fractions;
    format!("{},{},{g},{l},{b}", p.iteration, p.train_perplexity)
}

pub fn to_csv(trace: &[LogPoint]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for p in trace {
        let _ = writeln!(out, "{}", csv_line(p));
    }
    out
}
