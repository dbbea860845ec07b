//! Trace CSV and summary serialization.
//!
//! Columns, in order: `t`; leader `x0_c{p}_o{m}`; then per quantity, for
//! every agent `a`, channel `c` and (where applicable) order `o`:
//! `x_`, `e_`, `rho_`, `eps_`, `r_`, `E_`, `u_`, `theta_`, `omega_`,
//! `margin_`; finally `V`, `disagreement`, `disagreement_bound`. Indices
//! start at 1.

use std::io::{self, Write};

use super::{SummaryReport, Trace};

/// Decimal with 15 significant digits, trailing zeros trimmed; scientific
/// notation outside `[1e-5, 1e15)`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.14e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Column names of a trace with the given shape.
pub fn trace_header(agents: usize, channels: usize, order: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for m in 1..=order {
        for p in 1..=channels {
            cols.push(format!("x0_c{p}_o{m}"));
        }
    }
    let per_order = |cols: &mut Vec<String>, prefix: &str| {
        for a in 1..=agents {
            for p in 1..=channels {
                for m in 1..=order {
                    cols.push(format!("{prefix}_a{a}_c{p}_o{m}"));
                }
            }
        }
    };
    let per_channel = |cols: &mut Vec<String>, prefix: &str| {
        for a in 1..=agents {
            for p in 1..=channels {
                cols.push(format!("{prefix}_a{a}_c{p}"));
            }
        }
    };
    per_order(&mut cols, "x");
    per_order(&mut cols, "e");
    per_channel(&mut cols, "rho");
    per_order(&mut cols, "eps");
    for prefix in ["r", "E", "u", "theta", "omega", "margin"] {
        per_channel(&mut cols, prefix);
    }
    cols.extend(["V", "disagreement", "disagreement_bound"].map(String::from));
    cols
}

pub fn write_trace_csv<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    let (n, p, order) = (trace.agents, trace.channels, trace.order);
    writeln!(out, "{}", trace_header(n, p, order).join(","))?;
    let mut row: Vec<f64> = Vec::new();
    for s in &trace.samples {
        row.clear();
        row.push(s.t);
        for m in 0..order {
            for ch in 0..p {
                row.push(s.leader[m * p + ch]);
            }
        }
        for states in [&s.x, &s.e] {
            for xi in states.iter() {
                for ch in 0..p {
                    for m in 0..order {
                        row.push(xi[m * p + ch]);
                    }
                }
            }
        }
        row.extend(s.rho.iter().flatten());
        row.extend(s.eps.iter().flatten().flatten());
        for q in [&s.r, &s.metric, &s.u, &s.theta, &s.omega, &s.margin] {
            row.extend(q.iter().flatten());
        }
        row.push(s.lyapunov.unwrap_or(f64::NAN));
        row.push(s.disagreement);
        row.push(s.disagreement_bound);
        let line: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn summary_toml(summary: &SummaryReport) -> String {
    toml::to_string(summary).expect("summary is representable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format_number(2.0 / 3.0), "0.666666666666667");
        assert_eq!(format_number(123456.789), "123456.789");
        assert_eq!(format_number(1e-7), "1e-07");
        assert_eq!(format_number(-1.5e20), "-1.5e+20");
        assert_eq!(format_number(1e15), "1e+15");
        assert_eq!(format_number(99999.99999999999), "100000");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn round_trip_precision() {
        for v in [std::f64::consts::PI, 1e-5 * std::f64::consts::E, -7.123456789012345e12] {
            let back: f64 = format_number(v).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-14);
        }
    }

    #[test]
    fn header_shape() {
        let h = trace_header(2, 1, 2);
        assert_eq!(h[..3], ["t", "x0_c1_o1", "x0_c1_o2"].map(String::from));
        assert_eq!(h.len(), 1 + 2 + 4 + 4 + 2 + 4 + 6 * 2 + 3);
        assert_eq!(h.last().unwrap(), "disagreement_bound");
    }
}
