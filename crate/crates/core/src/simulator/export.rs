use std::io::{self, Write};

use super::{RegretReport, SimulationTrace};

fn columns(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (0..count).map(move |i| format!("{prefix}{i}"))
}

/// `t,x0..,r0..,e0..,u0..,v0..,c,cum_regret`.
pub fn trace_csv_header(n: usize, m: usize, with_bias: bool) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend(columns("x", n));
    cols.extend(columns("r", n));
    cols.extend(columns("e", n));
    cols.extend(columns("u", m));
    if with_bias {
        cols.extend(columns("v", m));
    }
    cols.push("c".into());
    cols.push("cum_regret".into());
    cols.join(",")
}

/// One row per `t = 0..T`; input, bias and cost cells are empty on row `T`.
pub fn write_trace_csv<W: Write>(
    out: &mut W,
    trace: &SimulationTrace,
    report: Option<&RegretReport>,
) -> io::Result<()> {
    let n = trace.errors[0].len();
    let m = trace.inputs.first().map_or(0, |u| u.len());
    let with_bias = !trace.biases.is_empty();
    writeln!(out, "{}", trace_csv_header(n, m, with_bias))?;
    let horizon = trace.horizon();
    for t in 0..=horizon {
        let mut cells = vec![t.to_string()];
        for v in [&trace.states[t], &trace.references[t], &trace.errors[t]] {
            cells.extend(v.iter().map(|x| x.to_string()));
        }
        let live = t < horizon;
        let blank = |k: usize| std::iter::repeat_n(String::new(), k);
        if live {
            cells.extend(trace.inputs[t].iter().map(|x| x.to_string()));
        } else {
            cells.extend(blank(m));
        }
        if with_bias {
            if live {
                cells.extend(trace.biases[t].iter().map(|x| x.to_string()));
            } else {
                cells.extend(blank(m));
            }
        }
        cells.push(if live {
            trace.costs[t].to_string()
        } else {
            String::new()
        });
        let cum = report.and_then(|r| {
            if live {
                r.cumulative.get(t).copied()
            } else {
                Some(r.regret)
            }
        });
        cells.push(cum.map_or_else(String::new, |x| x.to_string()));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
