//! Minimal external-evaluator demo child: answers each request line with the
//! sum of its coordinates. Test knobs:
//!   sum_child nan-after <k>   answer "nan" from the k-th request on
//!   sum_child exit-after <k>  exit silently after k answers

use std::io::{BufRead, Write};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = args.first().map(String::as_str).unwrap_or("sum");
    let threshold: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(usize::MAX);

    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut served = 0usize;
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break,
        };
        if line.trim().is_empty() {
            continue;
        }
        served += 1;
        match mode {
            "nan-after" if served >= threshold => {
                writeln!(out, "nan").unwrap();
            }
            "exit-after" if served > threshold => {
                return;
            }
            _ => {
                let sum: f64 = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().unwrap_or(f64::NAN))
                    .sum();
                writeln!(out, "{sum:.17e}").unwrap();
            }
        }
        out.flush().unwrap();
    }
}
