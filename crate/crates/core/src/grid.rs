//! Sample grids from short text specifications:
//!
//! - `[0, 0.25, 0.5]`: explicit values for `n = 0, 1, 2, …`;
//! - `linspace(a, b, M)`: `M` equally spaced values from `a` to `b`, starting at `n = 0`;
//! - `expr(<expression in n>; n=k1..k2)`: `u_n` for every integer `k1 ≤ n ≤ k2` (`k1 ≤ 0 ≤ k2`).
//!
//! Numbers anywhere may be arithmetic expressions (`pi/12`, `acosh(2)`, `ln(1+sqrt(2))/4`).

use crate::cgc::SampleGrid;
use crate::error::{Error, Result};

fn number(text: &str) -> Result<f64> {
    let v = meval::eval_str(text.trim()).map_err(|e| Error::InvalidGrid(format!("cannot evaluate {text:?}: {e}")))?;
    if !v.is_finite() {
        return Err(Error::InvalidGrid(format!("{text:?} is not finite")));
    }
    Ok(v)
}

fn integer(text: &str) -> Result<i64> {
    text.trim()
        .parse()
        .map_err(|_| Error::InvalidGrid(format!("expected an integer, got {text:?}")))
}

fn call<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    text.strip_prefix(name)?.trim_start().strip_prefix('(')?.strip_suffix(')')
}

/// Parses a grid specification; the result is strictly monotonic.
pub fn parse_grid(text: &str) -> Result<SampleGrid> {
    let text = text.trim();
    if let Some(body) = text.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        let values = body
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(number)
            .collect::<Result<Vec<_>>>()?;
        return SampleGrid::from_start(values);
    }
    if let Some(body) = call(text, "linspace") {
        let parts: Vec<&str> = body.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidGrid("linspace takes (a, b, M)".into()));
        }
        let count = integer(parts[2])?;
        if count < 2 {
            return Err(Error::InvalidGrid("linspace needs M >= 2".into()));
        }
        return SampleGrid::linspace(number(parts[0])?, number(parts[1])?, count as usize);
    }
    if let Some(body) = call(text, "expr") {
        let (expr, range) = body
            .rsplit_once(';')
            .ok_or_else(|| Error::InvalidGrid("expr needs a range: expr(<expr>; n=k1..k2)".into()))?;
        let range = range.trim();
        let bounds = range
            .strip_prefix("n")
            .map(str::trim_start)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| Error::InvalidGrid(format!("bad range {range:?}")))?;
        let (lo, hi) = bounds
            .split_once("..")
            .ok_or_else(|| Error::InvalidGrid(format!("bad range {range:?}")))?;
        let (k1, k2) = (integer(lo)?, integer(hi)?);
        let parsed: meval::Expr = expr
            .trim()
            .parse()
            .map_err(|e| Error::InvalidGrid(format!("cannot parse {expr:?}: {e}")))?;
        let f = parsed
            .bind("n")
            .map_err(|e| Error::InvalidGrid(format!("cannot use {expr:?} as a function of n: {e}")))?;
        return SampleGrid::from_fn(k1, k2, f);
    }
    Err(Error::InvalidGrid(format!(
        "unrecognized grid {text:?}; use [..], linspace(a,b,M) or expr(..; n=k1..k2)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn explicit_list() {
        let g = parse_grid("[0, 0.26, pi/6]").unwrap();
        assert_eq!(g.values(), &[0.0, 0.26, PI / 6.0]);
        assert_eq!(g.zero_index(), 0);
    }

    #[test]
    fn linspace_form() {
        let g = parse_grid("linspace(0, pi/2, 7)").unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g.values()[6], PI / 2.0);
        assert!((g.values()[1] - PI / 12.0).abs() < 1e-15);
    }

    #[test]
    fn expression_form_with_negative_indices() {
        let g = parse_grid("expr(pi*n/12; n=-2..3)").unwrap();
        assert_eq!(g.first_index(), -2);
        assert_eq!(g.last_index(), 3);
        assert_eq!(g.at(0), Some(0.0));
        assert!((g.at(-2).unwrap() + PI / 6.0).abs() < 1e-15);
        let d = parse_grid("expr((1 - n/4)*acosh(2); n=0..4)").unwrap();
        assert!(d.is_decreasing());
        let q = parse_grid("expr(0.1*n^2; n=0..5)").unwrap();
        assert!((q.values()[5] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in [
            "[0, 1, 1]",
            "[0, 2, 1]",
            "[]",
            "linspace(0, 1, 1)",
            "linspace(0, 0, 3)",
            "expr(n; n=1..3)",
            "expr(sin(pi*n/2); n=0..4)",
            "expr(n)",
            "expr(m; n=0..2)",
            "grid(1,2)",
            "[0, nope]",
        ] {
            assert!(matches!(parse_grid(bad), Err(Error::InvalidGrid(_))), "{bad}");
        }
    }
}
