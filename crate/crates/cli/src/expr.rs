//! Closed-form fields from expression strings.
//!
//! Coordinates are `x, y, z` or `x0, x1, x2`; profiles use `t` and size rules use `d`.

use std::sync::Arc;

use exmex::prelude::*;
use exmex::FlatEx;

use crate::error::CliError;

/// Parsed expression with its variables resolved to argument slots.
#[derive(Clone)]
pub struct Expr {
    text: String,
    ex: Arc<FlatEx<f64>>,
    slots: Vec<usize>,
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({})", self.text)
    }
}

fn coordinate(name: &str) -> Option<usize> {
    match name {
        "x" | "x0" => Some(0),
        "y" | "x1" => Some(1),
        "z" | "x2" => Some(2),
        _ => None,
    }
}

impl Expr {
    /// Expression in the coordinates of `R^dim`.
    pub fn spatial(text: &str, dim: usize, field: &str) -> Result<Self, CliError> {
        Self::parse(text, field, |v| coordinate(v).filter(|&k| k < dim))
    }

    /// Expression in one named scalar variable.
    pub fn univariate(text: &str, var: &str, field: &str) -> Result<Self, CliError> {
        Self::parse(text, field, |v| (v == var).then_some(0))
    }

    fn parse(text: &str, field: &str, slot: impl Fn(&str) -> Option<usize>) -> Result<Self, CliError> {
        let ex = exmex::parse::<f64>(text).map_err(|e| CliError::Config(format!("{field}: cannot parse '{text}': {e}")))?;
        let slots = ex
            .var_names()
            .iter()
            .map(|v| slot(v).ok_or_else(|| CliError::Config(format!("{field}: unknown variable '{v}' in '{text}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { text: text.to_string(), ex: Arc::new(ex), slots })
    }

    /// Evaluates at `args`; parse-time checks guarantee every slot exists.
    pub fn eval(&self, args: &[f64]) -> f64 {
        let mut vals = [0.0; 3];
        for (i, &s) in self.slots.iter().enumerate() {
            vals[i] = args[s];
        }
        self.ex.eval(&vals[..self.slots.len()]).unwrap_or(f64::NAN)
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_map_to_slots() {
        let e = Expr::spatial("z + 10*x", 3, "v").unwrap();
        assert_eq!(e.eval(&[1.0, 5.0, 2.0]), 12.0);
        let e = Expr::spatial("x1^2", 2, "v").unwrap();
        assert_eq!(e.eval(&[3.0, 4.0]), 16.0);
    }

    #[test]
    fn literals_are_floats() {
        assert_eq!(Expr::spatial("1/2", 2, "v").unwrap().eval(&[0.0, 0.0]), 0.5);
    }

    #[test]
    fn rejects_out_of_range_and_unknown_names() {
        assert!(Expr::spatial("z", 2, "v").is_err());
        assert!(Expr::spatial("q + 1", 3, "v").is_err());
        assert!(Expr::spatial("x +* 1", 3, "v").is_err());
        assert!(Expr::univariate("x", "t", "f").is_err());
    }
}
