//! Row filters: conjunctions of single-column comparisons such as
//! `age<30&income>=2.5`.

use std::fmt;

use xshap_core::DataTable;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Op {
    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Op::Lt => a < b,
            Op::Le => a <= b,
            Op::Eq => a == b,
            Op::Ge => a >= b,
            Op::Gt => a > b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Eq => "==",
            Op::Ge => ">=",
            Op::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub column: String,
    pub op: Op,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub clauses: Vec<Clause>,
}

impl Filter {
    pub fn parse(text: &str) -> Result<Self> {
        let clauses = text
            .split('&')
            .map(|part| parse_clause(part.trim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { clauses })
    }

    /// Positions of the rows of `table` satisfying every clause.
    pub fn select(&self, table: &DataTable) -> Result<Vec<usize>> {
        let cols = self
            .clauses
            .iter()
            .map(|c| {
                table
                    .column_index(&c.column)
                    .ok_or_else(|| CliError::Config(format!("filter column {:?} is not a feature", c.column)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((0..table.n_rows())
            .filter(|&i| {
                self.clauses
                    .iter()
                    .zip(&cols)
                    .all(|(c, &j)| c.op.holds(table.get(i, j), c.value))
            })
            .collect())
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.clauses.iter().enumerate() {
            if k > 0 {
                f.write_str("&")?;
            }
            write!(f, "{}{}{}", c.column, c.op.symbol(), c.value)?;
        }
        Ok(())
    }
}

fn parse_clause(text: &str) -> Result<Clause> {
    // two-character operators first so "<=" is not read as "<"
    const OPS: [(&str, Op); 5] = [("<=", Op::Le), (">=", Op::Ge), ("==", Op::Eq), ("<", Op::Lt), (">", Op::Gt)];
    let bad = || CliError::Config(format!("cannot parse filter clause {text:?}"));
    let (at, sym, op) = OPS
        .iter()
        .filter_map(|&(sym, op)| text.find(sym).map(|at| (at, sym, op)))
        .min_by_key(|&(at, sym, _)| (at, std::cmp::Reverse(sym.len())))
        .ok_or_else(bad)?;
    let column = text[..at].trim();
    let value = text[at + sym.len()..].trim().parse::<f64>().map_err(|_| bad())?;
    if column.is_empty() {
        return Err(bad());
    }
    Ok(Clause {
        column: column.to_owned(),
        op,
        value,
    })
}
