//! The coefficient-function language.
//!
//! Every smooth scalar appearing in a chart description — metric entries,
//! connection coefficients, lift coefficients, section components, form
//! coefficients — is written as a small arithmetic expression over named
//! variables. This module parses that language, pretty-prints it, and
//! evaluates it over plain floats or dual numbers for exact forward-mode
//! first and second derivatives.

mod dual;
mod eval;
mod parse;

pub use dual::{Dual, Dual2, Scalar, MAX_SEEDS};
pub use eval::CompiledExpr;

use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    SyntaxError {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound variable `{name}`")]
    UnboundVariable { name: String },
    #[error("domain error: {op} of {value}")]
    DomainError { op: &'static str, value: f64 },
}

/// Builtin functions of the closed grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Atan2,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan2 => "atan2",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "atan2" => Func::Atan2,
            _ => return None,
        })
    }
}

/// Abstract syntax tree of a coefficient expression.
///
/// Integer-literal exponents are folded into [`ScalarExpr::PowInt`] at parse
/// time and evaluated by repeated multiplication, so they stay defined for
/// negative bases; [`ScalarExpr::Pow`] is the real-exponent form and
/// requires a positive base.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Num(f64),
    Pi,
    Var(String),
    Neg(Box<ScalarExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    PowInt(Box<ScalarExpr>, i32),
    Pow(Box<ScalarExpr>, Box<ScalarExpr>),
    Call(Func, Vec<ScalarExpr>),
}

impl ScalarExpr {
    pub fn num(v: f64) -> Self {
        ScalarExpr::Num(v)
    }

    pub fn var(name: &str) -> Self {
        ScalarExpr::Var(name.to_string())
    }

    /// The set of variable names the expression reads.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            ScalarExpr::Num(_) | ScalarExpr::Pi => {}
            ScalarExpr::Var(name) => {
                out.insert(name.clone());
            }
            ScalarExpr::Neg(a) => a.collect_variables(out),
            ScalarExpr::Add(a, b)
            | ScalarExpr::Sub(a, b)
            | ScalarExpr::Mul(a, b)
            | ScalarExpr::Div(a, b)
            | ScalarExpr::Pow(a, b) => {
                a.collect_variables(out);
                b.collect_variables(out);
            }
            ScalarExpr::PowInt(a, _) => a.collect_variables(out),
            ScalarExpr::Call(_, args) => {
                for a in args {
                    a.collect_variables(out);
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ScalarExpr::Add(..) | ScalarExpr::Sub(..) => 1,
            ScalarExpr::Mul(..) | ScalarExpr::Div(..) => 2,
            ScalarExpr::Neg(..) => 3,
            ScalarExpr::PowInt(..) | ScalarExpr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut std::fmt::Formatter<'_>, ctx: u8) -> std::fmt::Result {
        let me = self.precedence();
        if me < ctx {
            write!(f, "(")?;
        }
        match self {
            ScalarExpr::Num(v) => write!(f, "{v}")?,
            ScalarExpr::Pi => write!(f, "pi")?,
            ScalarExpr::Var(name) => write!(f, "{name}")?,
            ScalarExpr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 3)?;
            }
            ScalarExpr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)?;
            }
            ScalarExpr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)?;
            }
            ScalarExpr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)?;
            }
            ScalarExpr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)?;
            }
            ScalarExpr::PowInt(a, k) => {
                a.fmt_prec(f, 5)?;
                write!(f, "^{k}")?;
            }
            ScalarExpr::Pow(a, b) => {
                a.fmt_prec(f, 5)?;
                write!(f, "^")?;
                b.fmt_prec(f, 3)?;
            }
            ScalarExpr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    a.fmt_prec(f, 0)?;
                }
                write!(f, ")")?;
            }
        }
        if me < ctx {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::fmt::Display for ScalarExpr {
    /// Prints with the minimal parentheses that re-parse to a structurally
    /// identical tree.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Parse an expression string into its AST.
pub fn parse(text: &str) -> Result<ScalarExpr, ExprError> {
    parse::parse(text)
}

/// Evaluate at a named binding. All free variables must be bound.
pub fn eval(expr: &ScalarExpr, bindings: &HashMap<String, f64>) -> Result<f64, ExprError> {
    let (compiled, values) = bind(expr, bindings)?;
    compiled.eval(&values)
}

/// First partials with respect to the ordered variable list `wrt`.
/// Variables in `wrt` must be bound; extra bound variables are held fixed.
pub fn gradient(
    expr: &ScalarExpr,
    bindings: &HashMap<String, f64>,
    wrt: &[&str],
) -> Result<Vec<f64>, ExprError> {
    let (compiled, values, positions) = bind_wrt(expr, bindings, wrt)?;
    let mut out = vec![0.0; wrt.len()];
    // Differentiate MAX_SEEDS variables per pass.
    for (chunk_idx, chunk) in positions.chunks(MAX_SEEDS).enumerate() {
        let mut args: Vec<Dual> = values.iter().map(|&v| Dual::constant(v)).collect();
        for (lane, &pos) in chunk.iter().enumerate() {
            args[pos] = Dual::seeded(values[pos], lane);
        }
        let r = compiled.eval(&args)?;
        for lane in 0..chunk.len() {
            out[chunk_idx * MAX_SEEDS + lane] = r.d[lane];
        }
    }
    Ok(out)
}

/// Full symmetric Hessian over the ordered variable list `wrt`, one
/// second-order dual evaluation per unordered pair. The returned matrix is
/// symmetric bit-for-bit.
pub fn hessian(
    expr: &ScalarExpr,
    bindings: &HashMap<String, f64>,
    wrt: &[&str],
) -> Result<Vec<Vec<f64>>, ExprError> {
    let (compiled, values, positions) = bind_wrt(expr, bindings, wrt)?;
    let n = wrt.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut args: Vec<Dual2> = values.iter().map(|&v| Dual2::constant(v)).collect();
            if positions[i] == positions[j] {
                args[positions[i]] = Dual2::seeded(values[positions[i]], true, true);
            } else {
                args[positions[i]] = Dual2::seeded(values[positions[i]], true, false);
                args[positions[j]] = Dual2::seeded(values[positions[j]], false, true);
            }
            let r = compiled.eval(&args)?;
            out[i][j] = r.dij;
            out[j][i] = r.dij;
        }
    }
    Ok(out)
}

fn bind(
    expr: &ScalarExpr,
    bindings: &HashMap<String, f64>,
) -> Result<(CompiledExpr, Vec<f64>), ExprError> {
    let names: Vec<String> = expr.variables().into_iter().collect();
    let mut values = Vec::with_capacity(names.len());
    for name in &names {
        match bindings.get(name) {
            Some(&v) => values.push(v),
            None => {
                return Err(ExprError::UnboundVariable { name: name.clone() });
            }
        }
    }
    let compiled = CompiledExpr::compile(expr, &names)?;
    Ok((compiled, values))
}

fn bind_wrt(
    expr: &ScalarExpr,
    bindings: &HashMap<String, f64>,
    wrt: &[&str],
) -> Result<(CompiledExpr, Vec<f64>, Vec<usize>), ExprError> {
    // The compiled variable list is the union of the expression's free
    // variables and `wrt` (a seed variable need not occur in the body).
    let mut names: BTreeSet<String> = expr.variables();
    for w in wrt {
        names.insert((*w).to_string());
    }
    let names: Vec<String> = names.into_iter().collect();
    let mut values = Vec::with_capacity(names.len());
    for name in &names {
        match bindings.get(name) {
            Some(&v) => values.push(v),
            None => {
                return Err(ExprError::UnboundVariable { name: name.clone() });
            }
        }
    }
    let positions = wrt
        .iter()
        .map(|w| names.iter().position(|n| n == w).expect("inserted above"))
        .collect();
    let compiled = CompiledExpr::compile(expr, &names)?;
    Ok((compiled, values, positions))
}
