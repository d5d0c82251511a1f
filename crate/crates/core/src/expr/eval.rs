//! Slot-compiled evaluation.
//!
//! A [`CompiledExpr`] has every variable resolved to an index into a flat
//! argument slice, so hot loops (quadrature over sample points, path
//! simulation) evaluate without any name lookups or allocation. Evaluation
//! is generic over the scalar type: the same compiled tree produces values,
//! gradients, or second-order jets depending on what is passed in.

use super::dual::Scalar;
use super::{ExprError, Func, ScalarExpr};

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    PowInt(Box<Node>, i32),
    Pow(Box<Node>, Box<Node>),
    Call1(Func, Box<Node>),
    Call2(Func, Box<Node>, Box<Node>),
}

/// An expression with variables bound to argument slots.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Node,
    arity: usize,
}

impl CompiledExpr {
    /// Resolve every variable of `expr` against the ordered name list.
    pub fn compile(expr: &ScalarExpr, names: &[String]) -> Result<CompiledExpr, ExprError> {
        let root = lower(expr, names)?;
        Ok(CompiledExpr {
            root,
            arity: names.len(),
        })
    }

    /// Number of argument slots (the length `eval` expects).
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval<T: Scalar>(&self, args: &[T]) -> Result<T, ExprError> {
        debug_assert!(args.len() >= self.arity);
        eval_node(&self.root, args)
    }
}

fn lower(expr: &ScalarExpr, names: &[String]) -> Result<Node, ExprError> {
    Ok(match expr {
        ScalarExpr::Num(v) => Node::Num(*v),
        ScalarExpr::Pi => Node::Num(std::f64::consts::PI),
        ScalarExpr::Var(name) => match names.iter().position(|n| n == name) {
            Some(slot) => Node::Var(slot),
            None => {
                return Err(ExprError::UnboundVariable { name: name.clone() });
            }
        },
        ScalarExpr::Neg(a) => Node::Neg(Box::new(lower(a, names)?)),
        ScalarExpr::Add(a, b) => Node::Add(Box::new(lower(a, names)?), Box::new(lower(b, names)?)),
        ScalarExpr::Sub(a, b) => Node::Sub(Box::new(lower(a, names)?), Box::new(lower(b, names)?)),
        ScalarExpr::Mul(a, b) => Node::Mul(Box::new(lower(a, names)?), Box::new(lower(b, names)?)),
        ScalarExpr::Div(a, b) => Node::Div(Box::new(lower(a, names)?), Box::new(lower(b, names)?)),
        ScalarExpr::PowInt(a, k) => Node::PowInt(Box::new(lower(a, names)?), *k),
        ScalarExpr::Pow(a, b) => Node::Pow(Box::new(lower(a, names)?), Box::new(lower(b, names)?)),
        ScalarExpr::Call(func, args) => match args.len() {
            1 => Node::Call1(*func, Box::new(lower(&args[0], names)?)),
            2 => Node::Call2(
                *func,
                Box::new(lower(&args[0], names)?),
                Box::new(lower(&args[1], names)?),
            ),
            n => unreachable!("parser enforces arity, got {n}"),
        },
    })
}

fn eval_node<T: Scalar>(node: &Node, args: &[T]) -> Result<T, ExprError> {
    Ok(match node {
        Node::Num(v) => T::from_f64(*v),
        Node::Var(slot) => args[*slot],
        Node::Neg(a) => eval_node(a, args)?.neg(),
        Node::Add(a, b) => eval_node(a, args)?.add(eval_node(b, args)?),
        Node::Sub(a, b) => eval_node(a, args)?.sub(eval_node(b, args)?),
        Node::Mul(a, b) => eval_node(a, args)?.mul(eval_node(b, args)?),
        Node::Div(a, b) => eval_node(a, args)?.div(eval_node(b, args)?)?,
        Node::PowInt(a, k) => eval_node(a, args)?.powi(*k)?,
        Node::Pow(a, b) => eval_node(a, args)?.powf(eval_node(b, args)?)?,
        Node::Call1(func, a) => {
            let x = eval_node(a, args)?;
            match func {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Exp => x.exp(),
                Func::Log => x.ln()?,
                Func::Sqrt => x.sqrt()?,
                Func::Atan2 => unreachable!("binary"),
            }
        }
        Node::Call2(func, a, b) => {
            let y = eval_node(a, args)?;
            let x = eval_node(b, args)?;
            match func {
                Func::Atan2 => y.atan2(x)?,
                _ => unreachable!("unary"),
            }
        }
    })
}
