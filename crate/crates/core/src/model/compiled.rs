use super::expr::{BinaryOp, Expr, UnaryOp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const(f64),
    Load(usize),
    Unary(UnaryOp),
    Binary(BinaryOp),
}

/// An expression flattened to postfix form over numbered variable slots.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    code: Vec<Instr>,
    depth: usize,
    source: Expr,
    slots: Vec<String>,
}

const INLINE_STACK: usize = 32;

impl CompiledExpr {
    /// `slots[i]` names the variable read from `env[i]` at evaluation time.
    pub fn new(expr: &Expr, slots: &[String]) -> Result<Self> {
        let mut code = Vec::new();
        let mut depth = 0;
        let mut max_depth = 0;
        emit(expr, slots, &mut code, &mut depth, &mut max_depth)?;
        Ok(CompiledExpr { code, depth: max_depth, source: expr.clone(), slots: slots.to_vec() })
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    pub fn is_constant_zero(&self) -> bool {
        matches!(self.source, Expr::Const(c) if c == 0.0)
    }

    pub fn eval(&self, env: &[f64]) -> Result<f64> {
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(env, &mut stack)
        } else {
            let mut stack = vec![0.0; self.depth];
            self.run(env, &mut stack)
        }
    }

    fn run(&self, env: &[f64], stack: &mut [f64]) -> Result<f64> {
        let mut sp = 0;
        for ins in &self.code {
            match *ins {
                Instr::Const(c) => {
                    stack[sp] = c;
                    sp += 1;
                }
                Instr::Load(i) => {
                    stack[sp] = env[i];
                    sp += 1;
                }
                Instr::Unary(op) => match op.apply(stack[sp - 1]) {
                    Ok(v) => stack[sp - 1] = v,
                    Err(_) => return Err(self.locate_error(env)),
                },
                Instr::Binary(op) => match op.apply(stack[sp - 2], stack[sp - 1]) {
                    Ok(v) => {
                        stack[sp - 2] = v;
                        sp -= 1;
                    }
                    Err(_) => return Err(self.locate_error(env)),
                },
            }
        }
        Ok(stack[0])
    }

    // Re-run on the tree to report which node failed.
    fn locate_error(&self, env: &[f64]) -> Error {
        let lookup = |name: &str| self.slots.iter().position(|s| s == name).map(|i| env[i]);
        match self.source.eval_with(&lookup) {
            Err(e) => e,
            Ok(_) => Error::Evaluation { location: self.source.to_string(), message: "evaluation failed".into() },
        }
    }
}

fn emit(expr: &Expr, slots: &[String], code: &mut Vec<Instr>, depth: &mut usize, max: &mut usize) -> Result<()> {
    match expr {
        Expr::Const(c) => {
            code.push(Instr::Const(*c));
            *depth += 1;
        }
        Expr::Var(v) => {
            let i = slots.iter().position(|s| s == v).ok_or_else(|| Error::UndeclaredIdentifier(v.clone()))?;
            code.push(Instr::Load(i));
            *depth += 1;
        }
        Expr::Unary(op, a) => {
            emit(a, slots, code, depth, max)?;
            code.push(Instr::Unary(*op));
        }
        Expr::Binary(op, a, b) => {
            emit(a, slots, code, depth, max)?;
            emit(b, slots, code, depth, max)?;
            code.push(Instr::Binary(*op));
            *depth -= 1;
        }
    }
    *max = (*max).max(*depth);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_expr;
    use std::collections::HashMap;

    #[test]
    fn compiled_matches_tree() {
        let slots: Vec<String> = ["x", "a", "b"].iter().map(|s| s.to_string()).collect();
        let e = parse_expr("a*(x-b)^2/(1+exp(-x)) - sqrt(abs(b))*tanh(x)", &slots).unwrap();
        let c = CompiledExpr::new(&e, &slots).unwrap();
        for (x, a, b) in [(0.3, 1.0, -2.0), (-1.5, 0.2, 4.0)] {
            let env = [x, a, b];
            let map: HashMap<String, f64> = slots.iter().cloned().zip(env).collect();
            assert_eq!(c.eval(&env).unwrap(), e.eval(&map).unwrap());
        }
    }

    #[test]
    fn errors_name_the_failing_node() {
        let slots = vec!["x".to_string()];
        let e = parse_expr("1 + log(x)", &slots).unwrap();
        let c = CompiledExpr::new(&e, &slots).unwrap();
        match c.eval(&[-1.0]).unwrap_err() {
            Error::Evaluation { location, .. } => assert_eq!(location, "log(x)"),
            e => panic!("{e}"),
        }
    }
}
