//! Minimal reverse-mode automatic differentiation.
//!
//! A thread-local tape records every binary/unary operation on [`Var`] as a
//! node with at most two weighted parents. [`gradient`] replays the tape
//! backwards. Constants never touch the tape.
//!
//! The tape is per thread, so independent solves on different threads never
//! share state. A recording is scoped by [`gradient`]; nested recordings on the
//! same thread are not supported.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::real::Real;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node {
    a: u32,
    da: f64,
    b: u32,
    db: f64,
}

thread_local! {
    static TAPE: RefCell<Vec<Node>> = const { RefCell::new(Vec::new()) };
}

fn push(a: u32, da: f64, b: u32, db: f64) -> u32 {
    TAPE.with(|t| {
        let mut t = t.borrow_mut();
        let idx = t.len() as u32;
        t.push(Node { a, da, b, db });
        idx
    })
}

/// A value tracked on the tape (or a constant when `idx == NONE`).
#[derive(Clone, Copy, Debug)]
pub struct Var {
    val: f64,
    idx: u32,
}

impl Var {
    fn unary(self, val: f64, d: f64) -> Var {
        if self.idx == NONE {
            return Var { val, idx: NONE };
        }
        Var {
            val,
            idx: push(self.idx, d, NONE, 0.0),
        }
    }

    fn binary(self, other: Var, val: f64, da: f64, db: f64) -> Var {
        match (self.idx == NONE, other.idx == NONE) {
            (true, true) => Var { val, idx: NONE },
            (false, true) => Var {
                val,
                idx: push(self.idx, da, NONE, 0.0),
            },
            (true, false) => Var {
                val,
                idx: push(other.idx, db, NONE, 0.0),
            },
            (false, false) => Var {
                val,
                idx: push(self.idx, da, other.idx, db),
            },
        }
    }

    pub fn is_constant(self) -> bool {
        self.idx == NONE
    }
}

/// Evaluates `f` on freshly recorded inputs and returns `(f(x), ∇f(x))`.
pub fn gradient<F>(x: &[f64], f: F) -> (f64, Vec<f64>)
where
    F: FnOnce(&[Var]) -> Var,
{
    TAPE.with(|t| t.borrow_mut().clear());
    let inputs: Vec<Var> = x
        .iter()
        .map(|&v| Var {
            val: v,
            idx: push(NONE, 0.0, NONE, 0.0),
        })
        .collect();
    let out = f(&inputs);
    let mut grad = vec![0.0; x.len()];
    if out.idx == NONE {
        return (out.val, grad);
    }
    TAPE.with(|t| {
        let tape = t.borrow();
        let mut adj = vec![0.0; tape.len()];
        adj[out.idx as usize] = 1.0;
        for i in (0..=out.idx as usize).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let n = tape[i];
            if n.a != NONE {
                adj[n.a as usize] += g * n.da;
            }
            if n.b != NONE {
                adj[n.b as usize] += g * n.db;
            }
        }
        for (k, v) in inputs.iter().enumerate() {
            grad[k] = adj[v.idx as usize];
        }
    });
    TAPE.with(|t| t.borrow_mut().clear());
    (out.val, grad)
}

impl Add for Var {
    type Output = Var;
    fn add(self, o: Var) -> Var {
        self.binary(o, self.val + o.val, 1.0, 1.0)
    }
}

impl Sub for Var {
    type Output = Var;
    fn sub(self, o: Var) -> Var {
        self.binary(o, self.val - o.val, 1.0, -1.0)
    }
}

impl Mul for Var {
    type Output = Var;
    fn mul(self, o: Var) -> Var {
        self.binary(o, self.val * o.val, o.val, self.val)
    }
}

impl Div for Var {
    type Output = Var;
    fn div(self, o: Var) -> Var {
        let q = self.val / o.val;
        self.binary(o, q, 1.0 / o.val, -q / o.val)
    }
}

impl Neg for Var {
    type Output = Var;
    fn neg(self) -> Var {
        self.unary(-self.val, -1.0)
    }
}

impl Add<f64> for Var {
    type Output = Var;
    fn add(self, c: f64) -> Var {
        self.unary(self.val + c, 1.0)
    }
}

impl Sub<f64> for Var {
    type Output = Var;
    fn sub(self, c: f64) -> Var {
        self.unary(self.val - c, 1.0)
    }
}

impl Mul<f64> for Var {
    type Output = Var;
    fn mul(self, c: f64) -> Var {
        self.unary(self.val * c, c)
    }
}

impl Div<f64> for Var {
    type Output = Var;
    fn div(self, c: f64) -> Var {
        self.unary(self.val / c, 1.0 / c)
    }
}

impl Real for Var {
    fn constant(v: f64) -> Self {
        Var { val: v, idx: NONE }
    }
    fn value(self) -> f64 {
        self.val
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        self.unary(e, e)
    }
    fn ln(self) -> Self {
        self.unary(self.val.ln(), 1.0 / self.val)
    }
    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.unary(s, 0.5 / s)
    }
    fn powf(self, p: f64) -> Self {
        let v = self.val.powf(p);
        let d = if p == 0.0 {
            0.0
        } else {
            p * self.val.powf(p - 1.0)
        };
        self.unary(v, d)
    }
}
