//! A small pure expression language used as benchmark test data.

use std::fmt;

use crate::gen::{Constructors, Gen, Shrinker};
use crate::rng::Seed;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(i64),
    Var(u32),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// `IfZero(c, t, e)` is `t` when `c` evaluates to zero, else `e`.
    IfZero(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn if_zero(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::IfZero(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Var(_) => 1,
            Expr::Add(a, b) | Expr::Mul(a, b) => 1 + a.node_count() + b.node_count(),
            Expr::IfZero(c, t, e) => 1 + c.node_count() + t.node_count() + e.node_count(),
        }
    }

    /// Evaluates with wrapping arithmetic; unbound variables read as zero.
    pub fn eval(&self, env: &[i64]) -> i64 {
        match self {
            Expr::Lit(n) => *n,
            Expr::Var(i) => env.get(*i as usize).copied().unwrap_or(0),
            Expr::Add(a, b) => a.eval(env).wrapping_add(b.eval(env)),
            Expr::Mul(a, b) => a.eval(env).wrapping_mul(b.eval(env)),
            Expr::IfZero(c, t, e) => {
                if c.eval(env) == 0 {
                    t.eval(env)
                } else {
                    e.eval(env)
                }
            }
        }
    }
}

impl Constructors for Expr {
    fn constructors(&self) -> usize {
        self.node_count()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(n) => write!(f, "{n}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Add(a, b) => write!(f, "(add {a} {b})"),
            Expr::Mul(a, b) => write!(f, "(mul {a} {b})"),
            Expr::IfZero(c, t, e) => write!(f, "(ifz {c} {t} {e})"),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Subterms first, then each field shrunk in place, left to right.
/// Leaves have no candidates.
pub fn shrink_expr(e: &Expr) -> Vec<Expr> {
    match e {
        Expr::Lit(_) | Expr::Var(_) => Vec::new(),
        Expr::Add(a, b) | Expr::Mul(a, b) => {
            let rebuild = |x: Expr, y: Expr| match e {
                Expr::Add(..) => Expr::add(x, y),
                _ => Expr::mul(x, y),
            };
            let mut out = vec![(**a).clone(), (**b).clone()];
            out.extend(shrink_expr(a).into_iter().map(|a2| rebuild(a2, (**b).clone())));
            out.extend(shrink_expr(b).into_iter().map(|b2| rebuild((**a).clone(), b2)));
            out
        }
        Expr::IfZero(c, t, el) => {
            let mut out = vec![(**c).clone(), (**t).clone(), (**el).clone()];
            out.extend(
                shrink_expr(c)
                    .into_iter()
                    .map(|c2| Expr::if_zero(c2, (**t).clone(), (**el).clone())),
            );
            out.extend(
                shrink_expr(t)
                    .into_iter()
                    .map(|t2| Expr::if_zero((**c).clone(), t2, (**el).clone())),
            );
            out.extend(
                shrink_expr(el)
                    .into_iter()
                    .map(|e2| Expr::if_zero((**c).clone(), (**t).clone(), e2)),
            );
            out
        }
    }
}

pub const VAR_COUNT: u32 = 3;

/// Random expressions with at most about `size` nodes.
///
/// Literals are drawn from `-3..=3` and variables from `x0..x2`.
pub fn gen_expr() -> Gen<Expr> {
    Gen::new(|seed, size| build(seed, size.max(1)).0)
}

fn build(seed: Seed, budget: usize) -> (Expr, Seed) {
    let pick = |s: Seed, lo, hi| s.bounded(lo, hi).expect("non-empty range");
    if budget < 3 {
        let (leaf, s) = pick(seed, 0, 1);
        return if leaf == 0 {
            let (n, s) = pick(s, -3, 3);
            (Expr::Lit(n), s)
        } else {
            let (i, s) = pick(s, 0, i64::from(VAR_COUNT) - 1);
            (Expr::Var(i as u32), s)
        };
    }
    let (kind, s) = pick(seed, 0, 9);
    match kind {
        0 | 1 => build(s, 1),
        2..=7 => {
            let rest = budget - 1;
            let (left_share, s) = pick(s, 1, rest as i64 - 1);
            let (a, s) = build(s, left_share as usize);
            let (b, s) = build(s, rest - left_share as usize);
            if kind <= 4 {
                (Expr::add(a, b), s)
            } else {
                (Expr::mul(a, b), s)
            }
        }
        _ => {
            if budget < 4 {
                return build(s, 1);
            }
            let rest = budget - 1;
            let (c_share, s) = pick(s, 1, rest as i64 - 2);
            let (t_share, s) = pick(s, 1, (rest - c_share as usize) as i64 - 1);
            let e_share = rest - c_share as usize - t_share as usize;
            let (c, s) = build(s, c_share as usize);
            let (t, s) = build(s, t_share as usize);
            let (e, s) = build(s, e_share);
            (Expr::if_zero(c, t, e), s)
        }
    }
}

impl Shrinker<Expr> {
    pub fn expr() -> Self {
        Shrinker::new(shrink_expr)
    }
}
