//! Text grammar for coefficient expressions and the matching printer.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! Opaque symbols must be declared on the chart. A bare opaque name stands for
//! the symbol applied to the chart coordinates; `f__1_2(x, y)` denotes the
//! mixed partial of `f` in its first and second argument slots.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::expr::Expr;
use super::poly::{Atom, Elementary, Monomial, Poly, Q};
use super::Chart;
use crate::error::CoeffError;

pub(crate) fn parse(src: &str, chart: &Chart) -> Result<Expr, CoeffError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        chart,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    chart: &'a Chart,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> CoeffError {
        CoeffError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), CoeffError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&alloc::format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, CoeffError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, CoeffError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.unary()?);
            } else if self.peek() == Some(b'/') {
                let at = self.pos;
                self.pos += 1;
                let rhs = self.unary()?;
                acc = acc.checked_div(&rhs).map_err(|_| CoeffError::Syntax {
                    pos: at,
                    msg: "division by zero".to_string(),
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, CoeffError> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, CoeffError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let at = self.pos;
            let exp = self.unary()?;
            let k = exp
                .constant_value()
                .filter(|q| q.is_integer())
                .and_then(|q| i64::try_from(q.to_integer()).ok())
                .ok_or(CoeffError::Syntax {
                    pos: at,
                    msg: "exponent must be an integer constant".to_string(),
                })?;
            return base.powi(k).map_err(|_| CoeffError::Syntax {
                pos: at,
                msg: "negative power of zero".to_string(),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, CoeffError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident_or_call(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, CoeffError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = &self.src[start..self.pos];
        let mut frac_part: &[u8] = &[];
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let fs = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            frac_part = &self.src[fs..self.pos];
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(CoeffError::Syntax {
                pos: start,
                msg: "malformed number".to_string(),
            });
        }
        let mut digits = String::new();
        digits.push_str(core::str::from_utf8(int_part).unwrap());
        digits.push_str(core::str::from_utf8(frac_part).unwrap());
        let n: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
        let d = num_traits::pow(BigInt::from(10), frac_part.len());
        Ok(Expr::rational(Q::new(n, d)))
    }

    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        core::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn args(&mut self) -> Result<Vec<Expr>, CoeffError> {
        let mut args = Vec::new();
        if self.eat(b')') {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(b',') {
                continue;
            }
            self.expect(b')')?;
            return Ok(args);
        }
    }

    fn ident_or_call(&mut self) -> Result<Expr, CoeffError> {
        self.skip_ws();
        let start = self.pos;
        let name = self.ident();
        let call = self.peek() == Some(b'(');
        if call {
            self.pos += 1;
            if let Some(f) = Elementary::from_name(name) {
                let args = self.args()?;
                if args.len() != 1 {
                    return Err(CoeffError::Syntax {
                        pos: start,
                        msg: alloc::format!("{name} takes one argument"),
                    });
                }
                return Ok(Expr::func(f, args.into_iter().next().unwrap()));
            }
            if name == "diff" {
                let e = self.expr()?;
                self.expect(b',')?;
                self.skip_ws();
                let cpos = self.pos;
                let coord = self.ident();
                self.expect(b')')?;
                if !self.chart.has_coord(coord) {
                    return Err(CoeffError::Syntax {
                        pos: cpos,
                        msg: alloc::format!("unknown coordinate `{coord}`"),
                    });
                }
                return Ok(e.diff(coord));
            }
        }
        let (base, partials) = split_partials(name).ok_or(CoeffError::Syntax {
            pos: start,
            msg: alloc::format!("malformed partial suffix in `{name}`"),
        })?;
        if partials.is_empty() && !call && self.chart.has_coord(base) {
            return Ok(Expr::coord(base));
        }
        if !self.chart.has_opaque(base) {
            return Err(CoeffError::UnknownSymbol(name.to_string()));
        }
        let args = if call {
            self.args()?
        } else {
            self.chart.coords().iter().map(|c| Expr::coord(c)).collect()
        };
        if partials.iter().any(|&s| s as usize >= args.len()) {
            return Err(CoeffError::Syntax {
                pos: start,
                msg: alloc::format!("partial slot out of range in `{name}`"),
            });
        }
        Ok(Expr::opaque(base, args, partials))
    }
}

/// Splits `f__1_2` into `("f", [0, 1])`.
fn split_partials(name: &str) -> Option<(&str, Vec<u32>)> {
    match name.find("__") {
        None => Some((name, Vec::new())),
        Some(i) => {
            let base = &name[..i];
            let mut slots = Vec::new();
            for part in name[i + 2..].split('_') {
                let k: u32 = part.parse().ok()?;
                if k == 0 {
                    return None;
                }
                slots.push(k - 1);
            }
            Some((base, slots))
        }
    }
}

fn fmt_q_abs(q: &Q, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let a = q.abs();
    if a.is_integer() {
        write!(f, "{}", a.numer())
    } else {
        write!(f, "{}/{}", a.numer(), a.denom())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Coord(c) => f.write_str(c),
            Atom::Opaque(o) => {
                f.write_str(&o.name)?;
                if !o.partials.is_empty() {
                    f.write_str("_")?;
                    for s in &o.partials {
                        write!(f, "_{}", s + 1)?;
                    }
                }
                f.write_str("(")?;
                for (i, a) in o.args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Atom::Func(fa) => write!(f, "{}({})", fa.func.name(), fa.arg),
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, e)) in self.factors().iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{a}")?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut terms: Vec<(&Monomial, &Q)> = self.terms().collect();
        terms.sort_by(|a, b| b.0.glex_cmp(a.0));
        for (i, (m, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else if neg {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if m.is_one() {
                fmt_q_abs(c, f)?;
            } else {
                if !c.abs().is_one() {
                    fmt_q_abs(c, f)?;
                    f.write_str("*")?;
                }
                write!(f, "{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{}", self.num())
        } else {
            write!(f, "({})/({})", self.num(), self.den())
        }
    }
}
