//! A small one-variable expression language: numbers, the variable, `+ - * / ^`,
//! and the functions `exp`, `ln`, `sqrt`. Constants `e` and `pi` are recognised.
//! Expressions differentiate symbolically, so weight densities built from them
//! carry exact derivatives.

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Pow(Arc<Node>, Arc<Node>),
    Exp(Arc<Node>),
    Ln(Arc<Node>),
    Sqrt(Arc<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let node = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("trailing input in '{src}'")));
        }
        Ok(Expr(Arc::new(node)))
    }

    pub fn constant(c: f64) -> Expr {
        Expr(Arc::new(Node::Num(c)))
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval(&self.0, x)
    }

    pub fn derivative(&self) -> Expr {
        Expr(Arc::new(simplify(deriv(&self.0))))
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Expr(Arc::new(simplify(Node::Mul(self.0.clone(), other.0.clone()))))
    }

    pub fn div(&self, other: &Expr) -> Expr {
        Expr(Arc::new(simplify(Node::Div(self.0.clone(), other.0.clone()))))
    }

    pub fn neg(&self) -> Expr {
        Expr(Arc::new(simplify(Node::Neg(self.0.clone()))))
    }
}

fn eval(n: &Node, x: f64) -> f64 {
    match n {
        Node::Num(c) => *c,
        Node::Var => x,
        Node::Neg(a) => -eval(a, x),
        Node::Add(a, b) => eval(a, x) + eval(b, x),
        Node::Sub(a, b) => eval(a, x) - eval(b, x),
        Node::Mul(a, b) => eval(a, x) * eval(b, x),
        Node::Div(a, b) => eval(a, x) / eval(b, x),
        Node::Pow(a, b) => {
            let base = eval(a, x);
            match **b {
                Node::Num(k) if k == k.trunc() && k.abs() < 64.0 => base.powi(k as i32),
                _ => base.powf(eval(b, x)),
            }
        }
        Node::Exp(a) => eval(a, x).exp(),
        Node::Ln(a) => eval(a, x).ln(),
        Node::Sqrt(a) => eval(a, x).sqrt(),
    }
}

fn depends(n: &Node) -> bool {
    match n {
        Node::Num(_) => false,
        Node::Var => true,
        Node::Neg(a) | Node::Exp(a) | Node::Ln(a) | Node::Sqrt(a) => depends(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => depends(a) || depends(b),
    }
}

fn num(c: f64) -> Arc<Node> {
    Arc::new(Node::Num(c))
}

fn deriv(n: &Node) -> Node {
    use Node::*;
    match n {
        Num(_) => Num(0.0),
        Var => Num(1.0),
        Neg(a) => Neg(Arc::new(deriv(a))),
        Add(a, b) => Add(Arc::new(deriv(a)), Arc::new(deriv(b))),
        Sub(a, b) => Sub(Arc::new(deriv(a)), Arc::new(deriv(b))),
        Mul(a, b) => Add(
            Arc::new(Mul(Arc::new(deriv(a)), b.clone())),
            Arc::new(Mul(a.clone(), Arc::new(deriv(b)))),
        ),
        Div(a, b) => Div(
            Arc::new(Sub(
                Arc::new(Mul(Arc::new(deriv(a)), b.clone())),
                Arc::new(Mul(a.clone(), Arc::new(deriv(b)))),
            )),
            Arc::new(Pow(b.clone(), num(2.0))),
        ),
        Pow(a, b) if !depends(b) => {
            let k = Arc::new(Sub(b.clone(), num(1.0)));
            Mul(Arc::new(Mul(b.clone(), Arc::new(Pow(a.clone(), k)))), Arc::new(deriv(a)))
        }
        Pow(a, b) => {
            // d(a^b) = a^b (b' ln a + b a'/a)
            let t1 = Mul(Arc::new(deriv(b)), Arc::new(Ln(a.clone())));
            let t2 = Div(Arc::new(Mul(b.clone(), Arc::new(deriv(a)))), a.clone());
            Mul(Arc::new(n.clone()), Arc::new(Add(Arc::new(t1), Arc::new(t2))))
        }
        Exp(a) => Mul(Arc::new(n.clone()), Arc::new(deriv(a))),
        Ln(a) => Div(Arc::new(deriv(a)), a.clone()),
        Sqrt(a) => Div(Arc::new(deriv(a)), Arc::new(Mul(num(2.0), Arc::new(n.clone())))),
    }
}

fn simplify(n: Node) -> Node {
    use Node::*;
    let s = |a: &Arc<Node>| Arc::new(simplify((**a).clone()));
    match n {
        Neg(a) => match simplify((*a).clone()) {
            Num(c) => Num(-c),
            Neg(b) => (*b).clone(),
            other => Neg(Arc::new(other)),
        },
        Add(a, b) => match (&*s(&a), &*s(&b)) {
            (Num(x), Num(y)) => Num(x + y),
            (Num(z), o) | (o, Num(z)) if *z == 0.0 => o.clone(),
            (p, q) => Add(Arc::new(p.clone()), Arc::new(q.clone())),
        },
        Sub(a, b) => match (&*s(&a), &*s(&b)) {
            (Num(x), Num(y)) => Num(x - y),
            (o, Num(z)) if *z == 0.0 => o.clone(),
            (Num(z), o) if *z == 0.0 => Neg(Arc::new(o.clone())),
            (p, q) => Sub(Arc::new(p.clone()), Arc::new(q.clone())),
        },
        Mul(a, b) => match (&*s(&a), &*s(&b)) {
            (Num(x), Num(y)) => Num(x * y),
            (Num(z), _) | (_, Num(z)) if *z == 0.0 => Num(0.0),
            (Num(z), o) | (o, Num(z)) if *z == 1.0 => o.clone(),
            (p, q) => Mul(Arc::new(p.clone()), Arc::new(q.clone())),
        },
        Div(a, b) => match (&*s(&a), &*s(&b)) {
            (Num(x), Num(y)) if *y != 0.0 => Num(x / y),
            (Num(z), _) if *z == 0.0 => Num(0.0),
            (o, Num(z)) if *z == 1.0 => o.clone(),
            (p, q) => Div(Arc::new(p.clone()), Arc::new(q.clone())),
        },
        Pow(a, b) => match (&*s(&a), &*s(&b)) {
            (Num(x), Num(y)) => Num(x.powf(*y)),
            (_, Num(z)) if *z == 0.0 => Num(1.0),
            (o, Num(z)) if *z == 1.0 => o.clone(),
            (p, q) => Pow(Arc::new(p.clone()), Arc::new(q.clone())),
        },
        Exp(a) => Exp(s(&a)),
        Ln(a) => Ln(s(&a)),
        Sqrt(a) => Sqrt(s(&a)),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{text}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Arc::new(lhs), Arc::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Arc::new(lhs), Arc::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Arc::new(lhs), Arc::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Arc::new(lhs), Arc::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Arc::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Arc::new(base), Arc::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing ')'".into()));
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let func = matches!(name.as_str(), "exp" | "ln" | "log" | "sqrt");
                if func {
                    if !self.eat('(') {
                        return Err(Error::Parse(format!("'{name}' needs an argument")));
                    }
                    let arg = Arc::new(self.expr()?);
                    if !self.eat(')') {
                        return Err(Error::Parse("missing ')'".into()));
                    }
                    return Ok(match name.as_str() {
                        "exp" => Node::Exp(arg),
                        "sqrt" => Node::Sqrt(arg),
                        _ => Node::Ln(arg),
                    });
                }
                match name.as_str() {
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    _ => Ok(Node::Var),
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

fn prec(n: &Node) -> u8 {
    match n {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        Node::Num(c) if *c < 0.0 => 3,
        _ => 5,
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let wrap = |child: &Node, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        if prec(child) < min {
            write!(f, "(")?;
            write_node(child, f)?;
            write!(f, ")")
        } else {
            write_node(child, f)
        }
    };
    match n {
        Node::Num(c) => write!(f, "{c:?}"),
        Node::Var => write!(f, "x"),
        Node::Neg(a) => {
            write!(f, "-")?;
            wrap(a, 4, f)
        }
        Node::Add(a, b) => {
            wrap(a, 1, f)?;
            write!(f, " + ")?;
            wrap(b, 2, f)
        }
        Node::Sub(a, b) => {
            wrap(a, 1, f)?;
            write!(f, " - ")?;
            wrap(b, 2, f)
        }
        Node::Mul(a, b) => {
            wrap(a, 2, f)?;
            write!(f, "*")?;
            wrap(b, 3, f)
        }
        Node::Div(a, b) => {
            wrap(a, 2, f)?;
            write!(f, "/")?;
            wrap(b, 3, f)
        }
        Node::Pow(a, b) => {
            wrap(a, 5, f)?;
            write!(f, "^")?;
            wrap(b, 4, f)
        }
        Node::Exp(a) => {
            write!(f, "exp(")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Ln(a) => {
            write!(f, "ln(")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Sqrt(a) => {
            write!(f, "sqrt(")?;
            write_node(a, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.0, f)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let e = Expr::parse("2*(z-1)^2/z^3").unwrap();
        assert!((e.eval(3.0) - 8.0 / 27.0).abs() < 1e-15);
        let e = Expr::parse("z^2*exp(-z)/2").unwrap();
        assert!((e.eval(1.0) - 0.5 / std::f64::consts::E).abs() < 1e-15);
        let e = Expr::parse("-x^2").unwrap();
        assert_eq!(e.eval(3.0), -9.0);
        let e = Expr::parse("1e-3*x + ln(e)").unwrap();
        assert!((e.eval(1000.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_central_differences() {
        for src in ["1/x^2", "x^2", "exp(-x)", "2*(x-1)^2/x^3", "ln(x)/x", "sqrt(x)*exp(x/3)", "x^x"] {
            let e = Expr::parse(src).unwrap();
            let d = e.derivative();
            for &x in &[0.5, 1.3, 2.7] {
                let h = 1e-6 * x;
                let fd = (e.eval(x + h) - e.eval(x - h)) / (2.0 * h);
                assert!((d.eval(x) - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{src} at {x}");
            }
        }
    }

    #[test]
    fn display_round_trips() {
        for src in ["2/z", "z^2*exp(-z)/2", "-(x - 1)^2", "x^-2", "ln(x)/x - 3", "2^x^2"] {
            let e = Expr::parse(src).unwrap();
            let back = Expr::parse(&e.to_string()).unwrap();
            for &x in &[0.7, 1.9] {
                assert!((e.eval(x) - back.eval(x)).abs() < 1e-14, "{src} -> {e}");
            }
        }
    }
}
