//! Coefficient expression language.
//!
//! ```text
//! coeff  := '[' row (',' row)? ']' | expr
//! row    := '[' expr ',' expr ']' | expr
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | number 'i' | 'i' | 'x' | 'y' | 'r2'
//!         | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and associates to the right, so
//! `-2^2 = -4` and `2^3^2 = 512`.

use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    R2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Real(f64),
    /// `b i`
    Imag(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// A parsed coefficient: scalar, 2-vector or 2x2 matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum Coeff {
    Scalar(Expr),
    Vector([Expr; 2]),
    Matrix([[Expr; 2]; 2]),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Syntax { line: usize, col: usize, expected: Vec<String>, found: String },
    #[error("{line}:{col}: unknown identifier `{name}`")]
    UnknownIdent { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{name}` takes {expected} argument(s), got {found}")]
    Arity { line: usize, col: usize, name: String, expected: usize, found: usize },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::UnknownIdent { line, col, .. }
            | ParseError::Arity { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    ImagNum(f64),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number `{x}`"),
            Tok::ImagNum(x) => write!(f, "number `{x}i`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
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
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                line: l0,
                col: c0,
                expected: vec!["number".into()],
                found: format!("`{text}`"),
            })?;
            let imag = i < chars.len() && chars[i] == 'i' && !chars.get(i + 1).is_some_and(|d| d.is_alphanumeric() || *d == '_');
            if imag {
                i += 1;
            }
            col += i - start;
            out.push(Spanned { tok: if imag { Tok::ImagNum(value) } else { Tok::Num(value) }, line: l0, col: c0 });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Spanned { tok: Tok::Ident(chars[start..i].iter().collect()), line: l0, col: c0 });
            continue;
        }
        let sym = match c {
            '\u{2212}' => '-',
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | '[' | ']' | ',' => c,
            _ => {
                return Err(ParseError::Syntax {
                    line: l0,
                    col: c0,
                    expected: vec!["expression".into()],
                    found: format!("`{c}`"),
                })
            }
        };
        i += 1;
        col += 1;
        out.push(Spanned { tok: Tok::Sym(sym), line: l0, col: c0 });
    }
    out.push(Spanned { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char, also: &[&str]) -> Result<(), ParseError> {
        if self.eat(c) {
            return Ok(());
        }
        let want = format!("`{c}`");
        let mut exp: Vec<&str> = also.to_vec();
        exp.push(&want);
        Err(self.error(&exp))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Real(x))
            }
            Tok::ImagNum(x) => {
                self.bump();
                Ok(Expr::Imag(x))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')', &["operator"])?;
                Ok(e)
            }
            Tok::Ident(ref name) => {
                self.bump();
                match name.as_str() {
                    "i" => return Ok(Expr::Imag(1.0)),
                    "x" => return Ok(Expr::Var(Var::X)),
                    "y" => return Ok(Expr::Var(Var::Y)),
                    "r2" => return Ok(Expr::Var(Var::R2)),
                    _ => {}
                }
                let Some(func) = Func::from_name(name) else {
                    return Err(ParseError::UnknownIdent { line: t.line, col: t.col, name: name.clone() });
                };
                self.expect('(', &[])?;
                let mut args = vec![self.expr()?];
                while self.eat(',') {
                    args.push(self.expr()?);
                }
                self.expect(')', &["`,`", "operator"])?;
                if args.len() != func.arity() {
                    return Err(ParseError::Arity {
                        line: t.line,
                        col: t.col,
                        name: name.clone(),
                        expected: func.arity(),
                        found: args.len(),
                    });
                }
                Ok(Expr::Call(func, args))
            }
            _ => Err(self.error(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if self.peek().tok == Tok::End {
            Ok(())
        } else {
            Err(self.error(&["operator", "end of input"]))
        }
    }

    fn pair(&mut self) -> Result<[Expr; 2], ParseError> {
        let a = self.expr()?;
        self.expect(',', &["operator"])?;
        let b = self.expr()?;
        self.expect(']', &["operator"])?;
        Ok([a, b])
    }

    fn coeff(&mut self) -> Result<Coeff, ParseError> {
        if !self.eat('[') {
            return Ok(Coeff::Scalar(self.expr()?));
        }
        if self.eat('[') {
            let r0 = self.pair()?;
            self.expect(',', &[])?;
            self.expect('[', &[])?;
            let r1 = self.pair()?;
            self.expect(']', &[])?;
            return Ok(Coeff::Matrix([r0, r1]));
        }
        Ok(Coeff::Vector(self.pair()?))
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_coeff(src: &str) -> Result<Coeff, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let c = p.coeff()?;
    p.finish()?;
    Ok(c)
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(op, ..) => op.prec(),
        Expr::Neg(_) => 3,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Real(x) => write!(f, "{x:?}"),
            Expr::Imag(x) if *x == 1.0 => f.write_str("i"),
            Expr::Imag(x) => write!(f, "{x:?}i"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Var(Var::R2) => f.write_str("r2"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, 3)
            }
            Expr::Bin(BinOp::Pow, l, r) => {
                write_child(f, l, 5)?;
                f.write_str("^")?;
                write_child(f, r, 3)
            }
            Expr::Bin(op, l, r) => {
                write_child(f, l, op.prec())?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, r, op.prec() + 1)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coeff::Scalar(e) => write!(f, "{e}"),
            Coeff::Vector([a, b]) => write!(f, "[{a}, {b}]"),
            Coeff::Matrix([[a, b], [c, d]]) => write!(f, "[[{a}, {b}], [{c}, {d}]]"),
        }
    }
}

/// Evaluation point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Expr {
    /// Complex value at `at`. `abs` is the modulus; `min`/`max` compare real
    /// parts; `z^w` is the principal power, with integer real exponents
    /// evaluated by repeated multiplication.
    pub fn eval(&self, at: Point) -> C64 {
        match self {
            Expr::Real(x) => C64::new(*x, 0.0),
            Expr::Imag(x) => C64::new(0.0, *x),
            Expr::Var(Var::X) => C64::new(at.x, 0.0),
            Expr::Var(Var::Y) => C64::new(at.y, 0.0),
            Expr::Var(Var::R2) => C64::new(at.x * at.x + at.y * at.y, 0.0),
            // `+ 0.0` turns a signed zero into +0 so `sqrt(-4)` lands on `2i`
            Expr::Neg(e) => -e.eval(at) + C64::new(0.0, 0.0),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(at), r.eval(at));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => power(a, b),
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(at);
                match func {
                    Func::Exp => a.exp(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => C64::new(a.norm(), 0.0),
                    Func::Min | Func::Max => {
                        let b = args[1].eval(at);
                        let take_a = if *func == Func::Min { a.re <= b.re } else { a.re >= b.re };
                        if take_a {
                            a
                        } else {
                            b
                        }
                    }
                }
            }
        }
    }
}

pub fn power(a: C64, b: C64) -> C64 {
    if b.im == 0.0 && b.re.fract() == 0.0 && b.re.abs() <= 64.0 {
        return a.powi(b.re as i32);
    }
    if a.im == 0.0 && a.re >= 0.0 && b.im == 0.0 {
        return C64::new(a.re.powf(b.re), 0.0);
    }
    a.powc(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> C64 {
        parse_expr(s).unwrap().eval(Point { x: 0.5, y: -2.0 })
    }

    #[test]
    fn literals_and_precedence() {
        assert_eq!(ev("1+i"), C64::new(1.0, 1.0));
        assert_eq!(ev("2^3^2"), C64::new(512.0, 0.0));
        assert_eq!(ev("-2^2"), C64::new(-4.0, 0.0));
        assert_eq!(ev("2^-1"), C64::new(0.5, 0.0));
        assert_eq!(ev("8/2/2"), C64::new(2.0, 0.0));
        assert_eq!(ev("3i*i"), C64::new(-3.0, 0.0));
        assert_eq!(ev("r2"), C64::new(4.25, 0.0));
        let hardy = parse_expr("0.75*9/4 * 1/max(r2, 1e-4)").unwrap();
        assert!((hardy.eval(Point { x: 1.0, y: 0.0 }).re - 1.6875).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        match parse_expr("1 +\n  * 2") {
            Err(ParseError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
        match parse_expr("foo(1)") {
            Err(ParseError::UnknownIdent { name, col, .. }) => assert_eq!((name.as_str(), col), ("foo", 1)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("min(1)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_expr("(1"), Err(ParseError::Syntax { col: 3, .. })));
    }

    #[test]
    fn coefficients_and_printing() {
        let c = parse_coeff("[[1+i, 0], [0, 2*x]]").unwrap();
        assert!(matches!(c, Coeff::Matrix(_)));
        assert_eq!(parse_coeff(&c.to_string()).unwrap(), c);
        let v = parse_coeff("[-i, 0]").unwrap();
        assert_eq!(v.to_string(), "[-i, 0.0]");
        for s in ["-(2^2)", "(-2)^2", "a" ] {
            if let Ok(e) = parse_expr(s) {
                assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
            }
        }
    }
}
