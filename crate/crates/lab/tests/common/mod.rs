#![allow(dead_code)]

use num_complex::Complex64 as C64;

/// Well-formed expressions, including precedence and associativity traps,
/// with their value at `(x, y) = (0.5, -2)` where one is known by hand.
pub const CORPUS: [(&str, Option<(f64, f64)>); 30] = [
    ("1+i", Some((1.0, 1.0))),
    ("2^3^2", Some((512.0, 0.0))),
    ("-2^2", Some((-4.0, 0.0))),
    ("(-2)^2", Some((4.0, 0.0))),
    ("2^-1", Some((0.5, 0.0))),
    ("1 - 2 - 3", Some((-4.0, 0.0))),
    ("8 / 4 / 2", Some((1.0, 0.0))),
    ("2 * 3 + 4", Some((10.0, 0.0))),
    ("2 + 3 * 4", Some((14.0, 0.0))),
    ("-x * y", Some((1.0, 0.0))),
    ("--x", Some((0.5, 0.0))),
    ("x^2 + y^2 - r2", Some((0.0, 0.0))),
    ("0.75*9/4 * 1/max(r2, 1e-4)", Some((1.6875 / 4.25, 0.0))),
    ("exp(i * 3.141592653589793)", Some((-1.0, 0.0))),
    ("sqrt(-4)", Some((0.0, 2.0))),
    ("abs(3 + 4i)", Some((5.0, 0.0))),
    ("min(x, y)", Some((-2.0, 0.0))),
    ("max(1, 2) * min(3, 4)", Some((6.0, 0.0))),
    ("sin(x)^2 + cos(x)^2", Some((1.0, 0.0))),
    ("2i * 3i", Some((-6.0, 0.0))),
    ("1e-3 * 2.5E+2", Some((0.25, 0.0))),
    ("(1 + i)^2", Some((0.0, 2.0))),
    ("2^3 * 2", Some((16.0, 0.0))),
    ("2 * 3 ^ 2", Some((18.0, 0.0))),
    ("-(1 - x) / -2", Some((0.25, 0.0))),
    ("1/2/2^2", Some((0.125, 0.0))),
    ("x - -y", Some((-1.5, 0.0))),
    ("exp(-r2 / 2)", None),
    ("((((x))))", Some((0.5, 0.0))),
    ("2^(1/2) * y^x", None),
];

/// Malformed inputs with the expected error position `(line, col)`.
pub const MALFORMED: [(&str, (usize, usize)); 16] = [
    ("1 +", (1, 4)),
    ("1 + * 2", (1, 5)),
    ("foo(1)", (1, 1)),
    ("2 ^", (1, 4)),
    ("max(1)", (1, 1)),
    ("sin 1", (1, 5)),
    (")", (1, 1)),
    ("1 2", (1, 3)),
    ("x $ y", (1, 3)),
    ("\n\n  )", (3, 3)),
    ("exp(1,2)", (1, 1)),
    ("", (1, 1)),
    ("(1 + 2", (1, 7)),
    ("3 *\n  / 4", (2, 3)),
    ("min(1, )", (1, 8)),
    ("sqrt()", (1, 6)),
];

/// Independent evaluator working straight from the text.
pub fn reference_eval(src: &str, x: f64, y: f64) -> Result<C64, String> {
    let mut r = Ref { s: src.chars().collect(), k: 0, x, y };
    let v = r.expr()?;
    r.ws();
    if r.k != r.s.len() {
        return Err(format!("trailing input at {}", r.k));
    }
    Ok(v)
}

struct Ref {
    s: Vec<char>,
    k: usize,
    x: f64,
    y: f64,
}

impl Ref {
    fn ws(&mut self) {
        while self.k < self.s.len() && self.s[self.k].is_whitespace() {
            self.k += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.ws();
        self.s.get(self.k).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.k += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<C64, String> {
        let mut v = self.term()?;
        loop {
            if self.eat('+') {
                v += self.term()?;
            } else if self.eat('-') || self.eat('\u{2212}') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<C64, String> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                v *= self.unary()?;
            } else if self.eat('/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<C64, String> {
        if self.eat('-') || self.eat('\u{2212}') {
            return Ok(-self.unary()? + C64::new(0.0, 0.0));
        }
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(pow(base, e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<C64, String> {
        match self.peek() {
            Some('(') => {
                self.k += 1;
                let v = self.expr()?;
                if !self.eat(')') {
                    return Err("missing )".into());
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.k;
                while self.k < self.s.len() && (self.s[self.k].is_ascii_digit() || self.s[self.k] == '.') {
                    self.k += 1;
                }
                if self.k < self.s.len() && (self.s[self.k] == 'e' || self.s[self.k] == 'E') {
                    let save = self.k;
                    self.k += 1;
                    if self.k < self.s.len() && (self.s[self.k] == '+' || self.s[self.k] == '-') {
                        self.k += 1;
                    }
                    if self.k < self.s.len() && self.s[self.k].is_ascii_digit() {
                        while self.k < self.s.len() && self.s[self.k].is_ascii_digit() {
                            self.k += 1;
                        }
                    } else {
                        self.k = save;
                    }
                }
                let text: String = self.s[start..self.k].iter().collect();
                let v: f64 = text.parse().map_err(|_| format!("bad number {text}"))?;
                let imag = self.k < self.s.len()
                    && self.s[self.k] == 'i'
                    && !self.s.get(self.k + 1).is_some_and(|c| c.is_alphanumeric() || *c == '_');
                if imag {
                    self.k += 1;
                    Ok(C64::new(0.0, v))
                } else {
                    Ok(C64::new(v, 0.0))
                }
            }
            Some(c) if c.is_alphabetic() => {
                let start = self.k;
                while self.k < self.s.len() && (self.s[self.k].is_alphanumeric() || self.s[self.k] == '_') {
                    self.k += 1;
                }
                let name: String = self.s[start..self.k].iter().collect();
                match name.as_str() {
                    "x" => Ok(C64::new(self.x, 0.0)),
                    "y" => Ok(C64::new(self.y, 0.0)),
                    "r2" => Ok(C64::new(self.x * self.x + self.y * self.y, 0.0)),
                    "i" => Ok(C64::new(0.0, 1.0)),
                    f => {
                        if !self.eat('(') {
                            return Err(format!("expected ( after {f}"));
                        }
                        let mut args = vec![self.expr()?];
                        while self.eat(',') {
                            args.push(self.expr()?);
                        }
                        if !self.eat(')') {
                            return Err("missing )".into());
                        }
                        call(f, &args)
                    }
                }
            }
            other => Err(format!("unexpected {other:?}")),
        }
    }
}

fn call(f: &str, a: &[C64]) -> Result<C64, String> {
    let one = |v: C64| if a.len() == 1 { Ok(v) } else { Err(format!("{f} takes one argument")) };
    match f {
        "exp" => one(a[0].exp()),
        "sin" => one(a[0].sin()),
        "cos" => one(a[0].cos()),
        "sqrt" => one(a[0].sqrt()),
        "abs" => one(C64::new(a[0].norm(), 0.0)),
        "min" | "max" if a.len() == 2 => {
            let first = if f == "min" { a[0].re <= a[1].re } else { a[0].re >= a[1].re };
            Ok(if first { a[0] } else { a[1] })
        }
        _ => Err(format!("unknown function {f}")),
    }
}

/// Integer real exponents by repeated multiplication, real powers of
/// nonnegative reals, principal branch otherwise.
fn pow(a: C64, b: C64) -> C64 {
    if b.im == 0.0 && b.re == b.re.trunc() && b.re.abs() <= 64.0 {
        return a.powi(b.re as i32);
    }
    if a.im == 0.0 && a.re >= 0.0 && b.im == 0.0 {
        return C64::new(a.re.powf(b.re), 0.0);
    }
    a.powc(b)
}

/// Equal up to `rel` relative error; non-finite values must match in kind.
pub fn close(a: C64, b: C64, rel: f64) -> bool {
    let fin = |z: C64| z.re.is_finite() && z.im.is_finite();
    if !fin(a) || !fin(b) {
        return !fin(a) && !fin(b);
    }
    (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()))
}

pub const POINTS: [(f64, f64); 4] = [(0.5, -2.0), (0.0, 0.0), (1.25, 0.75), (-3.0, 2.5)];
