use super::ast::{Expr, Func, Var};
use super::ExprError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> ExprError {
    ExprError::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

fn tokenize(text: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
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
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s
                .parse()
                .map_err(|_| err(line, col0 + start, format!("bad number `{s}`")))?;
            out.push((Tok::Num(v), col0 + start));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col0 + start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), col0 + i));
            i += 1;
        } else {
            return Err(err(line, col0 + i, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.1)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(err(self.line, self.col(), msg))
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.fail(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                let k = *v as i32;
                self.pos += 1;
                Ok(Expr::Pow(Box::new(base), if neg { -k } else { k }))
            }
            _ => self.fail("exponent must be an integer literal"),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let col = self.col();
        let Some(tok) = self.peek().cloned() else {
            return self.fail("unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.expect('(')?;
                    let a = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::Func(f, Box::new(a)));
                }
                if name == "min" || name == "max" {
                    self.expect('(')?;
                    let a = Box::new(self.expr()?);
                    self.expect(',')?;
                    let b = Box::new(self.expr()?);
                    self.expect(')')?;
                    return Ok(if name == "min" {
                        Expr::Min(a, b)
                    } else {
                        Expr::Max(a, b)
                    });
                }
                parse_var(&name)
                    .map(Expr::Var)
                    .ok_or_else(|| err(self.line, col, format!("unknown identifier `{name}`")))
            }
            Tok::Sym(c) => Err(err(self.line, col, format!("unexpected `{c}`"))),
        }
    }
}

fn parse_var(name: &str) -> Option<Var> {
    let (head, idx) = name.split_at(1);
    let i: usize = idx.parse().ok()?;
    if i == 0 || idx.starts_with('0') {
        return None;
    }
    match head {
        "x" => Some(Var::X(i - 1)),
        "y" => Some(Var::Y(i - 1)),
        _ => None,
    }
}

/// Parses an expression that sits at `(line, col0)` of an enclosing file.
pub fn parse_expr_at(text: &str, line: usize, col0: usize) -> Result<Expr, ExprError> {
    let toks = tokenize(text, line, col0)?;
    let mut lx = Lexer {
        toks,
        pos: 0,
        line,
        end_col: col0 + text.chars().count(),
    };
    let e = lx.expr()?;
    if lx.pos != lx.toks.len() {
        return lx.fail("trailing input");
    }
    Ok(e)
}

pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    parse_expr_at(text, 1, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = parse_expr("-y1^2 + 3*x1").unwrap();
        assert_eq!(e.to_string(), "-y1^2 + 3 * x1");
        assert_eq!(e.eval(&[1.0], &[2.0]).unwrap(), -1.0);
    }

    #[test]
    fn reports_column() {
        match parse_expr("y1 + $") {
            Err(ExprError::Parse { col, .. }) => assert_eq!(col, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_fractional_power() {
        assert!(parse_expr("y1^0.5").is_err());
        assert!(parse_expr("z1").is_err());
        assert!(parse_expr("y0").is_err());
    }

    #[test]
    fn negative_exponent() {
        let e = parse_expr("y1^-2").unwrap();
        assert_eq!(e, Expr::Pow(Box::new(Expr::Var(Var::Y(0))), -2));
        assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
    }
}
