//! Expressions for forms in 1-based basis notation.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '^' | '/') unary)*
//! unary  := ('+' | '-') unary | atom
//! atom   := number | 'sqrt' '(' expr ')' | '(' expr ')' | monomial
//! monomial := 'e' digit+ | 'e{' int (',' int)* '}'
//! ```
//!
//! `*` and `^` both multiply (wedge for forms); `/` divides by a scalar. Digits after `e`
//! are single indices, so `e21` is `-e12`.

use crate::algebra::Form;
use crate::error::ParseError;

#[derive(Clone, Debug)]
enum Value {
    Scalar(f64),
    Form(Form),
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

pub fn parse_form(dim: usize, src: &str) -> Result<Form, ParseError> {
    match parse_value(dim, src)? {
        Value::Form(f) => Ok(f),
        Value::Scalar(s) => Ok(Form::scalar(dim, s)),
    }
}

/// Parses a form of a known degree; a scalar `0` is accepted as the zero form.
pub fn parse_form_degree(dim: usize, degree: usize, src: &str) -> Result<Form, ParseError> {
    match parse_value(dim, src)? {
        Value::Form(f) if f.degree() == degree => Ok(f),
        Value::Scalar(s) if s == 0.0 => Ok(Form::zero(dim, degree)),
        Value::Scalar(s) if degree == 0 => Ok(Form::scalar(dim, s)),
        other => Err(ParseError::Syntax {
            input: src.to_string(),
            offset: 0,
            message: format!(
                "expected a {degree}-form, got {}",
                match other {
                    Value::Form(f) => format!("a {}-form", f.degree()),
                    Value::Scalar(_) => "a nonzero scalar".into(),
                }
            ),
        }),
    }
}

pub fn parse_scalar(src: &str) -> Result<f64, ParseError> {
    match parse_value(8, src)? {
        Value::Scalar(s) => Ok(s),
        Value::Form(_) => Err(ParseError::Syntax {
            input: src.into(),
            offset: 0,
            message: "expected a number".into(),
        }),
    }
}

fn parse_value(dim: usize, src: &str) -> Result<Value, ParseError> {
    let mut p = Parser {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        dim,
    };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(v)
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            input: self.src.to_string(),
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.term()?;
        loop {
            let sign = match self.peek() {
                Some(b'+') => 1.0,
                Some(b'-') => -1.0,
                _ => return Ok(acc),
            };
            self.pos += 1;
            let rhs = self.term()?;
            acc = self.add(acc, rhs, sign)?;
        }
    }

    fn term(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') | Some(b'^') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = self.mul(acc, rhs)?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    match rhs {
                        Value::Scalar(s) if s != 0.0 => {
                            acc = self.mul(acc, Value::Scalar(1.0 / s))?
                        }
                        Value::Scalar(_) => return Err(self.error("division by zero")),
                        Value::Form(_) => return Err(self.error("division by a form")),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Value, ParseError> {
        if self.eat(b'-') {
            let v = self.unary()?;
            return self.mul(Value::Scalar(-1.0), v);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(b's') if self.src[self.pos..].starts_with("sqrt") => {
                self.pos += 4;
                if !self.eat(b'(') {
                    return Err(self.error("expected '(' after sqrt"));
                }
                let v = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                match v {
                    Value::Scalar(s) if s >= 0.0 => Ok(Value::Scalar(s.sqrt())),
                    Value::Scalar(_) => Err(self.error("sqrt of a negative number")),
                    Value::Form(_) => Err(self.error("sqrt of a form")),
                }
            }
            Some(b'e') => self.monomial(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Value, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // Optional exponent, e.g. 1e-3; an 'e' followed by a digit directly after a number
        // would be ambiguous with a monomial, so only a signed exponent is accepted.
        if self.pos + 1 < self.bytes.len()
            && (self.bytes[self.pos] == b'E'
                || (self.bytes[self.pos] == b'e'
                    && matches!(self.bytes[self.pos + 1], b'-' | b'+')))
        {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.bytes[self.pos], b'-' | b'+') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Value::Scalar)
            .map_err(|_| ParseError::Syntax {
                input: self.src.into(),
                offset: start,
                message: "bad number".into(),
            })
    }

    fn monomial(&mut self) -> Result<Value, ParseError> {
        self.pos += 1;
        let mut idx = Vec::new();
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'{' {
            self.pos += 1;
            loop {
                self.skip_ws();
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Err(self.error("expected an index"));
                }
                idx.push(self.src[start..self.pos].parse::<usize>().unwrap());
                if self.eat(b',') {
                    continue;
                }
                if self.eat(b'}') {
                    break;
                }
                return Err(self.error("expected ',' or '}'"));
            }
        } else {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                idx.push((self.bytes[self.pos] - b'0') as usize);
                self.pos += 1;
            }
            if idx.is_empty() {
                return Err(self.error("expected basis indices after 'e'"));
            }
        }
        for &i in &idx {
            if i == 0 || i > self.dim {
                return Err(ParseError::Index {
                    index: i,
                    dim: self.dim,
                });
            }
        }
        let start = self.pos;
        for (k, i) in idx.iter().enumerate() {
            if idx[..k].contains(i) {
                return Err(ParseError::Syntax {
                    input: self.src.to_string(),
                    offset: start,
                    message: format!("index {i} repeated in a monomial"),
                });
            }
        }
        let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
        Ok(Value::Form(Form::monomial(self.dim, &zero_based)))
    }

    fn add(&self, a: Value, b: Value, sign: f64) -> Result<Value, ParseError> {
        match (a, b) {
            (Value::Scalar(x), Value::Scalar(y)) => Ok(Value::Scalar(x + sign * y)),
            (Value::Form(f), Value::Form(g)) if f.degree() == g.degree() => {
                Ok(Value::Form(&f + &g.scaled(sign)))
            }
            (Value::Form(f), Value::Scalar(0.0)) => Ok(Value::Form(f)),
            (Value::Scalar(0.0), Value::Form(g)) => Ok(Value::Form(g.scaled(sign))),
            _ => Err(self.error("sum of forms of different degree")),
        }
    }

    fn mul(&self, a: Value, b: Value) -> Result<Value, ParseError> {
        match (a, b) {
            (Value::Scalar(x), Value::Scalar(y)) => Ok(Value::Scalar(x * y)),
            (Value::Scalar(x), Value::Form(f)) | (Value::Form(f), Value::Scalar(x)) => {
                Ok(Value::Form(f.scaled(x)))
            }
            (Value::Form(f), Value::Form(g)) => {
                if f.degree() + g.degree() > self.dim {
                    return Err(self.error("wedge product exceeds the dimension"));
                }
                Ok(Value::Form(f.wedge(&g)))
            }
        }
    }
}

impl Form {
    /// Parses a form written in 1-based basis notation, e.g. `e12 + 2*sqrt(2)*e{3,4}`.
    pub fn parse(dim: usize, src: &str) -> Result<Form, ParseError> {
        parse_form(dim, src)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversed_indices_flip_sign() {
        assert_eq!(
            parse_form(7, "e21").unwrap(),
            parse_form(7, "-e12").unwrap()
        );
        assert_eq!(
            parse_form(7, "e{2,1}").unwrap(),
            parse_form(7, "-e12").unwrap()
        );
    }

    #[test]
    fn coefficients_and_fractions() {
        let f = parse_form(7, "2*sqrt(2)*e12 - (2/3)*sqrt(6)*(e34+e56)").unwrap();
        assert!((f.coeff(&[0, 1]) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((f.coeff(&[2, 3]) + 2.0 / 3.0 * 6f64.sqrt()).abs() < 1e-15);
        assert!((f.coeff(&[4, 5]) + 2.0 / 3.0 * 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wedge_products() {
        let f = parse_form(7, "(e12+e34)^e7").unwrap();
        assert_eq!(f, parse_form(7, "e127+e347").unwrap());
        let g = parse_form(4, "e1*e2 + e3^e4").unwrap();
        assert_eq!(g, parse_form(4, "e12+e34").unwrap());
    }

    #[test]
    fn errors_are_reported() {
        assert!(matches!(
            parse_form(7, "e18"),
            Err(ParseError::Index { index: 8, dim: 7 })
        ));
        assert!(parse_form(7, "e12 + e3").is_err());
        assert!(parse_form(7, "e12 +").is_err());
        assert!(parse_form(7, "e12/e3").is_err());
        assert!(matches!(
            parse_form(7, "e11"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(parse_form(7, "e{1,2,1}").is_err());
        assert!(parse_form_degree(7, 2, "0").unwrap().is_zero(0.0));
        assert!(parse_form_degree(7, 2, "e1").is_err());
    }

    #[test]
    fn scientific_numbers() {
        assert_eq!(parse_scalar("1.5e-3").unwrap(), 1.5e-3);
        assert_eq!(parse_scalar("-3/4").unwrap(), -0.75);
    }
}
