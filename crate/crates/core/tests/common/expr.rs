//! Evaluates the exact arithmetic expressions of the hand worksheet:
//! numbers, `+ - * /`, parentheses and `sqrt(...)`.

pub fn eval(s: &str) -> f64 {
    let tokens: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut p = Parser { t: &tokens, i: 0 };
    let v = p.sum();
    assert_eq!(p.i, tokens.len(), "trailing input in {s:?}");
    v
}

struct Parser<'a> {
    t: &'a [char],
    i: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.t.get(self.i).copied()
    }

    fn sum(&mut self) -> f64 {
        let mut v = self.product();
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.i += 1;
            let r = self.product();
            v = if c == '+' { v + r } else { v - r };
        }
        v
    }

    fn product(&mut self) -> f64 {
        let mut v = self.unary();
        while let Some(c @ ('*' | '/')) = self.peek() {
            self.i += 1;
            let r = self.unary();
            v = if c == '*' { v * r } else { v / r };
        }
        v
    }

    fn unary(&mut self) -> f64 {
        if self.peek() == Some('-') {
            self.i += 1;
            return -self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> f64 {
        if self.t[self.i..].starts_with(&['s', 'q', 'r', 't', '(']) {
            self.i += 4;
            return self.atom().sqrt();
        }
        if self.peek() == Some('(') {
            self.i += 1;
            let v = self.sum();
            assert_eq!(self.peek(), Some(')'));
            self.i += 1;
            return v;
        }
        let start = self.i;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.' || c == 'e') {
            self.i += 1;
        }
        let text: String = self.t[start..self.i].iter().collect();
        text.parse()
            .unwrap_or_else(|_| panic!("bad number {text:?}"))
    }
}
