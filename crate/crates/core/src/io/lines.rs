use std::str::FromStr;

use crate::error::{Error, Result};

/// Line reader for the text formats: skips blank lines and `#` comments,
/// tracks 1-based line numbers for errors.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    pub line: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    pub fn next_line(&mut self) -> Option<&'a str> {
        for (i, raw) in self.inner.by_ref() {
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            self.line = i + 1;
            return Some(l);
        }
        None
    }

    pub fn expect_line(&mut self, what: &str) -> Result<&'a str> {
        self.next_line().ok_or_else(|| Error::Parse {
            line: self.line + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    pub fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    /// Parses `keyword value` and returns the value.
    pub fn keyed<T: FromStr>(&mut self, keyword: &str) -> Result<T> {
        let l = self.expect_line(keyword)?;
        let mut it = l.split_whitespace();
        if it.next() != Some(keyword) {
            return Err(self.err(format!("expected '{keyword}', got '{l}'")));
        }
        let v = it.next().ok_or_else(|| self.err(format!("missing value after '{keyword}'")))?;
        v.parse().map_err(|_| self.err(format!("bad value '{v}' for '{keyword}'")))
    }

    pub fn parse<T: FromStr>(&self, tok: Option<&str>, what: &str) -> Result<T> {
        let t = tok.ok_or_else(|| self.err(format!("missing {what}")))?;
        t.parse().map_err(|_| self.err(format!("bad {what} '{t}'")))
    }
}
