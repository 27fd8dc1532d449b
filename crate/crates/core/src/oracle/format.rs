//! Plain-text joint table format.
//!
//! ```text
//! # comments and blank lines are ignored
//! 3 2                 <- feature count, then class count or REG
//! 2 2 2               <- cardinalities
//! names x1 x2 x3      <- optional
//! 0 0 0 0 0.10125     <- classification: categories, class, probability
//! ```
//!
//! Regression rows are `categories probability mean variance`. Omitted rows
//! have probability zero; a row given twice is an error.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::table::{JointTable, TableTarget};

impl<T: Real> JointTable<T> {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hl, header) = lines.next().ok_or(Error::Parse { line: 0, message: "empty table file".into() })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(Error::Parse { line: hl, message: "header must be `d K` or `d REG`".into() });
        }
        let d: usize = parse_num(head[0], hl)?;
        let classes = if head[1].eq_ignore_ascii_case("REG") { None } else { Some(parse_num::<usize>(head[1], hl)?) };

        let (cl, card_line) = lines.next().ok_or(Error::Parse { line: hl, message: "missing cardinalities line".into() })?;
        let cards: Vec<usize> = card_line.split_whitespace().map(|t| parse_num(t, cl)).collect::<Result<_>>()?;
        if cards.len() != d {
            return Err(Error::Parse { line: cl, message: format!("expected {d} cardinalities, got {}", cards.len()) });
        }
        let configs: u128 = cards.iter().map(|&c| c as u128).product();
        if configs > super::table::MAX_CONFIGURATIONS {
            return Err(Error::EnumerationBound(configs));
        }
        let configs = configs as usize;
        let strides = {
            let mut s = vec![1usize; d];
            for i in (0..d.saturating_sub(1)).rev() {
                s[i] = s[i + 1] * cards[i + 1];
            }
            s
        };

        let mut names = None;
        let k = classes.unwrap_or(1);
        let mut prob = vec![0.0f64; configs * k];
        let mut mean = vec![0.0f64; if classes.is_none() { configs } else { 0 }];
        let mut var = mean.clone();
        let mut seen = vec![false; configs * k];

        for (ln, line) in lines {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens[0] == "names" {
                if names.is_some() {
                    return Err(Error::Parse { line: ln, message: "duplicate names line".into() });
                }
                names = Some(tokens[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>());
                continue;
            }
            let expected = d + if classes.is_some() { 2 } else { 3 };
            if tokens.len() != expected {
                return Err(Error::Parse { line: ln, message: format!("expected {expected} fields, got {}", tokens.len()) });
            }
            let mut config = 0;
            for i in 0..d {
                let c: usize = parse_num(tokens[i], ln)?;
                if c >= cards[i] {
                    return Err(Error::Parse { line: ln, message: format!("category {c} out of range for feature {i}") });
                }
                config += c * strides[i];
            }
            let cell = match classes {
                Some(k) => {
                    let y: usize = parse_num(tokens[d], ln)?;
                    if y >= k {
                        return Err(Error::Parse { line: ln, message: format!("class {y} out of range") });
                    }
                    prob[config * k + y] = parse_num(tokens[d + 1], ln)?;
                    config * k + y
                }
                None => {
                    prob[config] = parse_num(tokens[d], ln)?;
                    mean[config] = parse_num(tokens[d + 1], ln)?;
                    var[config] = parse_num(tokens[d + 2], ln)?;
                    config
                }
            };
            if std::mem::replace(&mut seen[cell], true) {
                return Err(Error::Parse { line: ln, message: "duplicate row".into() });
            }
        }

        let cast = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
        match classes {
            Some(k) => JointTable::classification(cards, k, cast(prob), names),
            None => JointTable::regression(cards, cast(prob), cast(mean), cast(var), names),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let d = self.feature_count();
        match self.target() {
            TableTarget::Classes { classes, .. } => writeln!(out, "{d} {classes}"),
            TableTarget::Regression { .. } => writeln!(out, "{d} REG"),
        }
        .expect("write to string");
        let cards: Vec<String> = self.cardinalities().iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", cards.join(" ")).expect("write to string");
        writeln!(out, "names {}", self.names().join(" ")).expect("write to string");
        let mut cats = vec![0; d];
        for c in 0..self.configuration_count() {
            self.decode(c, &mut cats);
            let key: Vec<String> = cats.iter().map(|v| v.to_string()).collect();
            let key = key.join(" ");
            match self.target() {
                TableTarget::Classes { classes, prob } => {
                    for y in 0..*classes {
                        writeln!(out, "{key} {y} {}", prob[c * classes + y].as_f64()).expect("write to string");
                    }
                }
                TableTarget::Regression { prob, mean, var } => {
                    writeln!(out, "{key} {} {} {}", prob[c].as_f64(), mean[c].as_f64(), var[c].as_f64())
                        .expect("write to string");
                }
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn parse_num<N: std::str::FromStr>(token: &str, line: usize) -> Result<N> {
    token.parse().map_err(|_| Error::Parse { line, message: format!("invalid number '{token}'") })
}
