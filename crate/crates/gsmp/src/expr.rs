//! Reads function expressions from s-expression text.
//!
//! ```text
//! F ::= one | (prop "p") | (min F F) | (clamp a b F) | (int G)
//! G ::= (L F t) | (min G G) | (clamp a b G)
//! ```
//! A bare symbol or string `p` is shorthand for `(prop "p")`. Lines starting
//! with `;` are comments.

use gsmp_core::logic::{FExpr, GExpr};
use lexpr::Value;

use crate::formats::FormatError;

fn head(v: &Value) -> Option<(&str, Vec<&Value>)> {
    let mut it = v.list_iter()?;
    let name = it.next()?.as_symbol()?;
    Some((name, it.collect()))
}

fn number(source: &str, v: &Value) -> Result<f64, FormatError> {
    v.as_f64().ok_or_else(|| FormatError::new(source, format!("expected a number, got `{v}`")))
}

fn arity(source: &str, name: &str, args: &[&Value], n: usize) -> Result<(), FormatError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(FormatError::new(source, format!("`{name}` takes {n} arguments, got {}", args.len())))
    }
}

fn f_expr(source: &str, v: &Value) -> Result<FExpr, FormatError> {
    if let Some(s) = v.as_symbol() {
        return Ok(if s == "one" { FExpr::One } else { FExpr::prop(s) });
    }
    if let Some(s) = v.as_str() {
        return Ok(FExpr::prop(s));
    }
    if let Some(n) = v.as_f64() {
        if n == 1.0 {
            return Ok(FExpr::One);
        }
    }
    let (name, args) = head(v).ok_or_else(|| FormatError::new(source, format!("not a function expression: `{v}`")))?;
    match name {
        "prop" => {
            arity(source, name, &args, 1)?;
            let p = args[0]
                .as_str()
                .or_else(|| args[0].as_symbol())
                .ok_or_else(|| FormatError::new(source, format!("proposition must be a name, got `{}`", args[0])))?;
            Ok(FExpr::prop(p))
        }
        "min" => {
            arity(source, name, &args, 2)?;
            Ok(f_expr(source, args[0])?.min(f_expr(source, args[1])?))
        }
        "clamp" => {
            arity(source, name, &args, 3)?;
            Ok(f_expr(source, args[2])?.clamp(number(source, args[0])?, number(source, args[1])?))
        }
        "not" => {
            arity(source, name, &args, 1)?;
            Ok(f_expr(source, args[0])?.not())
        }
        "int" => {
            arity(source, name, &args, 1)?;
            Ok(FExpr::integral(g_expr(source, args[0])?))
        }
        other => Err(FormatError::new(source, format!("unknown function form `{other}`"))),
    }
}

fn g_expr(source: &str, v: &Value) -> Result<GExpr, FormatError> {
    let (name, args) = head(v).ok_or_else(|| FormatError::new(source, format!("not a trace expression: `{v}`")))?;
    match name {
        "L" => {
            arity(source, name, &args, 2)?;
            Ok(GExpr::l(f_expr(source, args[0])?, number(source, args[1])?))
        }
        "min" => {
            arity(source, name, &args, 2)?;
            Ok(g_expr(source, args[0])?.min(g_expr(source, args[1])?))
        }
        "clamp" => {
            arity(source, name, &args, 3)?;
            Ok(g_expr(source, args[2])?.clamp(number(source, args[0])?, number(source, args[1])?))
        }
        other => Err(FormatError::new(source, format!("unknown trace form `{other}`"))),
    }
}

/// Every top-level expression in `text`, validated.
pub fn parse_exprs(source: &str, text: &str) -> Result<Vec<FExpr>, FormatError> {
    let mut parser = lexpr::Parser::from_str(text);
    let mut out = Vec::new();
    loop {
        match parser.next_value() {
            Ok(Some(v)) => {
                let e = f_expr(source, &v)?;
                e.validate()
                    .map_err(|err| FormatError::new(source, format!("expression {}: {err}", out.len() + 1)))?;
                out.push(e);
            }
            Ok(None) => break,
            Err(e) => {
                return Err(match e.location() {
                    Some(l) => FormatError::at(source, l.line(), l.column(), e.to_string()),
                    None => FormatError::new(source, e.to_string()),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(FormatError::new(source, "no expressions found"));
    }
    Ok(out)
}
