//! Scalar expressions evaluated against a tuple under a header.
//!
//! NULL logic is two-valued: any comparison involving NULL is false except
//! IS NULL / IS NOT NULL; NULL propagates through arithmetic.

use super::error::KernelError;
use super::relation::{Header, Tuple};
use super::scalar::{Kind, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Attr(String),
    Const(Scalar),
    Cmp(CmpOp, Box<ScalarExpr>, Box<ScalarExpr>),
    Arith(ArithOp, Box<ScalarExpr>, Box<ScalarExpr>),
    Neg(Box<ScalarExpr>),
    IsNull(Box<ScalarExpr>),
    IsNotNull(Box<ScalarExpr>),
    And(Box<ScalarExpr>, Box<ScalarExpr>),
    Or(Box<ScalarExpr>, Box<ScalarExpr>),
    Not(Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn attr(name: impl Into<String>) -> ScalarExpr {
        ScalarExpr::Attr(name.into())
    }

    pub fn value(v: Scalar) -> ScalarExpr {
        ScalarExpr::Const(v)
    }

    pub fn eq(self, other: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Cmp(CmpOp::Eq, Box::new(self), Box::new(other))
    }

    pub fn and(self, other: ScalarExpr) -> ScalarExpr {
        ScalarExpr::And(Box::new(self), Box::new(other))
    }

    /// All attribute names referenced by the expression.
    pub fn attributes(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_attrs(&mut out);
        out
    }

    fn collect_attrs(&self, out: &mut Vec<String>) {
        match self {
            ScalarExpr::Attr(name) => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            ScalarExpr::Const(_) => {}
            ScalarExpr::Cmp(_, a, b) | ScalarExpr::Arith(_, a, b) => {
                a.collect_attrs(out);
                b.collect_attrs(out);
            }
            ScalarExpr::And(a, b) | ScalarExpr::Or(a, b) => {
                a.collect_attrs(out);
                b.collect_attrs(out);
            }
            ScalarExpr::Neg(e) | ScalarExpr::IsNull(e) | ScalarExpr::IsNotNull(e) | ScalarExpr::Not(e) => {
                e.collect_attrs(out)
            }
        }
    }

    /// Checks that every referenced attribute exists in the header.
    pub fn check_total(&self, header: &Header) -> Result<(), KernelError> {
        for name in self.attributes() {
            if header.position(&name).is_none() {
                return Err(KernelError::UnknownAttribute(name));
            }
        }
        Ok(())
    }

    pub fn eval(&self, header: &Header, tuple: &Tuple) -> Result<Scalar, KernelError> {
        match self {
            ScalarExpr::Attr(name) => {
                let idx = header
                    .position(name)
                    .ok_or_else(|| KernelError::UnknownAttribute(name.clone()))?;
                Ok(tuple[idx].clone())
            }
            ScalarExpr::Const(v) => Ok(v.clone()),
            ScalarExpr::Cmp(op, a, b) => {
                let left = a.eval(header, tuple)?;
                let right = b.eval(header, tuple)?;
                compare(*op, &left, &right)
            }
            ScalarExpr::Arith(op, a, b) => {
                let left = a.eval(header, tuple)?;
                let right = b.eval(header, tuple)?;
                arith(*op, &left, &right)
            }
            ScalarExpr::Neg(e) => match e.eval(header, tuple)? {
                Scalar::Null => Ok(Scalar::Null),
                Scalar::Integer(i) => i
                    .checked_neg()
                    .map(Scalar::Integer)
                    .ok_or_else(|| KernelError::Arithmetic("integer overflow".into())),
                Scalar::Float(f) => Scalar::float(-f),
                other => Err(KernelError::KindMismatch(format!(
                    "cannot negate {}",
                    kind_name(&other)
                ))),
            },
            ScalarExpr::IsNull(e) => Ok(Scalar::Boolean(e.eval(header, tuple)?.is_null())),
            ScalarExpr::IsNotNull(e) => Ok(Scalar::Boolean(!e.eval(header, tuple)?.is_null())),
            ScalarExpr::And(a, b) => {
                let left = truthy(a.eval(header, tuple)?)?;
                if !left {
                    return Ok(Scalar::Boolean(false));
                }
                Ok(Scalar::Boolean(truthy(b.eval(header, tuple)?)?))
            }
            ScalarExpr::Or(a, b) => {
                let left = truthy(a.eval(header, tuple)?)?;
                if left {
                    return Ok(Scalar::Boolean(true));
                }
                Ok(Scalar::Boolean(truthy(b.eval(header, tuple)?)?))
            }
            ScalarExpr::Not(e) => Ok(Scalar::Boolean(!truthy(e.eval(header, tuple)?)?)),
        }
    }

    /// Evaluates the expression as a predicate: NULL counts as false.
    pub fn eval_predicate(&self, header: &Header, tuple: &Tuple) -> Result<bool, KernelError> {
        truthy(self.eval(header, tuple)?)
    }
}

/// Two-valued coercion: NULL is false; non-boolean values are a typing error.
fn truthy(value: Scalar) -> Result<bool, KernelError> {
    match value {
        Scalar::Boolean(b) => Ok(b),
        Scalar::Null => Ok(false),
        other => Err(KernelError::KindMismatch(format!(
            "predicate evaluated to {}, expected BOOLEAN",
            kind_name(&other)
        ))),
    }
}

fn kind_name(v: &Scalar) -> String {
    match v.value_kind() {
        Some(Kind::Ref(_)) => "REF".to_string(),
        Some(k) => k.to_string(),
        None => "NULL".to_string(),
    }
}

/// Comparison: NULL on either side yields false; kinds must agree, with
/// INTEGER/FLOAT promoted for mixed numeric comparisons.
pub fn compare(op: CmpOp, left: &Scalar, right: &Scalar) -> Result<Scalar, KernelError> {
    if left.is_null() || right.is_null() {
        return Ok(Scalar::Boolean(false));
    }
    let ordering = match (left, right) {
        (Scalar::Integer(a), Scalar::Integer(b)) => a.partial_cmp(b),
        (Scalar::Float(a), Scalar::Float(b)) => a.partial_cmp(b),
        (Scalar::Integer(a), Scalar::Float(b)) => (*a as f64).partial_cmp(b),
        (Scalar::Float(a), Scalar::Integer(b)) => a.partial_cmp(&(*b as f64)),
        (Scalar::String(a), Scalar::String(b)) => a.partial_cmp(b),
        (Scalar::Datetime(a), Scalar::Datetime(b)) => a.partial_cmp(b),
        (Scalar::Boolean(a), Scalar::Boolean(b)) if matches!(op, CmpOp::Eq | CmpOp::Ne) => {
            a.partial_cmp(b)
        }
        (Scalar::Ref(a), Scalar::Ref(b)) if matches!(op, CmpOp::Eq | CmpOp::Ne) => a.partial_cmp(b),
        (a, b) => {
            return Err(KernelError::KindMismatch(format!(
                "cannot compare {} with {}",
                kind_name(a),
                kind_name(b)
            )))
        }
    };
    let Some(ordering) = ordering else {
        return Ok(Scalar::Boolean(false));
    };
    let result = match op {
        CmpOp::Eq => ordering.is_eq(),
        CmpOp::Ne => !ordering.is_eq(),
        CmpOp::Lt => ordering.is_lt(),
        CmpOp::Le => ordering.is_le(),
        CmpOp::Gt => ordering.is_gt(),
        CmpOp::Ge => ordering.is_ge(),
    };
    Ok(Scalar::Boolean(result))
}

/// Arithmetic: NULL propagates; INTEGER/FLOAT promote; overflow, division by
/// zero and NaN results are errors.
pub fn arith(op: ArithOp, left: &Scalar, right: &Scalar) -> Result<Scalar, KernelError> {
    if left.is_null() || right.is_null() {
        return Ok(Scalar::Null);
    }
    match (left, right) {
        (Scalar::Integer(a), Scalar::Integer(b)) => {
            let result = match op {
                ArithOp::Add => a.checked_add(*b),
                ArithOp::Sub => a.checked_sub(*b),
                ArithOp::Mul => a.checked_mul(*b),
                ArithOp::Div => {
                    if *b == 0 {
                        return Err(KernelError::Arithmetic("division by zero".into()));
                    }
                    a.checked_div(*b)
                }
            };
            result
                .map(Scalar::Integer)
                .ok_or_else(|| KernelError::Arithmetic("integer overflow".into()))
        }
        (a, b) => {
            let x = numeric(a)?;
            let y = numeric(b)?;
            let value = match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => x / y,
            };
            Scalar::float(value)
        }
    }
}

fn numeric(v: &Scalar) -> Result<f64, KernelError> {
    match v {
        Scalar::Integer(i) => Ok(*i as f64),
        Scalar::Float(f) => Ok(*f),
        other => Err(KernelError::KindMismatch(format!(
            "expected a numeric value, got {}",
            kind_name(other)
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::relation::Attribute;

    fn ctx() -> (Header, Tuple) {
        let header = Header::new(vec![
            Attribute::new("X", Kind::Integer),
            Attribute::new("S", Kind::String),
        ])
        .unwrap();
        (header, vec![Scalar::Integer(3), Scalar::Null])
    }

    #[test]
    fn null_comparisons_are_false() {
        let (h, t) = ctx();
        let pred = ScalarExpr::attr("S").eq(ScalarExpr::value(Scalar::str("a")));
        assert!(!pred.eval_predicate(&h, &t).unwrap());
        // even NULL = NULL is false
        let pred = ScalarExpr::value(Scalar::Null).eq(ScalarExpr::value(Scalar::Null));
        assert!(!pred.eval_predicate(&h, &t).unwrap());
    }

    #[test]
    fn is_null_sees_through() {
        let (h, t) = ctx();
        let pred = ScalarExpr::IsNull(Box::new(ScalarExpr::attr("S")));
        assert!(pred.eval_predicate(&h, &t).unwrap());
        let pred = ScalarExpr::IsNotNull(Box::new(ScalarExpr::attr("X")));
        assert!(pred.eval_predicate(&h, &t).unwrap());
    }

    #[test]
    fn arithmetic_propagates_null_and_promotes() {
        let (h, t) = ctx();
        let e = ScalarExpr::Arith(
            ArithOp::Add,
            Box::new(ScalarExpr::attr("S")),
            Box::new(ScalarExpr::value(Scalar::Integer(1))),
        );
        assert_eq!(e.eval(&h, &t).unwrap(), Scalar::Null);

        let e = ScalarExpr::Arith(
            ArithOp::Add,
            Box::new(ScalarExpr::value(Scalar::Integer(1))),
            Box::new(ScalarExpr::value(Scalar::Float(0.5))),
        );
        assert_eq!(e.eval(&h, &t).unwrap(), Scalar::Float(1.5));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let (h, t) = ctx();
        let e = ScalarExpr::Arith(
            ArithOp::Div,
            Box::new(ScalarExpr::value(Scalar::Integer(1))),
            Box::new(ScalarExpr::value(Scalar::Integer(0))),
        );
        assert!(matches!(e.eval(&h, &t), Err(KernelError::Arithmetic(_))));
    }

    #[test]
    fn mismatched_kinds_error() {
        let (h, t) = ctx();
        let e = ScalarExpr::attr("X").eq(ScalarExpr::value(Scalar::str("3")));
        assert!(matches!(e.eval(&h, &t), Err(KernelError::KindMismatch(_))));
    }
}
