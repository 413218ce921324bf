//! Relational-algebra operators. Every operator returns a fresh relation
//! satisfying all relation invariants (closure), checked in debug builds.

use std::collections::HashMap;

use super::error::KernelError;
use super::expr::ScalarExpr;
use super::relation::{Attribute, Header, Relation, Tuple};
use super::scalar::{Kind, Scalar};

fn debug_validate(rel: &Relation) -> &Relation {
    debug_assert!(rel.validate().is_ok(), "operator result violates relation invariants");
    rel
}

/// Restriction: keeps the tuples satisfying `pred`. The predicate must be
/// total over the header (every referenced attribute exists).
pub fn r_select(rel: &Relation, pred: &ScalarExpr) -> Result<Relation, KernelError> {
    pred.check_total(rel.header())?;
    let mut out = Relation::empty_with_key(rel.header().clone(), rel.key().map(|k| k.to_vec()))?;
    for tuple in rel.tuples() {
        if pred.eval_predicate(rel.header(), tuple)? {
            out.insert_unchecked(tuple.clone())?;
        }
    }
    debug_validate(&out);
    Ok(out)
}

/// Projection onto `attrs` in the given order; duplicates collapse.
pub fn r_project(rel: &Relation, attrs: &[String]) -> Result<Relation, KernelError> {
    if attrs.is_empty() {
        return Err(KernelError::EmptyHeader);
    }
    let mut positions = Vec::with_capacity(attrs.len());
    let mut out_attrs = Vec::with_capacity(attrs.len());
    for name in attrs {
        let idx = rel
            .header()
            .position(name)
            .ok_or_else(|| KernelError::UnknownAttribute(name.clone()))?;
        positions.push(idx);
        out_attrs.push(rel.header().attributes()[idx].clone());
    }
    let header = Header::new(out_attrs)?;
    let mut out = Relation::empty(header);
    for tuple in rel.tuples() {
        out.insert_unchecked(positions.iter().map(|&i| tuple[i].clone()).collect())?;
    }
    debug_validate(&out);
    Ok(out)
}

/// Equijoin on `(left attr, right attr)` pairs. The result header is the
/// concatenation of both headers; colliding right-side names get a prefix.
/// Tuples with NULL in any join attribute never match.
pub fn r_join(
    left: &Relation,
    right: &Relation,
    on: &[(String, String)],
) -> Result<Relation, KernelError> {
    let mut pairs = Vec::with_capacity(on.len());
    for (l, r) in on {
        let li = left
            .header()
            .position(l)
            .ok_or_else(|| KernelError::UnknownAttribute(l.clone()))?;
        let ri = right
            .header()
            .position(r)
            .ok_or_else(|| KernelError::UnknownAttribute(r.clone()))?;
        let lk = &left.header().attributes()[li].kind;
        let rk = &right.header().attributes()[ri].kind;
        if lk != rk {
            return Err(KernelError::KindMismatch(format!(
                "join attributes `{l}` ({lk}) and `{r}` ({rk}) differ in kind"
            )));
        }
        pairs.push((li, ri));
    }

    let mut attrs: Vec<Attribute> = left.header().attributes().to_vec();
    for attr in right.header().attributes() {
        let mut name = attr.name.clone();
        let mut n = 1;
        while attrs.iter().any(|a| a.name == name) {
            name = format!("r{n}.{}", attr.name);
            n += 1;
        }
        attrs.push(Attribute::new(name, attr.kind.clone()));
    }
    let header = Header::new(attrs)?;

    let mut out = Relation::empty(header);
    for lt in left.tuples() {
        if pairs.iter().any(|&(li, _)| lt[li].is_null()) {
            continue;
        }
        for rt in right.tuples() {
            let matches = pairs
                .iter()
                .all(|&(li, ri)| !rt[ri].is_null() && lt[li] == rt[ri]);
            if matches {
                let mut tuple = lt.clone();
                tuple.extend(rt.iter().cloned());
                out.insert_unchecked(tuple)?;
            }
        }
    }
    debug_validate(&out);
    Ok(out)
}

/// Set union; headers must be equal (names, kinds, order).
pub fn r_union(a: &Relation, b: &Relation) -> Result<Relation, KernelError> {
    if a.header() != b.header() {
        return Err(KernelError::HeaderMismatch(
            "union operands have different headers".into(),
        ));
    }
    let mut out = Relation::empty(a.header().clone());
    for tuple in a.tuples().iter().chain(b.tuples()) {
        out.insert_unchecked(tuple.clone())?;
    }
    debug_validate(&out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFn {
    Sum,
    Count,
    Min,
    Max,
    Avg,
}

impl AggFn {
    pub fn name(&self) -> &'static str {
        match self {
            AggFn::Sum => "SUM",
            AggFn::Count => "COUNT",
            AggFn::Min => "MIN",
            AggFn::Max => "MAX",
            AggFn::Avg => "AVG",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Aggregate {
    pub func: AggFn,
    pub attr: String,
    pub out_name: String,
}

/// Grouping with aggregation. One result tuple per distinct group-by
/// combination; with an empty `group_by` there is exactly one global group,
/// present even over an empty input. NULLs are excluded from aggregation
/// input; SUM/MIN/MAX/AVG of an all-NULL group are NULL, COUNT is 0.
pub fn r_aggregate(
    rel: &Relation,
    group_by: &[String],
    aggs: &[Aggregate],
) -> Result<Relation, KernelError> {
    let mut group_positions = Vec::with_capacity(group_by.len());
    let mut out_attrs: Vec<Attribute> = Vec::new();
    for name in group_by {
        let idx = rel
            .header()
            .position(name)
            .ok_or_else(|| KernelError::UnknownAttribute(name.clone()))?;
        group_positions.push(idx);
        out_attrs.push(rel.header().attributes()[idx].clone());
    }

    let mut agg_positions = Vec::with_capacity(aggs.len());
    for agg in aggs {
        let idx = rel
            .header()
            .position(&agg.attr)
            .ok_or_else(|| KernelError::UnknownAttribute(agg.attr.clone()))?;
        let in_kind = &rel.header().attributes()[idx].kind;
        let out_kind = aggregate_kind(agg.func, in_kind)?;
        if out_attrs.iter().any(|a| a.name == agg.out_name) {
            return Err(KernelError::DuplicateOutName(agg.out_name.clone()));
        }
        out_attrs.push(Attribute::new(agg.out_name.clone(), out_kind));
        agg_positions.push(idx);
    }

    let header = Header::new(out_attrs)?;
    let mut groups: Vec<(Tuple, Vec<Vec<Scalar>>)> = Vec::new();
    let mut index: HashMap<Tuple, usize> = HashMap::new();
    if group_by.is_empty() {
        groups.push((Vec::new(), vec![Vec::new(); aggs.len()]));
    }
    for tuple in rel.tuples() {
        let key: Tuple = group_positions.iter().map(|&i| tuple[i].clone()).collect();
        let slot = if group_by.is_empty() {
            0
        } else {
            *index.entry(key.clone()).or_insert_with(|| {
                groups.push((key.clone(), vec![Vec::new(); aggs.len()]));
                groups.len() - 1
            })
        };
        for (ai, &pos) in agg_positions.iter().enumerate() {
            if !tuple[pos].is_null() {
                groups[slot].1[ai].push(tuple[pos].clone());
            }
        }
    }

    let mut out = Relation::empty(header);
    for (key, collected) in groups {
        let mut tuple = key;
        for (agg, values) in aggs.iter().zip(collected) {
            tuple.push(fold_aggregate(agg.func, &values)?);
        }
        out.insert_unchecked(tuple)?;
    }
    debug_validate(&out);
    Ok(out)
}

fn aggregate_kind(func: AggFn, input: &Kind) -> Result<Kind, KernelError> {
    match func {
        AggFn::Count => Ok(Kind::Integer),
        AggFn::Avg => {
            if input.is_numeric() {
                Ok(Kind::Float)
            } else {
                Err(KernelError::KindMismatch(format!("AVG over {input}")))
            }
        }
        AggFn::Sum => {
            if input.is_numeric() {
                Ok(input.clone())
            } else {
                Err(KernelError::KindMismatch(format!("SUM over {input}")))
            }
        }
        AggFn::Min | AggFn::Max => {
            if input.is_ordered() {
                Ok(input.clone())
            } else {
                Err(KernelError::KindMismatch(format!("{} over {input}", func.name())))
            }
        }
    }
}

fn fold_aggregate(func: AggFn, values: &[Scalar]) -> Result<Scalar, KernelError> {
    match func {
        AggFn::Count => Ok(Scalar::Integer(values.len() as i64)),
        AggFn::Sum => {
            if values.is_empty() {
                return Ok(Scalar::Null);
            }
            match values[0] {
                Scalar::Integer(_) => {
                    let mut total: i64 = 0;
                    for v in values {
                        if let Scalar::Integer(i) = v {
                            total = total
                                .checked_add(*i)
                                .ok_or_else(|| KernelError::Arithmetic("SUM overflow".into()))?;
                        }
                    }
                    Ok(Scalar::Integer(total))
                }
                _ => {
                    let mut total = 0.0;
                    for v in values {
                        if let Scalar::Float(f) = v {
                            total += f;
                        }
                    }
                    Scalar::float(total)
                }
            }
        }
        AggFn::Avg => {
            if values.is_empty() {
                return Ok(Scalar::Null);
            }
            let mut total = 0.0;
            for v in values {
                match v {
                    Scalar::Integer(i) => total += *i as f64,
                    Scalar::Float(f) => total += f,
                    _ => {}
                }
            }
            Scalar::float(total / values.len() as f64)
        }
        AggFn::Min | AggFn::Max => {
            let mut best: Option<&Scalar> = None;
            for v in values {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        let keep_new = if func == AggFn::Min {
                            v.total_cmp(b).is_lt()
                        } else {
                            v.total_cmp(b).is_gt()
                        };
                        if keep_new {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            Ok(best.cloned().unwrap_or(Scalar::Null))
        }
    }
}

/// Renames attributes (internal plumbing for query compilation).
pub fn rename_attrs(rel: &Relation, renames: &[(String, String)]) -> Result<Relation, KernelError> {
    let mut attrs = rel.header().attributes().to_vec();
    for (from, to) in renames {
        let idx = rel
            .header()
            .position(from)
            .ok_or_else(|| KernelError::UnknownAttribute(from.clone()))?;
        attrs[idx].name = to.clone();
    }
    let header = Header::new(attrs)?;
    let mut out = Relation::empty(header);
    for tuple in rel.tuples() {
        out.insert_unchecked(tuple.clone())?;
    }
    debug_validate(&out);
    Ok(out)
}
