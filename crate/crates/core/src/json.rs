//! Canonical JSON encodings of exact scalars, vectors and product sets.
//!
//! A scalar is either a rational string (`"3"`, `"-1/2"`), a JSON integer,
//! or `{"order": L, "coeffs": [...]}` with φ(L) rational strings in the
//! power basis 1, ζ_L, ζ_L², ….

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, lcm_orders, parse_rational, CycNumber, CycVector};
use crate::states::{OPSet, ProductState};

pub fn scalar_to_json(x: &CycNumber) -> Value {
    if let Some(r) = x.as_rational() {
        return Value::String(format_rational(r));
    }
    let m = x.minimal_order();
    let x = if m == x.order() {
        x.clone()
    } else {
        reduce_order(x, m).unwrap_or_else(|| x.clone())
    };
    json!({
        "order": x.order(),
        "coeffs": x.coeffs().iter().map(format_rational).collect::<Vec<_>>(),
    })
}

/// Rewrites `x` over the subfield Q(ζ_m) when it lies there.
fn reduce_order(x: &CycNumber, m: u32) -> Option<CycNumber> {
    let l = x.order();
    let phi = crate::scalar::totient(m);
    // solve for the coefficients by matching the embedding of each basis power
    let basis: Vec<CycVector> = (0..phi)
        .map(|k| {
            let e = CycNumber::zeta_power((k as u32 * (l / m)) as i64, l);
            CycVector::new(1, e.coeffs().iter().map(|c| CycNumber::from_rational(c.clone(), 1)).collect())
                .expect("rational entries")
        })
        .collect();
    let target: Vec<CycNumber> = x.coeffs().iter().map(|c| CycNumber::from_rational(c.clone(), 1)).collect();
    // columns = basis vectors, augmented with target
    let rows = x.coeffs().len();
    let mut aug = crate::scalar::CycMatrix::zeros(rows, phi + 1, 1);
    for (k, b) in basis.iter().enumerate() {
        for r in 0..rows {
            aug.set(r, k, b.get(r).clone());
        }
    }
    for (r, t) in target.into_iter().enumerate() {
        aug.set(r, phi, t);
    }
    let (rref, pivots) = aug.rref();
    if pivots.contains(&phi) {
        return None;
    }
    let mut coeffs = vec![num_rational::BigRational::from_integer(0.into()); phi];
    for (row, &p) in pivots.iter().enumerate() {
        coeffs[p] = rref.get(row, phi).as_rational()?.clone();
    }
    CycNumber::from_coeffs(m, coeffs).ok()
}

pub fn scalar_from_json(v: &Value) -> Result<CycNumber> {
    match v {
        Value::String(s) => Ok(CycNumber::from_rational(parse_rational(s)?, 1)),
        Value::Number(n) => n
            .as_i64()
            .map(|i| CycNumber::from_int(i, 1))
            .ok_or_else(|| Error::InvalidScalar(format!("non-integer JSON number {n}; use a \"p/q\" string"))),
        Value::Object(o) => {
            let order = o
                .get("order")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::InvalidScalar("missing \"order\"".into()))?;
            let order = u32::try_from(order).map_err(|_| Error::InvalidOrder(order.to_string()))?;
            let coeffs = o
                .get("coeffs")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::InvalidScalar("missing \"coeffs\"".into()))?
                .iter()
                .map(|c| match c {
                    Value::String(s) => parse_rational(s),
                    Value::Number(n) => n
                        .as_i64()
                        .map(|i| num_rational::BigRational::from_integer(i.into()))
                        .ok_or_else(|| Error::InvalidScalar(n.to_string())),
                    other => Err(Error::InvalidScalar(other.to_string())),
                })
                .collect::<Result<Vec<_>>>()?;
            CycNumber::from_coeffs(order, coeffs)
        }
        other => Err(Error::InvalidScalar(other.to_string())),
    }
}

pub fn vector_to_json(v: &CycVector) -> Value {
    Value::Array(v.entries().iter().map(scalar_to_json).collect())
}

/// Parses a vector, promoting all entries to a common order.
pub fn vector_from_json(v: &Value) -> Result<CycVector> {
    let items = v
        .as_array()
        .ok_or_else(|| Error::InvalidScalar("expected an array of scalars".into()))?;
    let scalars = items.iter().map(scalar_from_json).collect::<Result<Vec<_>>>()?;
    let order = lcm_orders(scalars.iter().map(CycNumber::order));
    let entries = scalars
        .iter()
        .map(|s| s.promote(order))
        .collect::<Result<Vec<_>>>()?;
    CycVector::new(order, entries)
}

pub fn product_state_to_json(s: &ProductState, label: &str) -> Value {
    json!({
        "factors": s.factors().iter().map(vector_to_json).collect::<Vec<_>>(),
        "label": label,
    })
}

pub fn opset_to_json(set: &OPSet) -> Value {
    Value::Array(set.iter().map(|(s, l)| product_state_to_json(s, l)).collect())
}

/// Parses an OPSet array; dims are taken from the factor lengths.
pub fn opset_from_json(v: &Value) -> Result<OPSet> {
    let items = v
        .as_array()
        .ok_or_else(|| Error::InvalidScalar("expected an array of product states".into()))?;
    let mut states = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let factors = item
            .get("factors")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidScalar(format!("state {i}: missing \"factors\"")))?
            .iter()
            .map(vector_from_json)
            .collect::<Result<Vec<_>>>()?;
        let order = lcm_orders(factors.iter().map(CycVector::order));
        let factors = factors
            .iter()
            .map(|f| f.promote(order))
            .collect::<Result<Vec<_>>>()?;
        let label = item
            .get("label")
            .and_then(Value::as_str)
            .map_or_else(|| format!("state:{i}"), str::to_string);
        states.push((ProductState::new(factors)?, label));
    }
    let dims = states
        .first()
        .map(|(s, _)| s.dims())
        .ok_or_else(|| Error::Degenerate("empty product set".into()))?;
    OPSet::from_states(dims, states)
}

/// Pretty JSON with sorted object keys.
pub fn to_canonical_string(v: &Value) -> String {
    fn sort(v: &Value) -> Value {
        match v {
            Value::Object(o) => {
                let mut keys: Vec<&String> = o.keys().collect();
                keys.sort();
                let mut out = Map::new();
                for k in keys {
                    out.insert(k.clone(), sort(&o[k]));
                }
                Value::Object(out)
            }
            Value::Array(a) => Value::Array(a.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    let mut s = serde_json::to_string_pretty(&sort(v)).expect("serialisable");
    s.push('\n');
    s
}
