//! The economy file format: a JSON document with `goods`, `M`, and `agents`,
//! each agent carrying a valuation combinator tree (tag field `type`) and an
//! endowment object. Rationals are integers or `"n/d"` strings; binary
//! floating point is rejected. Unknown fields fail strict loads; a `money`
//! field on an agent is accepted but flagged, since it never affects
//! quasilinear demand.

use crate::economy::{Agent, Economy};
use crate::num::{parse_rat, rat_to_string, Int, IntVector, Rat};
use crate::valuation::{GoodSpace, Valuation, ValuationSpec};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

#[derive(Debug, Clone, thiserror::Error)]
pub enum FormatError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Schema { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone)]
pub struct LoadedEconomy {
    pub economy: Economy,
    /// Accepted-but-ignored inputs, such as money endowments.
    pub warnings: Vec<String>,
}

pub fn load_economy_str(text: &str, lenient: bool) -> Result<LoadedEconomy, FormatError> {
    let value: Value = serde_json::from_str(text).map_err(|e| FormatError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    economy_from_json(&value, lenient)
}

fn expect_object<'v>(
    value: &'v Value,
    field: &str,
    keys: &[&str],
    lenient: bool,
) -> Result<&'v Map<String, Value>, FormatError> {
    let map = value
        .as_object()
        .ok_or_else(|| schema(field, "expected an object"))?;
    if !lenient {
        for k in map.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(schema(format!("{field}.{k}"), "unknown field (use --lenient to ignore)"));
            }
        }
    }
    Ok(map)
}

fn parse_rational(value: &Value, field: &str) -> Result<Rat, FormatError> {
    match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rat::from_integer(Int::from(i)))
            } else {
                Err(schema(
                    field,
                    "non-integer numbers must be written as strings like \"1/2\"",
                ))
            }
        }
        Value::String(s) => parse_rat(s).map_err(|e| schema(field, e)),
        _ => Err(schema(field, "expected an integer or a rational string")),
    }
}

fn rational_to_json(r: &Rat) -> Value {
    if r.denom().is_one() {
        if let Ok(i) = i64::try_from(r.numer()) {
            return json!(i);
        }
    }
    json!(rat_to_string(r))
}

fn parse_bundle(value: &Value, space: &GoodSpace, field: &str) -> Result<IntVector, FormatError> {
    let map = value
        .as_object()
        .ok_or_else(|| schema(field, "expected an object mapping goods to counts"))?;
    let mut counts = vec![Int::from(0); space.len()];
    for (good, count) in map {
        let idx = space
            .index_of(good)
            .ok_or_else(|| schema(format!("{field}.{good}"), "unknown good"))?;
        let c = count
            .as_i64()
            .ok_or_else(|| schema(format!("{field}.{good}"), "counts must be integers"))?;
        if c < 0 {
            return Err(schema(format!("{field}.{good}"), "counts must be nonnegative"));
        }
        counts[idx] = Int::from(c);
    }
    Ok(IntVector(counts))
}

fn bundle_to_json(space: &GoodSpace, bundle: &IntVector) -> Value {
    let mut map = Map::new();
    for (good, count) in space.goods.iter().zip(&bundle.0) {
        if !count.is_negative() && count.is_one() || count > &Int::from(0) {
            map.insert(
                good.clone(),
                json!(i64::try_from(count).expect("bundle counts are small")),
            );
        }
    }
    Value::Object(map)
}

fn parse_prices(value: &Value, space: &GoodSpace, field: &str) -> Result<Vec<Rat>, FormatError> {
    let map = value
        .as_object()
        .ok_or_else(|| schema(field, "expected an object mapping goods to rationals"))?;
    let mut prices = vec![Rat::from_integer(Int::from(0)); space.len()];
    for (good, price) in map {
        let idx = space
            .index_of(good)
            .ok_or_else(|| schema(format!("{field}.{good}"), "unknown good"))?;
        prices[idx] = parse_rational(price, &format!("{field}.{good}"))?;
    }
    Ok(prices)
}

fn prices_to_json(space: &GoodSpace, prices: &[Rat]) -> Value {
    let mut map = Map::new();
    for (good, p) in space.goods.iter().zip(prices) {
        if !p.numer().is_zero() {
            map.insert(good.clone(), rational_to_json(p));
        }
    }
    Value::Object(map)
}

fn parse_good_list(value: &Value, field: &str) -> Result<Vec<String>, FormatError> {
    let arr = value
        .as_array()
        .ok_or_else(|| schema(field, "expected an array of good names"))?;
    arr.iter()
        .map(|g| {
            g.as_str()
                .map(|s| s.to_string())
                .ok_or_else(|| schema(field, "good names must be strings"))
        })
        .collect()
}

fn parse_cap(map: &Map<String, Value>, field: &str) -> Result<Option<u32>, FormatError> {
    match map.get("cap") {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            let c = v
                .as_u64()
                .ok_or_else(|| schema(format!("{field}.cap"), "cap must be a nonnegative integer"))?;
            Ok(Some(c as u32))
        }
    }
}

pub fn valuation_spec_from_json(
    value: &Value,
    space: &GoodSpace,
    field: &str,
    lenient: bool,
) -> Result<ValuationSpec, FormatError> {
    let map = value
        .as_object()
        .ok_or_else(|| schema(field, "expected a valuation object"))?;
    let tag = map
        .get("type")
        .and_then(|t| t.as_str())
        .ok_or_else(|| schema(format!("{field}.type"), "missing valuation type tag"))?;
    match tag {
        "table" => {
            expect_object(value, field, &["type", "entries"], lenient)?;
            let entries_json = map
                .get("entries")
                .and_then(|e| e.as_array())
                .ok_or_else(|| schema(format!("{field}.entries"), "expected an array"))?;
            let mut entries = BTreeMap::new();
            for (i, entry) in entries_json.iter().enumerate() {
                let efield = format!("{field}.entries[{i}]");
                let emap = expect_object(entry, &efield, &["bundle", "value"], lenient)?;
                let bundle = parse_bundle(
                    emap.get("bundle").ok_or_else(|| schema(&efield, "missing bundle"))?,
                    space,
                    &format!("{efield}.bundle"),
                )?;
                let val = parse_rational(
                    emap.get("value").ok_or_else(|| schema(&efield, "missing value"))?,
                    &format!("{efield}.value"),
                )?;
                entries.insert(bundle, val);
            }
            Ok(ValuationSpec::Table { entries })
        }
        "linear" => {
            expect_object(value, field, &["type", "prices"], lenient)?;
            let prices = parse_prices(
                map.get("prices").ok_or_else(|| schema(field, "missing prices"))?,
                space,
                &format!("{field}.prices"),
            )?;
            Ok(ValuationSpec::Linear { prices })
        }
        "min" | "min_of_sum" => {
            expect_object(value, field, &["type", "scale", "goods", "cap"], lenient)?;
            let scale = parse_rational(
                map.get("scale").ok_or_else(|| schema(field, "missing scale"))?,
                &format!("{field}.scale"),
            )?;
            let goods = parse_good_list(
                map.get("goods").ok_or_else(|| schema(field, "missing goods"))?,
                &format!("{field}.goods"),
            )?;
            let cap = parse_cap(map, field)?;
            Ok(if tag == "min" {
                ValuationSpec::ScaledMin { scale, goods, cap }
            } else {
                ValuationSpec::ScaledMinOfSum { scale, goods, cap }
            })
        }
        "sum" => {
            expect_object(value, field, &["type", "children"], lenient)?;
            let children_json = map
                .get("children")
                .and_then(|c| c.as_array())
                .ok_or_else(|| schema(format!("{field}.children"), "expected an array"))?;
            let children = children_json
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    valuation_spec_from_json(c, space, &format!("{field}.children[{i}]"), lenient)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ValuationSpec::Sum { children })
        }
        "shift" => {
            expect_object(value, field, &["type", "child", "prices"], lenient)?;
            let child = valuation_spec_from_json(
                map.get("child").ok_or_else(|| schema(field, "missing child"))?,
                space,
                &format!("{field}.child"),
                lenient,
            )?;
            let prices = parse_prices(
                map.get("prices").ok_or_else(|| schema(field, "missing prices"))?,
                space,
                &format!("{field}.prices"),
            )?;
            Ok(ValuationSpec::Shift { child: Box::new(child), prices })
        }
        other => Err(schema(
            format!("{field}.type"),
            format!("unknown valuation type {other:?} (expected table, linear, min, min_of_sum, sum, shift)"),
        )),
    }
}

pub fn valuation_spec_to_json(spec: &ValuationSpec, space: &GoodSpace) -> Value {
    match spec {
        ValuationSpec::Table { entries } => json!({
            "type": "table",
            "entries": entries
                .iter()
                .map(|(bundle, value)| json!({
                    "bundle": bundle_to_json(space, bundle),
                    "value": rational_to_json(value),
                }))
                .collect::<Vec<_>>(),
        }),
        ValuationSpec::Linear { prices } => {
            let padded = if prices.is_empty() {
                vec![Rat::from_integer(Int::from(0)); space.len()]
            } else {
                prices.clone()
            };
            json!({"type": "linear", "prices": prices_to_json(space, &padded)})
        }
        ValuationSpec::ScaledMin { scale, goods, cap } => {
            let mut obj = json!({
                "type": "min",
                "scale": rational_to_json(scale),
                "goods": goods,
            });
            if let Some(c) = cap {
                obj["cap"] = json!(c);
            }
            obj
        }
        ValuationSpec::ScaledMinOfSum { scale, goods, cap } => {
            let mut obj = json!({
                "type": "min_of_sum",
                "scale": rational_to_json(scale),
                "goods": goods,
            });
            if let Some(c) = cap {
                obj["cap"] = json!(c);
            }
            obj
        }
        ValuationSpec::Sum { children } => json!({
            "type": "sum",
            "children": children
                .iter()
                .map(|c| valuation_spec_to_json(c, space))
                .collect::<Vec<_>>(),
        }),
        ValuationSpec::Shift { child, prices } => json!({
            "type": "shift",
            "child": valuation_spec_to_json(child, space),
            "prices": prices_to_json(space, prices),
        }),
    }
}

pub fn economy_from_json(value: &Value, lenient: bool) -> Result<LoadedEconomy, FormatError> {
    let map = expect_object(value, "economy", &["goods", "M", "agents"], lenient)?;
    let goods = parse_good_list(
        map.get("goods").ok_or_else(|| schema("economy", "missing goods"))?,
        "economy.goods",
    )?;
    let m = map
        .get("M")
        .and_then(|m| m.as_u64())
        .ok_or_else(|| schema("economy.M", "missing or non-integer unit cap"))?;
    let space = GoodSpace::new(goods, m as u32)
        .map_err(|e| schema("economy", e.to_string()))?;
    let agents_json = map
        .get("agents")
        .and_then(|a| a.as_array())
        .ok_or_else(|| schema("economy.agents", "expected an array"))?;
    let mut agents = Vec::new();
    let mut warnings = Vec::new();
    for (i, agent) in agents_json.iter().enumerate() {
        let afield = format!("economy.agents[{i}]");
        let amap = agent
            .as_object()
            .ok_or_else(|| schema(&afield, "expected an object"))?;
        if !lenient {
            for k in amap.keys() {
                if !["id", "valuation", "endowment", "money"].contains(&k.as_str()) {
                    return Err(schema(
                        format!("{afield}.{k}"),
                        "unknown field (use --lenient to ignore)",
                    ));
                }
            }
        }
        let id = amap
            .get("id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| schema(format!("{afield}.id"), "missing agent id"))?
            .to_string();
        if let Some(money) = amap.get("money") {
            warnings.push(format!(
                "agent {id:?}: money endowment {money} accepted but ignored; it never affects quasilinear demand"
            ));
        }
        let spec = valuation_spec_from_json(
            amap.get("valuation")
                .ok_or_else(|| schema(&afield, "missing valuation"))?,
            &space,
            &format!("{afield}.valuation"),
            lenient,
        )?;
        let valuation = Valuation::new(space.clone(), spec)
            .map_err(|e| schema(format!("{afield}.valuation"), e.to_string()))?;
        let endowment = parse_bundle(
            amap.get("endowment")
                .ok_or_else(|| schema(&afield, "missing endowment"))?,
            &space,
            &format!("{afield}.endowment"),
        )?;
        agents.push(Agent { id, valuation, endowment });
    }
    let economy = Economy::new(space, agents)
        .map_err(|e| schema("economy", e.to_string()))?;
    Ok(LoadedEconomy { economy, warnings })
}

pub fn economy_to_json(e: &Economy) -> Value {
    json!({
        "goods": e.space.goods,
        "M": e.space.max_units,
        "agents": e
            .agents
            .iter()
            .map(|a| json!({
                "id": a.id,
                "valuation": valuation_spec_to_json(a.valuation.spec(), &e.space),
                "endowment": bundle_to_json(&e.space, &a.endowment),
            }))
            .collect::<Vec<_>>(),
    })
}
