//! JSON interchange formats: labeled tensors (rational entries as "p/q"
//! strings, float entries as numbers), instruments, process tensors with
//! their wire block, and correlations.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use boxworld::inequalities::Correlation;
use boxworld::num::{Rat, Scalar};
use boxworld::operations::{Instrument, OpDims, Party};
use boxworld::process::{ClassTags, ProcessTensor};
use boxworld::tensor::{AxisSpec, LabeledTensor, Role};

use crate::AppError;

/// Scalar backends the CLI can serialize.
pub trait JsonScalar: Scalar + Send + Sync {
    const MODE: &'static str;
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Result<Self, AppError>;
}

impl JsonScalar for Rat {
    const MODE: &'static str = "rational";

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format!("{}/{}", self.numer(), self.denom()))
    }

    fn from_json(v: &serde_json::Value) -> Result<Self, AppError> {
        match v {
            serde_json::Value::String(s) => {
                let (num, den) = match s.split_once('/') {
                    Some((n, d)) => (n, d),
                    None => (s.as_str(), "1"),
                };
                let num = BigInt::from_str(num.trim())
                    .map_err(|e| AppError::format(format!("bad rational {s:?}: {e}")))?;
                let den = BigInt::from_str(den.trim())
                    .map_err(|e| AppError::format(format!("bad rational {s:?}: {e}")))?;
                if den == BigInt::from(0) {
                    return Err(AppError::format(format!("zero denominator in {s:?}")));
                }
                Ok(Rat::new(num, den))
            }
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Rat::from_integer(BigInt::from(i)))
                } else {
                    Err(AppError::format(format!(
                        "rational mode needs integers or \"p/q\" strings, got {n}"
                    )))
                }
            }
            other => Err(AppError::format(format!("expected rational entry, got {other}"))),
        }
    }
}

impl JsonScalar for f64 {
    const MODE: &'static str = "float";

    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self)
    }

    fn from_json(v: &serde_json::Value) -> Result<Self, AppError> {
        match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| AppError::format(format!("bad float {n}"))),
            serde_json::Value::String(s) => {
                // accept "p/q" in float mode too
                if let Some((num, den)) = s.split_once('/') {
                    let num: f64 = num.trim().parse().map_err(|_| AppError::format(format!("bad number {s:?}")))?;
                    let den: f64 = den.trim().parse().map_err(|_| AppError::format(format!("bad number {s:?}")))?;
                    Ok(num / den)
                } else {
                    s.trim().parse().map_err(|_| AppError::format(format!("bad number {s:?}")))
                }
            }
            other => Err(AppError::format(format!("expected numeric entry, got {other}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct AxisDto {
    pub name: String,
    pub cardinality: usize,
    pub role: String,
}

#[derive(Serialize, Deserialize)]
pub struct TensorDto {
    pub axes: Vec<AxisDto>,
    pub data: Vec<serde_json::Value>,
    pub number_mode: String,
}

pub fn tensor_to_dto<T: JsonScalar>(t: &LabeledTensor<T>) -> TensorDto {
    let c = t.canonicalized();
    TensorDto {
        axes: c
            .axes()
            .iter()
            .map(|a| AxisDto {
                name: a.name.clone(),
                cardinality: a.cardinality,
                role: match a.role {
                    Role::Input => "input".into(),
                    Role::Output => "output".into(),
                },
            })
            .collect(),
        data: c.data().iter().map(|v| v.to_json()).collect(),
        number_mode: T::MODE.into(),
    }
}

pub fn tensor_from_dto<T: JsonScalar>(dto: &TensorDto) -> Result<LabeledTensor<T>, AppError> {
    let axes = dto
        .axes
        .iter()
        .map(|a| {
            let role = match a.role.as_str() {
                "input" => Role::Input,
                "output" => Role::Output,
                other => return Err(AppError::format(format!("bad role {other:?}"))),
            };
            Ok(AxisSpec::new(&a.name, a.cardinality, role))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let data = dto
        .data
        .iter()
        .map(T::from_json)
        .collect::<Result<Vec<_>, _>>()?;
    LabeledTensor::new_unchecked(axes, data)
        .map_err(|e| AppError::format(format!("malformed tensor: {e}")))
}

#[derive(Serialize, Deserialize)]
pub struct InstrumentDto {
    pub party: String,
    pub outcome: AxisMeta,
    pub setting: AxisMeta,
    /// keys "a|x"
    pub elements: BTreeMap<String, TensorDto>,
}

#[derive(Serialize, Deserialize)]
pub struct AxisMeta {
    pub name: String,
    pub cardinality: usize,
}

pub fn instrument_to_dto<T: JsonScalar>(inst: &Instrument<T>) -> InstrumentDto {
    let mut elements = BTreeMap::new();
    for a in 0..inst.n_outcomes {
        for x in 0..inst.n_settings {
            elements.insert(format!("{a}|{x}"), tensor_to_dto(inst.element(a, x)));
        }
    }
    InstrumentDto {
        party: match inst.party {
            Party::A => "A".into(),
            Party::B => "B".into(),
        },
        outcome: AxisMeta { name: inst.party.outcome_name().into(), cardinality: inst.n_outcomes },
        setting: AxisMeta { name: inst.party.setting_name().into(), cardinality: inst.n_settings },
        elements,
    }
}

pub fn instrument_from_dto<T: JsonScalar>(dto: &InstrumentDto) -> Result<Instrument<T>, AppError> {
    let party = match dto.party.as_str() {
        "A" => Party::A,
        "B" => Party::B,
        other => return Err(AppError::format(format!("bad party {other:?}"))),
    };
    let na = dto.outcome.cardinality;
    let nx = dto.setting.cardinality;
    if na == 0 || nx == 0 {
        return Err(AppError::format("outcome/setting cardinality must be positive".into()));
    }
    let mut elements = Vec::with_capacity(na * nx);
    let mut dims: Option<OpDims> = None;
    for a in 0..na {
        for x in 0..nx {
            let key = format!("{a}|{x}");
            let dto_t = dto
                .elements
                .get(&key)
                .ok_or_else(|| AppError::format(format!("missing element {key}")))?;
            let t: LabeledTensor<T> = tensor_from_dto(dto_t)?;
            let card = |n: &str| -> Result<usize, AppError> {
                t.cardinality(n)
                    .map_err(|e| AppError::format(format!("element {key}: {e}")))
            };
            let d = OpDims {
                d_in: card(party.wire_in())?,
                d_out_prime: card(party.wire_out_prime())?,
                d_in_prime: card(party.wire_in_prime())?,
                d_out: card(party.wire_out())?,
            };
            match dims {
                None => dims = Some(d),
                Some(prev) if prev == d => {}
                Some(_) => return Err(AppError::format(format!("element {key} has inconsistent wires"))),
            }
            elements.push(t);
        }
    }
    Instrument::new(party, na, nx, dims.unwrap(), elements)
        .map_err(|e| AppError::format(format!("malformed instrument: {e:?}")))
}

#[derive(Serialize, Deserialize)]
pub struct ProcessDto {
    pub tensor: TensorDto,
    pub wires: WiresDto,
    /// advisory only; revalidated on load
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class_tags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
pub struct WiresDto {
    pub alice: PartyWires,
    pub bob: PartyWires,
}

#[derive(Serialize, Deserialize)]
pub struct PartyWires {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

fn tags_to_strings(tags: ClassTags) -> Vec<String> {
    let mut out = Vec::new();
    if tags.process {
        out.push("process".into());
    }
    if tags.nsp {
        out.push("nsp".into());
    }
    if tags.boxworld {
        out.push("boxworld".into());
    }
    if let Some(c) = tags.causal {
        out.push(
            match c {
                boxworld::process::CausalClass::AliceFirst => "a_before_b",
                boxworld::process::CausalClass::BobFirst => "b_before_a",
                boxworld::process::CausalClass::NonSignaling => "nonsignaling",
                boxworld::process::CausalClass::NoneOfOrdered => "none_of_ordered",
            }
            .into(),
        );
    }
    out
}

pub fn process_to_dto<T: JsonScalar>(w: &ProcessTensor<T>) -> ProcessDto {
    ProcessDto {
        tensor: tensor_to_dto(w.tensor()),
        wires: WiresDto {
            alice: PartyWires {
                inputs: vec!["I_A".into(), "O'_A".into()],
                outputs: vec!["I'_A".into(), "O_A".into()],
            },
            bob: PartyWires {
                inputs: vec!["I_B".into(), "O'_B".into()],
                outputs: vec!["I'_B".into(), "O_B".into()],
            },
        },
        class_tags: w.tags().map(tags_to_strings).unwrap_or_default(),
    }
}

pub fn process_from_dto<T: JsonScalar>(dto: &ProcessDto) -> Result<ProcessTensor<T>, AppError> {
    let t = tensor_from_dto(&dto.tensor)?;
    ProcessTensor::new(t).map_err(|e| AppError::format(format!("not a process layout: {e:?}")))
}

pub fn correlation_to_dto<T: JsonScalar>(p: &Correlation<T>) -> TensorDto {
    tensor_to_dto(p.tensor())
}

pub fn correlation_from_dto<T: JsonScalar>(dto: &TensorDto) -> Result<Correlation<T>, AppError> {
    let t = tensor_from_dto(dto)?;
    Correlation::new(t).map_err(|e| AppError::domain(format!("not a correlation: {e:?}")))
}
