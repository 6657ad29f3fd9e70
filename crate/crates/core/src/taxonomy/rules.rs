//! Data-driven consistency rules.
//!
//! A rule fires when its `when` predicate holds and its `require` predicate
//! does not. Rules scoped `per_region` are evaluated once per region, with
//! regional attributes bound to that region.

use serde::{Deserialize, Serialize};

use super::{LabelVector, Scope, Taxonomy, TaxonomyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleScope {
    Global,
    PerRegion,
}

/// Predicate over the slots of a single annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    /// The attribute's value is one of `values`.
    Is {
        attribute: String,
        values: Vec<String>,
    },
    Not(Box<Predicate>),
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
    Iff(Box<Predicate>, Box<Predicate>),
    EveryRegion(Box<Predicate>),
    AnyRegion(Box<Predicate>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDocument {
    pub id: String,
    pub scope: RuleScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<Predicate>,
    pub require: Predicate,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: String,
    /// Slots the requirement inspects, as `global/<attr>`, `<region>/<attr>`
    /// or `*/<attr>` for quantified regional attributes.
    pub slots: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AttrRef {
    Global(usize),
    Regional(usize),
}

#[derive(Debug, Clone)]
enum Cond {
    Is { attr: AttrRef, mask: u64 },
    Not(Box<Cond>),
    All(Vec<Cond>),
    Any(Vec<Cond>),
    Iff(Box<Cond>, Box<Cond>),
    EveryRegion(Box<Cond>),
    AnyRegion(Box<Cond>),
}

#[derive(Debug, Clone)]
pub struct ConsistencyRule {
    pub id: String,
    pub scope: RuleScope,
    pub message: String,
    when: Option<Cond>,
    require: Cond,
}

struct Compiler<'a> {
    tax: &'a Taxonomy,
    rule: &'a str,
}

impl Compiler<'_> {
    fn compile(&self, p: &Predicate, in_region: bool) -> Result<Cond, TaxonomyError> {
        Ok(match p {
            Predicate::Is { attribute, values } => {
                let def = self.tax.attribute(attribute).ok_or_else(|| {
                    TaxonomyError::UnknownRuleAttribute {
                        rule: self.rule.to_string(),
                        attribute: attribute.clone(),
                    }
                })?;
                let attr = match def.scope {
                    Scope::Global => AttrRef::Global(self.tax.global_index(attribute).unwrap()),
                    Scope::Regional if in_region => {
                        AttrRef::Regional(self.tax.regional_index(attribute).unwrap())
                    }
                    Scope::Regional => {
                        return Err(TaxonomyError::RegionalOutsideRegion {
                            rule: self.rule.to_string(),
                            attribute: attribute.clone(),
                        })
                    }
                };
                let mut mask = 0u64;
                for v in values {
                    let i = def
                        .value_index(v)
                        .ok_or_else(|| TaxonomyError::UnknownRuleValue {
                            rule: self.rule.to_string(),
                            attribute: attribute.clone(),
                            value: v.clone(),
                        })?;
                    mask |= 1 << i;
                }
                Cond::Is { attr, mask }
            }
            Predicate::Not(inner) => Cond::Not(Box::new(self.compile(inner, in_region)?)),
            Predicate::All(ps) => Cond::All(
                ps.iter()
                    .map(|p| self.compile(p, in_region))
                    .collect::<Result<_, _>>()?,
            ),
            Predicate::Any(ps) => Cond::Any(
                ps.iter()
                    .map(|p| self.compile(p, in_region))
                    .collect::<Result<_, _>>()?,
            ),
            Predicate::Iff(a, b) => Cond::Iff(
                Box::new(self.compile(a, in_region)?),
                Box::new(self.compile(b, in_region)?),
            ),
            Predicate::EveryRegion(inner) => Cond::EveryRegion(Box::new(self.compile(inner, true)?)),
            Predicate::AnyRegion(inner) => Cond::AnyRegion(Box::new(self.compile(inner, true)?)),
        })
    }
}

impl Cond {
    fn eval(&self, tax: &Taxonomy, labels: &LabelVector, region: Option<usize>) -> bool {
        match self {
            Cond::Is { attr, mask } => {
                let slot = match *attr {
                    AttrRef::Global(a) => tax.global_slot(a),
                    AttrRef::Regional(a) => {
                        tax.regional_slot(region.expect("region bound at compile time"), a)
                    }
                };
                mask & (1 << labels.get(slot)) != 0
            }
            Cond::Not(inner) => !inner.eval(tax, labels, region),
            Cond::All(cs) => cs.iter().all(|c| c.eval(tax, labels, region)),
            Cond::Any(cs) => cs.iter().any(|c| c.eval(tax, labels, region)),
            Cond::Iff(a, b) => a.eval(tax, labels, region) == b.eval(tax, labels, region),
            Cond::EveryRegion(inner) => {
                (0..tax.regions().len()).all(|r| inner.eval(tax, labels, Some(r)))
            }
            Cond::AnyRegion(inner) => {
                (0..tax.regions().len()).any(|r| inner.eval(tax, labels, Some(r)))
            }
        }
    }

    fn collect_slots(&self, tax: &Taxonomy, region: Option<usize>, out: &mut Vec<String>) {
        match self {
            Cond::Is { attr, .. } => {
                let path = match *attr {
                    AttrRef::Global(a) => format!("global/{}", tax.global_attributes()[a].name),
                    AttrRef::Regional(a) => {
                        let name = &tax.regional_attributes()[a].name;
                        match region {
                            Some(r) => format!("{}/{name}", tax.regions()[r]),
                            None => format!("*/{name}"),
                        }
                    }
                };
                if !out.contains(&path) {
                    out.push(path);
                }
            }
            Cond::Not(inner) => inner.collect_slots(tax, region, out),
            Cond::All(cs) | Cond::Any(cs) => {
                for c in cs {
                    c.collect_slots(tax, region, out);
                }
            }
            Cond::Iff(a, b) => {
                a.collect_slots(tax, region, out);
                b.collect_slots(tax, region, out);
            }
            Cond::EveryRegion(inner) | Cond::AnyRegion(inner) => {
                inner.collect_slots(tax, None, out)
            }
        }
    }
}

impl ConsistencyRule {
    pub(super) fn compile(tax: &Taxonomy, doc: &RuleDocument) -> Result<Self, TaxonomyError> {
        let compiler = Compiler { tax, rule: &doc.id };
        let in_region = doc.scope == RuleScope::PerRegion;
        Ok(Self {
            id: doc.id.clone(),
            scope: doc.scope,
            message: doc.message.clone(),
            when: doc
                .when
                .as_ref()
                .map(|p| compiler.compile(p, in_region))
                .transpose()?,
            require: compiler.compile(&doc.require, in_region)?,
        })
    }

    fn check_at(&self, tax: &Taxonomy, labels: &LabelVector, region: Option<usize>) -> Option<Violation> {
        let applies = self
            .when
            .as_ref()
            .is_none_or(|c| c.eval(tax, labels, region));
        if !applies || self.require.eval(tax, labels, region) {
            return None;
        }
        let mut slots = Vec::new();
        self.require.collect_slots(tax, region, &mut slots);
        Some(Violation {
            rule_id: self.id.clone(),
            slots,
            message: self.message.clone(),
        })
    }

    /// Violations of this rule, one per offending region for per-region rules.
    pub fn check(&self, tax: &Taxonomy, labels: &LabelVector) -> Vec<Violation> {
        match self.scope {
            RuleScope::Global => self.check_at(tax, labels, None).into_iter().collect(),
            RuleScope::PerRegion => (0..tax.regions().len())
                .filter_map(|r| self.check_at(tax, labels, Some(r)))
                .collect(),
        }
    }
}
