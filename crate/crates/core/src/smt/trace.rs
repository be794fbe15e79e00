//! Counterexample traces from solver models.

use std::collections::BTreeMap;

use super::model::{ModelCtx, SmtModel};
use crate::proof::{CexTrace, TraceStep, VerificationCondition};
use crate::value::Value;

/// Evaluates the VC's state bindings under `model`. Symbols the solver did
/// not assign take their sort default and the affected cells are marked.
/// A VC without recorded states falls back to grouping `name@step`
/// constants of the model.
pub fn extract_trace(model: &SmtModel, vc: &VerificationCondition) -> CexTrace {
    let mut trace = CexTrace { spec: vc.provenance.spec.clone(), arity: vc.provenance.arity, ..CexTrace::default() };
    if vc.states.is_empty() {
        let mut by_step: BTreeMap<u32, BTreeMap<String, Value>> = BTreeMap::new();
        for (sym, v) in &model.consts {
            if let Some((name, step)) = sym.rsplit_once('@') {
                if let Ok(step) = step.parse::<u32>() {
                    by_step.entry(step).or_default().insert(name.to_string(), v.clone());
                }
            }
        }
        let last = by_step.keys().next_back().copied();
        if let Some(last) = last {
            for i in 0..=last {
                trace.steps.push(TraceStep { index: i, values: by_step.remove(&i).unwrap_or_default() });
            }
        }
        return trace;
    }
    for (i, env) in vc.states.iter().enumerate() {
        let mut values = BTreeMap::new();
        for (var, t) in env {
            let ctx = ModelCtx::new(model);
            let v = ctx.eval(t).unwrap_or_else(|_| Value::default_of(&t.sort));
            if !ctx.defaulted.borrow().is_empty() {
                trace.defaulted.insert((i as u32, var.clone()));
            }
            values.insert(var.clone(), v);
        }
        trace.steps.push(TraceStep { index: i as u32, values });
    }
    trace
}
