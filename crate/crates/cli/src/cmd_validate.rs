//! `uniplan validate`: recompute a plan's costs from its inputs, check every
//! structural invariant, and simulate the schedule to measure the estimate's
//! accuracy. Writes the event trace consumed by `uniplan render`.

use uniplan_core::plan::{revalidate, PlanDocument};
use uniplan_core::Result;

use crate::util;
use crate::ValidateArgs;

pub fn run(args: &ValidateArgs) -> Result<u8> {
    let doc = PlanDocument::from_json(&util::read_text(&args.plan)?)?;
    let model_text = util::read_text(&args.model)?;
    let profile_text = util::read_text(&args.profile)?;

    let outcome = revalidate(&doc, &model_text, &profile_text)?;
    if !outcome.model_digest_matches {
        eprintln!("warning: model file does not match the digest recorded in the plan");
    }
    if !outcome.profile_digest_matches {
        eprintln!("warning: profile file does not match the digest recorded in the plan");
    }

    println!("estimated iteration time: {} ms", util::fmt_ms(outcome.estimate_s));
    println!("simulated makespan:       {} ms", util::fmt_ms(outcome.trace.makespan));
    println!("relative estimation error: {:.2}%", outcome.ree_percent);

    let trace_path = args
        .trace_out
        .clone()
        .unwrap_or_else(|| util::default_trace_path(&args.plan));
    let trace_json =
        serde_json::to_string_pretty(&outcome.trace).expect("event trace serializes") + "\n";
    util::write_text(&trace_path, &trace_json)?;
    println!("event trace written to {}", trace_path.display());

    if outcome.violations.is_empty() {
        println!("plan OK: no violations");
        Ok(util::EXIT_OK)
    } else {
        for v in &outcome.violations {
            println!("violation: {v}");
        }
        println!("plan INVALID: {} violation(s)", outcome.violations.len());
        Ok(util::EXIT_VIOLATIONS)
    }
}
