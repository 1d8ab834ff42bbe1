//! Primitive positive formulas: evaluation, incidence structure, simplified
//! forms, the surgery step and comb formulas.

mod analysis;
mod comb;
mod eval;
mod formula;
mod simplify;
mod surgery;

pub use analysis::{analyze_formula, branch, neigh, FormulaReport};
pub use formula::{Atom, PPFormula};
pub use simplify::{is_simplified, simplified_violations, Rewritten, DERIVED_PREFIX};
pub use surgery::{apply_choices, block_property, choose_blocks, BlockChoice, SurgeryChoice, SurgeryOutcome};
pub use comb::{comb_bound_holds, comb_pair, CombExtraction, CombFormula, CombReport, PairReport, SectionSource};
