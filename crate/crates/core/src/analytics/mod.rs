//! Skill distributions, best-of-N curves and log-curve fits.

mod fit;
mod pass_at_n;
mod skills;

pub use fit::{fit_log_curve, fit_log_points, FitError, LogFit};
pub use pass_at_n::{
    answer_matches, extract_answer, extract_number, load_curve, load_tasks, pass_at_n, write_curve, CurveError,
    EvalError, EvalTask, MatchMode, PassAtNCurve,
};
pub use skills::{skill_report, SkillEntry, SkillReport};
