// All four anchor modes under extreme label skew (alpha = 0.01).

use fedcmc::harness::{compare_modes, ExperimentConfig};
use fedcmc::SelectionMode;

pub fn run_example() -> fedcmc::Result<()> {
    let cfg = ExperimentConfig {
        alpha: 0.01,
        ..ExperimentConfig::default()
    };
    let cmp = compare_modes(&cfg, &SelectionMode::ALL, &[42, 43, 44], None, false)?;
    for mode in SelectionMode::ALL {
        let per_seed: Vec<String> = cmp
            .runs_for(mode)
            .map(|r| format!("{:.4}", r.final_eval.macro_f1))
            .collect();
        println!(
            "{mode:<7} mean macro-F1 {:.4}  per seed [{}]",
            cmp.mean_macro_f1(mode),
            per_seed.join(", ")
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("ablation failed");
}
