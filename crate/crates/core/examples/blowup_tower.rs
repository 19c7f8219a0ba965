//! Lifting `t_d` through blowups keeps the certified value and `d(s) = −1`.

use swcalc::families::Engine;
use swcalc::torelli::{blowup_lift, build_td};

fn main() {
    let engine = Engine::default();
    for d in [1, 3, 5] {
        let lift = blowup_lift(&build_td(d).unwrap(), 5, &engine).unwrap();
        println!("t_{d} on {}: {}", lift.base.x, lift.base_value.value);
        for step in &lift.steps {
            println!(
                "  {:<28} d = {:>2}  {}  ({})",
                step.x.to_string(),
                step.expected_dimension,
                step.value.value,
                step.value.trace()[0]
            );
        }
    }
}
