// A scenario defined inline, run through the same path as the CLI.

use transmute_lab::scenario::{run, Format, Scenario};

const CONFIG: &str = r#"
name = "inline"
seed = 11
checks = ["eigen", "kernel", "transmute"]

[q1]
family = "zero"

[q2]
family = "constant"
c = 0.5

[grid]
x_max = 8.0
n_x = 512
k_max = 100.0
n_k = 512
"#;

pub fn run_example() -> transmute_lab::Result<()> {
    let s = Scenario::parse(CONFIG)?;
    let dir = std::env::temp_dir().join("transmute-lab-example");
    let report = run(&s, &dir, Format::Csv)?;
    for c in &report.checks {
        println!("{:<5} {:<28} {:.3e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
    }
    println!("{:?}, artifacts in {}", report.verdict, dir.display());
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
