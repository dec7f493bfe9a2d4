use hedopt::{integrate, objectives, Scenario, TriggerProblem};
use std::time::Instant;
fn main() {
    let base = objectives(&integrate(&Scenario::default()).unwrap());
    println!("baseline {base:?}");
    let p = TriggerProblem::standard();
    for (sd, ld) in [(61.0113, 7.8652), (66.8182, 8.00247), (0.0516, 96.4521), (0.0584, 15.0575)] {
        println!("({sd}, {ld}) -> {:?}", p.evaluate(sd, ld).unwrap());
    }
    let t = Instant::now();
    let n = 500;
    for k in 0..n { p.evaluate(k as f64 * 0.2, 100.0 - k as f64 * 0.2).unwrap(); }
    println!("{:?} per eval", t.elapsed() / n);
}
