//! Pitman-type transforms on a finite perturbation of a linear path, and
//! their inverses.

use solitonlab::paths::{Background, PathWindow};
use solitonlab::pitman::{carrier_process, inverse_transform, max_functional, transform, OperatorTag, OperatorVariant};

fn main() -> solitonlab::Result<()> {
    let bg = Background::constant(1.0);
    let path = PathWindow::from_increments(1, &[2.0, -1.0, 1.0, -3.0, 0.5], bg.clone(), bg)?;
    println!("S          = {:?}", path.values());
    for tag in [OperatorTag::MaxAvgPast, OperatorTag::LogSumAvg] {
        let v = OperatorVariant::plain(tag);
        let m = max_functional(&path, v)?;
        let t = transform(&path, v)?;
        let back = inverse_transform(&t, v)?;
        let w = carrier_process(&path, v, None)?;
        println!("{:<10} M = {m:.4?}", tag.name());
        println!("{:<10} T(S) on [{}, {}] = {:.4?}", "", t.lo(), t.hi(), t.values());
        println!("{:<10} carrier = {:.4?}", "", w.values);
        println!("{:<10} inverse recovers S_5 = {}", "", back.value(5));
    }
    Ok(())
}
