//! Chambered invariants of `E(1)_{m,n}` along the fiber line and its basic classes.

use swcalc::kahler::{basic_classes_csv, KahlerChamber, KahlerModel};

fn main() {
    let model = KahlerModel::e1_log(2, 5).unwrap();
    let k = model.canonical().divisibility() as i64;
    println!("E1(2,5), K = {k} t'");
    println!(" a  plus minus zero  wall");
    for a in -1..=k + 1 {
        let l = model.line(a);
        let plus = model.sw_chambered(&l, KahlerChamber::Plus).unwrap().unwrap();
        let minus = model.sw_chambered(&l, KahlerChamber::Minus).unwrap().unwrap();
        let zero = model.sw_zero_chamber(&l).unwrap().unwrap();
        println!("{a:>2} {plus:>5} {minus:>5} {zero:>4}  {}", model.wall_side(&l).unwrap());
    }
    print!("{}", basic_classes_csv(&model, 2).unwrap());

    let sg = model.semigroup().unwrap();
    println!("<2,5>: Frobenius number {}", sg.frobenius_number());
}
