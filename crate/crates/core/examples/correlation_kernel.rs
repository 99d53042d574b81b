//! Correlation-point geometry and the off-correlation spectrum shape.

use bocda::fiber::{C_VACUUM, DEFAULT_GROUP_INDEX};
use bocda::forward::{arcsine_lorentzian, arcsine_lorentzian_quadrature, beat_amplitude, correlation_positions};
use bocda::forward::{correlation_spacing, resolution};

pub fn run_example() -> bocda::Result<()> {
    let v_g = C_VACUUM / DEFAULT_GROUP_INDEX;
    let (f_m, delta_f, linewidth) = (699e3, 47e9, 27e6);
    println!("spacing     {:.2} m", correlation_spacing(f_m, v_g));
    println!("resolution  {:.2} cm", 100.0 * resolution(linewidth, v_g, f_m, delta_f));
    println!("points in 500 m: {:?}", correlation_positions(f_m, v_g, 500.0));

    // a few cm away from the correlation point the excursion is already many linewidths
    for dz in [0.0, 0.01, 0.03, 0.1] {
        println!("excursion at {:>4} m: {:>8.1} MHz", dz, beat_amplitude(dz, f_m, delta_f, v_g) / 1e6);
    }

    let gamma = linewidth / 2.0;
    println!("\n  A/gamma   x/gamma   closed      quadrature");
    for ratio in [0.1, 1.0, 10.0] {
        let a = ratio * gamma;
        for x in [0.0, 0.5 * a, a, a + 2.0 * gamma] {
            let c = arcsine_lorentzian(a, x, gamma);
            let q = arcsine_lorentzian_quadrature(a, x, gamma, 4096);
            println!("{ratio:>9} {:>9.2} {c:>10.6} {q:>12.6}", x / gamma);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> bocda::Result<()> {
    run_example()
}
