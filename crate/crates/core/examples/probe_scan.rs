use latqed::iontrap::*;
use std::f64::consts::TAU;

fn main() {
    let spec = DesignSpec::paper_surface_trap(2);
    let traps = design_frequencies(&spec, None).unwrap();
    let z = equilibrium_positions(&traps).unwrap();
    println!("spacings (um): {:?}", z.windows(2).map(|w| ((w[1]-w[0])*1e6*100.0).round()/100.0).collect::<Vec<_>>());
    let vx = coupling_matrix(&traps, &z, Axis::X).unwrap();
    println!("V_12 = (2pi x {:.4} MHz)^2", vx[(0,1)].sqrt()/TAU/1e6);
    println!("theta_12 = {:.4}", pair_angle(&vx, 0));
    for (l, _) in mode_pairs(traps.len(), Axis::X) {
        print!("th{}{}={:.3} ", l+1, l+2, pair_angle(&vx, l));
    }
    println!();
    let eps2_minus_eps1 = {
        let m = normal_modes(&vx).unwrap();
        (m.freqs[1] - m.freqs[0]) / TAU / 1e3
    };
    println!("mode splitting eps2-eps1 = 2pi x {eps2_minus_eps1:.2} kHz");
    for axis in [Axis::X, Axis::Y] {
        let v = coupling_matrix(&traps, &z, axis).unwrap();
        let modes = normal_modes(&v).unwrap();
        println!("{axis:?}: leakout {:.5}, cross-block {:.5}", leakout(&modes, &v, axis), cross_block_leakage(&modes, 6, axis));
    }
    // blocks 1..10 leakage (paper Fig 4d)
    for blocks in [1usize, 4, 10] {
        let spec = DesignSpec::paper_surface_trap(blocks);
        let traps = design_frequencies(&spec, None).unwrap();
        let z = equilibrium_positions(&traps).unwrap();
        let mut worst: f64 = 0.0;
        for axis in [Axis::X, Axis::Y] {
            let v = coupling_matrix(&traps, &z, axis).unwrap();
            let modes = normal_modes(&v).unwrap();
            worst = worst.max(leakout(&modes, &v, axis));
        }
        println!("blocks={blocks} ({} ions): max leakout {worst:.5}", 6*blocks);
    }
}
