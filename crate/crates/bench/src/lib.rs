//! Fixtures shared by the criterion benches.

use slk_core::{
    double_well, gaussian_packet, linear_tilt, sine_packet, DiscreteSlkParams, DoubleWellParams, Grid1D, Lattice,
    PotentialField, SinePacket, SlkParams, WaveFunction,
};

/// Toy-model double well on `[-10, 10]` with `n` points and a packet in the
/// upper well.
pub fn double_well_setup(n: usize, beta: f64) -> (WaveFunction, PotentialField, SlkParams) {
    let grid = Grid1D::new(-10.0, 10.0, n).expect("valid grid");
    let v = double_well(&DoubleWellParams::default(), &grid).expect("valid well");
    let psi = gaussian_packet(&grid, 2.25, 0.5).expect("valid packet");
    let p = SlkParams {
        beta,
        dt: 0.005,
        ..SlkParams::default()
    };
    (psi, v, p)
}

/// Tilted chain of `s` sites with the `ε = 17, k = 8` packet.
pub fn tilted_chain_setup(s: usize, beta: f64) -> (WaveFunction, PotentialField, DiscreteSlkParams) {
    let lattice = Lattice::new(s).expect("valid lattice");
    let g0 = 2.0 / s as f64;
    let v = linear_tilt(3.0 * g0, &lattice);
    let psi = sine_packet(&SinePacket { epsilon: 17, k: 8 }, &lattice).expect("valid packet");
    let p = DiscreteSlkParams {
        beta,
        ..DiscreteSlkParams::default()
    };
    (psi, v, p)
}
