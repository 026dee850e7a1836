//! Fixtures shared by the benchmarks.

use ane_core::{Architecture, Network};

/// Network with fixed, well-spread parameters: first-layer lines at evenly
/// spaced angles through `[−0.8, 0.8]`, dense weights from a low-discrepancy
/// sequence in `(−1, 1)`.
pub fn fixture_network(widths: &[usize]) -> Network {
    let arch = Architecture::new(widths.to_vec()).expect("non-empty widths");
    let mut net = Network::zeros(&arch);
    let n1 = widths[0] as f64;
    for (i, (a, b)) in net.first.angles.iter_mut().zip(net.first.biases.iter_mut()).enumerate() {
        *a = std::f64::consts::PI * (i as f64 + 0.5) / n1;
        *b = -0.8 + 1.6 * ((i as f64 * 0.618_034) % 1.0);
    }
    let mut k = 0.0;
    let mut next = || {
        k += 1.0;
        2.0 * ((k * 0.754_877_666) % 1.0) - 1.0
    };
    for l in &mut net.hidden {
        l.weights.iter_mut().for_each(|w| *w = next());
        l.biases.iter_mut().for_each(|b| *b = 0.3 * next());
    }
    net.output.weights.iter_mut().for_each(|w| *w = next());
    net
}
