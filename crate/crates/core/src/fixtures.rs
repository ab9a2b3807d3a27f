//! Hand-built models used throughout the tests, the CLI demos and the experiments.

use num_traits::Signed;

use crate::error::Result;
use crate::rational::{ratio, Rational};
use crate::scm::{CausalDag, DiscreteScm, ExactDistribution, FiniteDomain, NoiseSpec, Variable};

/// Binary graph `Z -> Y`.
pub fn zy_graph() -> CausalDag {
    CausalDag::new(vec![Variable::binary("Z"), Variable::binary("Y")], &[("Z", "Y")]).expect("static graph")
}

/// Binary chain `Z -> X -> Y`.
pub fn chain_graph() -> CausalDag {
    CausalDag::new(
        vec![Variable::binary("Z"), Variable::binary("X"), Variable::binary("Y")],
        &[("Z", "X"), ("X", "Y")],
    )
    .expect("static graph")
}

/// `Z ~ Ber(1/2)`, `U ~ Ber(1/2)`, `Y := Z xor U`.
///
/// Y is independent of Z and distributionally invariant given nothing, yet
/// `Y(0) != Y(1)` for every noise draw.
pub fn xor_model() -> DiscreteScm {
    DiscreteScm::from_fn(zy_graph(), vec![NoiseSpec::uniform(2), NoiseSpec::uniform(2)], |v, pa, n| {
        if v == 0 {
            n
        } else {
            pa[0] ^ n
        }
    })
    .expect("static model")
}

/// `Z = N_Z`, `X = 2·[Z = 1] + N_X`, `Y = [X even] + N_Y`, all noises Ber(1/2).
///
/// `X` takes values 0..=3 and `Y` takes values 0..=2. Y is almost surely invariant in Z
/// even though the edge `Z -> X` is active.
pub fn mod2_model() -> DiscreteScm {
    let dag = CausalDag::new(
        vec![
            Variable::binary("Z"),
            Variable::new("X", FiniteDomain::range(4)).expect("name"),
            Variable::new("Y", FiniteDomain::range(3)).expect("name"),
        ],
        &[("Z", "X"), ("X", "Y")],
    )
    .expect("static graph");
    DiscreteScm::from_fn(dag, vec![NoiseSpec::uniform(2); 3], |v, pa, n| match v {
        0 => n,
        1 => 2 * usize::from(pa[0] == 1) + n,
        _ => usize::from(pa[0] % 2 == 0) + n,
    })
    .expect("static model")
}

/// The four binary response functions in the order `0, 1, z, 1 - z`.
pub const LISTED_RESPONSES: [[usize; 2]; 4] = [[0, 0], [1, 1], [0, 1], [1, 0]];

/// Canonical index (base-2 positional, `f(0)` least significant) of each function in
/// [`LISTED_RESPONSES`].
pub const LISTED_TO_CANONICAL: [u64; 4] = [0, 3, 2, 1];

/// `Z -> Y` with `P(Z = 1) = z_one` and the response distribution `weights` over
/// [`LISTED_RESPONSES`].
pub fn response_model(z_one: Rational, weights: [Rational; 4]) -> Result<DiscreteScm> {
    let z_zero = ratio(1, 1) - &z_one;
    DiscreteScm::from_fn(
        zy_graph(),
        vec![NoiseSpec::new(vec![z_zero, z_one]), NoiseSpec::new(weights.to_vec())],
        |v, pa, n| if v == 0 { n } else { LISTED_RESPONSES[n][pa[0]] },
    )
}

/// The line of response distributions consistent with `P(Y=0|Z=0) = p00`,
/// `P(Y=0|Z=1) = p01`, in listed order.
pub fn lambda_line(p00: &Rational, p01: &Rational, lambda: &Rational) -> [Rational; 4] {
    let one = ratio(1, 1);
    [
        lambda.clone(),
        &one - p00 - p01 + lambda,
        p00 - lambda,
        p01 - lambda,
    ]
}

/// Observed law of `(Z, Y)` with `P(Z=1) = z_one`, `P(Y=0|Z=0) = p00`, `P(Y=0|Z=1) = p01`.
pub fn zy_observation(z_one: &Rational, p00: &Rational, p01: &Rational) -> Result<ExactDistribution> {
    let one = ratio(1, 1);
    let z_zero = &one - z_one;
    let entries = vec![
        (vec![0, 0], &z_zero * p00),
        (vec![0, 1], &z_zero * (&one - p00)),
        (vec![1, 0], z_one * p01),
        (vec![1, 1], z_one * (&one - p01)),
    ];
    let graph = zy_graph();
    ExactDistribution::new(graph.variables().to_vec(), entries.into_iter().filter(|(_, p)| p.is_positive()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_matches_digit_encoding() {
        for (listed, f) in LISTED_RESPONSES.iter().enumerate() {
            let idx = LISTED_TO_CANONICAL[listed];
            assert_eq!(idx, (f[0] + 2 * f[1]) as u64);
        }
    }

    #[test]
    fn lambda_line_reproduces_conditionals() {
        let (p00, p01) = (ratio(3, 5), ratio(3, 10));
        let a = lambda_line(&p00, &p01, &ratio(1, 10));
        // P(Y=0|Z=0) collects f with f(0)=0: indices 0 and 2.
        assert_eq!(&a[0] + &a[2], p00);
        assert_eq!(&a[0] + &a[3], p01);
    }
}
