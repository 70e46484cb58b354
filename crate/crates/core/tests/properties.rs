//! Property tests for the algebraic invariants of the scalar and graph
//! layers.

use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

use pcurve::graph::{cohomology, exact_sequence_check, CoeffRing, EdgeSpec, Graph, Length};
use pcurve::scalar::{ScalarContext, ValuedScalar};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn scalar_strategy(p: u64, e: u32) -> impl Strategy<Value = ValuedScalar> {
    prop::collection::vec((-40i64..=40, 1i64..=12), e as usize).prop_map(move |coeffs| {
        let ctx = ScalarContext::new(p, e).unwrap();
        ValuedScalar::from_coeffs(ctx, coeffs.into_iter().map(|(n, d)| q(n, d)).collect())
            .unwrap()
    })
}

proptest! {
    #[test]
    fn valuation_is_multiplicative(
        x in scalar_strategy(5, 2),
        y in scalar_strategy(5, 2),
    ) {
        let prod = x.mul(&y).unwrap();
        prop_assert_eq!(prod.valuation(), x.valuation().add(&y.valuation()));
    }

    #[test]
    fn valuation_of_sum_is_ultrametric(
        x in scalar_strategy(3, 2),
        y in scalar_strategy(3, 2),
    ) {
        let sum = x.add(&y).unwrap();
        let min = x.valuation().min(y.valuation());
        prop_assert!(sum.valuation() >= min);
        if x.valuation() != y.valuation() {
            prop_assert_eq!(sum.valuation(), x.valuation().min(y.valuation()));
        }
    }

    #[test]
    fn attaining_index_is_unique(x in scalar_strategy(5, 3)) {
        if let Some((v, idx)) = x.valuation_with_index() {
            let e = BigRational::from_integer(3.into());
            let mut attainers = 0;
            for (i, c) in x.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let ctx_v = pcurve::scalar::rational_valuation(5, c).unwrap();
                let cand = BigRational::from_integer(ctx_v)
                    + BigRational::from_integer(i.into()) / &e;
                if cand == v {
                    attainers += 1;
                    prop_assert_eq!(i, idx);
                }
            }
            prop_assert_eq!(attainers, 1);
        }
    }

    #[test]
    fn invert_is_two_sided(x in scalar_strategy(5, 2)) {
        prop_assume!(!x.is_zero());
        let ctx = *x.ctx();
        let inv = x.invert().unwrap();
        prop_assert_eq!(x.mul(&inv).unwrap(), ctx.one());
        prop_assert_eq!(inv.mul(&x).unwrap(), ctx.one());
    }
}

#[derive(Clone, Debug)]
struct RawEdge {
    tail: usize,
    head: Option<usize>,
    dangling_at_tail: bool,
    zero_plus: bool,
    len: (i64, i64),
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (1usize..=6, prop::collection::vec(
        (0usize..6, prop::option::of(0usize..6), any::<bool>(), any::<bool>(), (1i64..=5, 1i64..=3)),
        0..=10,
    ))
        .prop_map(|(n_vertices, raw)| {
            let vertices: Vec<String> = (0..n_vertices).map(|i| format!("v{i}")).collect();
            let mut specs = Vec::new();
            for (k, (t, h, dangle_tail, zero_plus, (num, den))) in raw.into_iter().enumerate() {
                let edge = RawEdge {
                    tail: t % n_vertices,
                    head: h.map(|x| x % n_vertices),
                    dangling_at_tail: dangle_tail,
                    zero_plus,
                    len: (num, den),
                };
                let id = format!("e{k:02}");
                let spec = match edge.head {
                    Some(head) => EdgeSpec::compact(
                        &id,
                        &format!("v{}", edge.tail),
                        &format!("v{head}"),
                        Length::finite(q(edge.len.0, edge.len.1)).unwrap(),
                    ),
                    None => {
                        let length = if edge.zero_plus {
                            Length::ZeroPlus
                        } else {
                            Length::Infinity
                        };
                        if edge.dangling_at_tail {
                            EdgeSpec::dangler(&id, &format!("v{}", edge.tail), length)
                        } else {
                            EdgeSpec {
                                id,
                                tail: None,
                                head: Some(format!("v{}", edge.tail)),
                                length,
                            }
                        }
                    }
                };
                specs.push(spec);
            }
            Graph::new(vertices, specs).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn five_term_sequence_is_exact(g in graph_strategy()) {
        prop_assert!(exact_sequence_check(&g));
    }

    #[test]
    fn integral_h1_is_torsion_free(g in graph_strategy()) {
        // The Smith form of the boundary operator has unit divisors only.
        let divisors = g.boundary_matrix().smith_divisors();
        prop_assert!(divisors.iter().all(|d| d == &num_bigint::BigInt::from(1)));
    }

    #[test]
    fn coboundary_is_negative_transpose_on_compact_edges(g in graph_strategy()) {
        let cob = g.coboundary_matrix();
        let bt = g.boundary_matrix().transpose();
        for (r, &ei) in g.compact_edges().iter().enumerate() {
            for s in 0..g.vertex_count() {
                prop_assert_eq!(cob.get(s, ei).clone(), -bt.get(s, r).clone());
            }
        }
    }

    #[test]
    fn field_ranks_match_integer_ranks(g in graph_strategy()) {
        // Incidence matrices are totally unimodular, so ranks agree over Q,
        // Z, and Z/n.
        let over_q = cohomology(&g, CoeffRing::RationalField).unwrap();
        for ring in [CoeffRing::IntegerRing, CoeffRing::IntegersMod(4), CoeffRing::IntegersMod(9)] {
            let r = cohomology(&g, ring).unwrap();
            prop_assert_eq!(r.h0_rank, over_q.h0_rank);
            prop_assert_eq!(r.h1_rank, over_q.h1_rank);
            prop_assert_eq!(r.h0c_rank, over_q.h0c_rank);
            prop_assert_eq!(r.h1c_rank, over_q.h1c_rank);
            prop_assert_eq!(r.h1c_dual_rank, over_q.h1c_dual_rank);
        }
    }
}
