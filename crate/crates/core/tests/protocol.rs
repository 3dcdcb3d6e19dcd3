use dnesa_core::netproto::{
    decode_frame, encode_frame, frame_payload, Assign, AssignedMember, EvaluatedMember, Message,
    WorkResult,
};
use dnesa_core::{Bounds, Error, OperatorParams, WeightVector};
use proptest::prelude::*;

pub const GOLDEN_ASSIGN: &str = concat!(
    r#"{"bounds":{"lower":[-10.0],"upper":[10.0]},"generation":3,"#,
    r#""members":[{"fitness":1.0625,"genes":[1.25]},{"fitness":3.25,"genes":[-0.5]}],"#,
    r#""operator_params":{"crossover_rate":0.9,"max_generations":10,"mutation_rate":1.0,"tvm_degree":5.0},"#,
    r#""problem_id":"P3","run_id":7,"stream_seed":12345678901234567890,"subpop_id":1,"#,
    r#""type":"assign","weights":[0.5,0.5]}"#
);

fn golden_assign() -> Message {
    Message::Assign(Assign {
        run_id: 7,
        generation: 3,
        subpop_id: 1,
        stream_seed: 12_345_678_901_234_567_890,
        problem_id: "P3".into(),
        operator_params: OperatorParams {
            crossover_rate: 0.9,
            mutation_rate: 1.0,
            tvm_degree: 5.0,
            max_generations: 10,
        },
        weights: WeightVector::new(vec![0.5, 0.5]).unwrap(),
        bounds: Bounds::uniform(1, -10.0, 10.0).unwrap(),
        members: vec![
            AssignedMember {
                genes: vec![1.25],
                fitness: 1.0625,
            },
            AssignedMember {
                genes: vec![-0.5],
                fitness: 3.25,
            },
        ],
    })
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(-0.0),
    ]
}

fn member() -> impl Strategy<Value = EvaluatedMember> {
    (
        prop::collection::vec(finite(), 1..4),
        prop::collection::vec(finite(), 1..4),
        finite(),
    )
        .prop_map(|(genes, objectives, fitness)| EvaluatedMember {
            genes,
            objectives,
            fitness,
        })
}

fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        (any::<u32>(), ".{0,12}").prop_map(|(v, n)| Message::Hello {
            protocol_version: v,
            worker_name: n,
        }),
        ".{0,20}".prop_map(|reason| Message::Shutdown { reason }),
        (
            any::<u64>(),
            any::<u64>(),
            any::<u64>(),
            prop::collection::vec(member(), 0..5),
            any::<u64>(),
            prop::collection::vec(member(), 0..5),
        )
            .prop_map(
                |(run_id, generation, subpop_id, members, evaluations, evaluated)| {
                    Message::Result(WorkResult {
                        run_id,
                        generation,
                        subpop_id,
                        members,
                        evaluations,
                        evaluated,
                    })
                }
            ),
        (
            any::<u64>(),
            any::<u64>(),
            any::<u64>(),
            any::<u64>(),
            "[A-Z0-9/]{1,10}",
            (0.0f64..=1.0, 0.0f64..=1.0, 0.1f64..10.0, any::<u64>()),
            prop::collection::vec(0.01f64..1.0, 1..4),
            prop::collection::vec((finite(), finite()), 1..4),
        )
            .prop_map(
                |(run_id, generation, subpop_id, stream_seed, problem_id, p, w, members)| {
                    let n = members.len();
                    Message::Assign(Assign {
                        run_id,
                        generation,
                        subpop_id,
                        stream_seed,
                        problem_id,
                        operator_params: OperatorParams {
                            crossover_rate: p.0,
                            mutation_rate: p.1,
                            tvm_degree: p.2,
                            max_generations: p.3,
                        },
                        weights: WeightVector::normalized(w).unwrap(),
                        bounds: Bounds::uniform(n, -1.0, 1.0).unwrap(),
                        members: members
                            .into_iter()
                            .map(|(g, f)| AssignedMember {
                                genes: vec![g],
                                fitness: f,
                            })
                            .collect(),
                    })
                }
            ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn frames_round_trip(m in message()) {
        let bytes = encode_frame(&m).unwrap();
        prop_assert_eq!(&bytes[..4], &((bytes.len() - 4) as u32).to_be_bytes());
        let back = decode_frame(&mut &bytes[..]).unwrap();
        prop_assert_eq!(&back, &m);
        // Bitwise, including the sign of zero.
        prop_assert_eq!(encode_frame(&back).unwrap(), bytes);
    }

    #[test]
    fn encoding_is_injective(a in message(), b in message()) {
        let (ea, eb) = (encode_frame(&a).unwrap(), encode_frame(&b).unwrap());
        if a == b {
            prop_assert_eq!(ea, eb);
        } else {
            prop_assert_ne!(ea, eb);
        }
    }
}

#[test]
fn golden_assign_frame() {
    let bytes = encode_frame(&golden_assign()).unwrap();
    assert_eq!(&bytes[..4], &[0x00, 0x00, 0x01, 0x5d]);
    assert_eq!(GOLDEN_ASSIGN.len(), 0x15d);
    assert_eq!(std::str::from_utf8(&bytes[4..]).unwrap(), GOLDEN_ASSIGN);
    let decoded = decode_frame(&mut &bytes[..]).unwrap();
    assert_eq!(decoded, golden_assign());
}

#[test]
fn consecutive_frames_decode_in_order() {
    let a = Message::Shutdown { reason: "a".into() };
    let b = golden_assign();
    let mut stream = encode_frame(&a).unwrap();
    stream.extend(encode_frame(&b).unwrap());
    let mut r = &stream[..];
    assert_eq!(decode_frame(&mut r).unwrap(), a);
    assert_eq!(decode_frame(&mut r).unwrap(), b);
    assert!(matches!(decode_frame(&mut r), Err(Error::Connection(_))));
}

#[test]
fn assign_missing_field_is_rejected() {
    let broken = GOLDEN_ASSIGN.replace(r#""run_id":7,"#, "");
    let frame = frame_payload(broken.as_bytes()).unwrap();
    assert!(matches!(
        decode_frame(&mut &frame[..]),
        Err(Error::Protocol(_))
    ));
}

#[test]
fn assign_extra_field_is_rejected() {
    let extended = GOLDEN_ASSIGN.replace(r#""run_id":7,"#, r#""run_id":7,"priority":1,"#);
    let frame = frame_payload(extended.as_bytes()).unwrap();
    assert!(matches!(
        decode_frame(&mut &frame[..]),
        Err(Error::Protocol(_))
    ));
}
