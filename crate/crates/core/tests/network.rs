use gdtm::corpus;
use gdtm::engine::Block;
use gdtm::external;
use gdtm::network::{s_init, s_net, train, Construction, Dataset, ExtendedNet, NetConfig, NetworkError, SwitchParams, TrainOptions};

fn demo() -> Dataset {
    Dataset::new(vec![vec![0.5]], vec![vec![0.0, 3.0]], None).unwrap()
}

fn build(construction: Construction) -> ExtendedNet<f64> {
    let cfg = NetConfig {
        construction,
        ..NetConfig::default()
    };
    ExtendedNet::build(&corpus::copy_machine(), &demo(), cfg).unwrap()
}

#[test]
fn external_training_installs_the_labels() {
    let net = build(Construction::External);
    assert_eq!(net.machine_steps(), 385);
    assert_eq!(net.tau, 389);
    let r = train(&net, TrainOptions::default()).unwrap();
    assert_eq!(r.steps, 386);
    assert!(r.steps_match && r.output_matches_direct && r.output_equals_labels);
    assert!(r.z_written_once && r.weight_gradient_zero && r.trace_matches_simulator);
    assert_eq!(r.init_flips, vec![1]);
    assert_eq!(r.net_flips, vec![386]);
    assert_eq!(r.final_output, vec![0.0, 3.0]);
    assert!(r.depth <= 12, "depth {}", r.depth);
}

#[test]
fn internal_training_installs_the_labels() {
    let net = build(Construction::Internal);
    let r = train(&net, TrainOptions::default()).unwrap();
    assert_eq!(r.steps, r.machine_steps + 1);
    assert!(r.output_matches_direct && r.output_equals_labels && r.trace_matches_simulator);
    assert_eq!(r.init_flips, vec![1]);
    assert_eq!(r.net_flips, vec![r.steps]);
}

#[test]
fn network_steps_equal_the_bare_tracer() {
    let net = build(Construction::External);
    let gdtm::network::Branch::External { loss } = &net.branch else { unreachable!() };
    let c0 = net.oracle.configs[0].clone();
    let bare = external::trace(loss, loss.encode(&c0).unwrap(), 1000).unwrap();
    let r = train(
        &net,
        TrainOptions {
            snapshots: true,
            ..TrainOptions::default()
        },
    )
    .unwrap();
    for (k, st) in bare.states.iter().enumerate() {
        let rec = &r.records[k + 1];
        assert_eq!(st.s.as_vertex(), Some(rec.vertex), "step {k}");
        assert_eq!(loss.decode(st).as_ref().ok(), rec.config.as_ref(), "step {k}");
        assert_eq!(bare.losses[k], rec.machine_loss, "step {k}");
    }
}

#[test]
fn first_step_only_reads_the_labels() {
    let net = build(Construction::External);
    let vals = net.graph.eval(&net.feed(&net.initial)).unwrap();
    assert_eq!(vals[net.nodes.output.0], vec![0.0, 0.0]);
    let seed = vec![0.0, -3.0];
    let grads = net.graph.vjp(&vals, &seed, &[Block::T, Block::H, Block::Z]).unwrap();
    assert_eq!(grads[&Block::Z], vec![0.0, -3.0]);
    assert!(grads[&Block::T].iter().chain(&grads[&Block::H]).all(|&x| x == 0.0));
}

#[test]
fn labels_below_epsilon_are_rejected() {
    let err = Dataset::new(vec![vec![1.0]], vec![vec![0.1, 0.1]], Some(1.0)).unwrap_err();
    assert!(matches!(err, NetworkError::LabelsTooSmall { .. }));
}

#[test]
fn switch_reference_values() {
    let p = SwitchParams::from_gap(1.0, 2.0, 4.0).unwrap();
    assert_eq!(s_init(&p, &[1.0, 1.0], &[2.0, 0.0]), vec![1.0, 1.0]);
    assert_eq!(s_net(&p, &[1.0, 2.0], &[0.1, 0.1]), vec![1.0, 2.0]);
}
