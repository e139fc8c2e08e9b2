use std::f64::consts::PI;

use aepinn::baselines::{build_baseline, Variant};
use aepinn::diffengine::{Activation, Graph, Jet, JetLayout, JetOrder};
use aepinn::geometry::LevelSet;
use aepinn::networks::{
    evaluate_batch, AeArch, AePinn, Batch, Checkpoint, Fcn, FcnArch, FieldModel, IaArch, IaNet,
    ModelArch, Transmitter,
};
use aepinn::sampling::{seeded_rng, INIT_STREAM};
use proptest::prelude::*;

fn plane_1d() -> LevelSet {
    LevelSet::Plane {
        normal: vec![1.0],
        offset: 0.0,
    }
}

fn ia(
    width: usize,
    modules: usize,
    activation: Activation,
    level_set: LevelSet,
    dim: usize,
) -> IaArch {
    IaArch {
        input_dim: dim,
        width,
        modules,
        activation,
        level_set,
    }
}

#[test]
fn zero_fcn_is_zero() {
    let net = Fcn::new(FcnArch::uniform(2, 3, 5, Activation::Tanh), 0);
    let params = vec![0.0; net.num_params()];
    assert_eq!(net.forward(&params, &[0.3, -2.0]).unwrap(), 0.0);
}

#[test]
fn single_affine_layer() {
    let net = Fcn::new(FcnArch::uniform(1, 0, 0, Activation::Tanh), 0);
    assert_eq!(net.num_params(), 2);
    assert_eq!(net.forward(&[2.0, 1.0], &[3.0]).unwrap(), 7.0);
}

#[test]
fn odd_symmetric_hidden_layer_cancels() {
    let net = Fcn::new(FcnArch::uniform(1, 1, 2, Activation::Tanh), 0);
    // W1 = [[1], [-1]], b1 = 0, W2 = [[1, 1]], b2 = 0
    let params = [1.0, -1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
    let y = net.forward(&params, &[0.5]).unwrap();
    assert_eq!(y, 0.5f64.tanh() + (-0.5f64).tanh());
    assert!(y.abs() < 1e-16);
}

#[test]
fn fcn_rejects_wrong_dimension() {
    let net = Fcn::new(FcnArch::uniform(2, 1, 3, Activation::Tanh), 0);
    let params = vec![0.0; net.num_params()];
    assert!(net.forward(&params, &[1.0]).is_err());
}

#[test]
fn transmitter_examples() {
    let t = Transmitter {
        width: 2,
        activation: Activation::Tanh,
        offset: 0,
    };
    assert_eq!(t.forward(&[0.0; 4], 1.7), vec![0.0, 0.0]);
    // phi = 0 leaves sigma(b)
    let out = t.forward(&[3.0, -1.0, 0.2, 0.4], 0.0);
    assert_eq!(out, vec![0.2f64.tanh(), 0.4f64.tanh()]);

    let t = Transmitter {
        width: 2,
        activation: Activation::Sin,
        offset: 0,
    };
    let out = t.forward(&[1.0, 2.0, 0.0, 0.0], PI / 2.0);
    assert!((out[0] - 1.0).abs() < 1e-15);
    assert!(out[1].abs() < 1e-15);
}

#[test]
fn ia_hand_evaluation_with_linear_activation() {
    let net = IaNet::new(ia(1, 1, Activation::Linear, plane_1d(), 1), 0);
    let params = [
        1.0, 0.0, // lift
        1.0, 0.0, // transmitter
        1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, // Q, K, V, Z maps
        1.0, 0.0, // head
    ];
    assert_eq!(net.num_params(), params.len());
    // H0 = 2, Q = K = V = 2, Z = 8, T = 2, H1 = (1 - 8) 2 + 8 * 2 = 2
    assert_eq!(net.forward(&params, &[2.0]).unwrap(), 2.0);
}

#[test]
fn ia_zero_head_returns_head_bias() {
    let net = IaNet::new(ia(4, 2, Activation::Sin, plane_1d(), 1), 0);
    let mut params: Vec<f64> = (0..net.num_params())
        .map(|i| (i as f64 * 0.37).sin())
        .collect();
    let n = params.len();
    params[n - 5..n - 1].fill(0.0);
    params[n - 1] = 0.625;
    for x in [-1.0, 0.0, 0.4, 3.0] {
        assert_eq!(net.forward(&params, &[x]).unwrap(), 0.625);
    }
}

#[test]
fn saturated_gate_reduces_to_lift_and_head() {
    let m = 3;
    let net = IaNet::new(ia(m, 1, Activation::Sigmoid, plane_1d(), 1), 0);
    let mut params: Vec<f64> = (0..net.num_params())
        .map(|i| 0.3 * (i as f64 * 1.3).cos())
        .collect();
    // Z bias sits just before the head block.
    let head = params.len() - (m + 1);
    let z_bias = head - m;
    let z_weight = z_bias - m * m;
    params[z_weight..z_bias].fill(0.0);
    params[z_bias..head].fill(40.0);

    let x = 0.7;
    let lift: Vec<f64> = (0..m)
        .map(|j| 1.0 / (1.0 + (-(params[j] * x + params[m + j])).exp()))
        .collect();
    let expected = params[head + m] + (0..m).map(|j| params[head + j] * lift[j]).sum::<f64>();
    let got = net.forward(&params, &[x]).unwrap();
    assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
}

#[test]
fn parameter_counts_follow_closed_form() {
    for (d, m, modules) in [(1, 8, 1), (2, 16, 2), (2, 48, 2), (3, 32, 2), (3, 16, 1)] {
        let arch = ia(m, modules, Activation::Cos, plane_1d(), d);
        let closed = m * (d + 1) + 4 * modules * m * (m + 1) + 2 * m + (m + 1);
        assert_eq!(arch.num_params(), closed);
    }
    // 3 x 8 tanh in 1D: 16 + 72 + 72 + 9
    assert_eq!(
        FcnArch::uniform(1, 3, 8, Activation::Tanh).num_params(),
        169
    );
}

#[test]
fn composite_with_silent_attention_is_the_continuous_net() {
    let arch = AeArch {
        continuous: FcnArch::uniform(1, 2, 5, Activation::Tanh),
        attention: vec![
            ia(3, 1, Activation::Sin, plane_1d(), 1),
            ia(3, 1, Activation::Cos, plane_1d(), 1),
        ],
    };
    let model = AePinn::new(arch).unwrap();
    let mut params = vec![0.0; model.num_params()];
    let fcn = model.continuous();
    for (i, p) in params[..fcn.num_params()].iter_mut().enumerate() {
        *p = (i as f64 * 0.71).sin();
    }
    for x in [0.1, 0.5, 0.9] {
        let mu = fcn.forward(&params, &[x]).unwrap();
        assert_eq!(model.value(&params, &[x], 0).unwrap(), mu);
        assert_eq!(model.value(&params, &[x], 1).unwrap(), mu);
    }
    // With the continuous part silent, each branch is its attention network.
    let mut rng = seeded_rng(7, INIT_STREAM);
    let mut params = model.arch().init_params(&mut rng).unwrap();
    params[..fcn.num_params()].fill(0.0);
    let ia0 = &model.attention()[0];
    assert_eq!(
        model.value(&params, &[0.2], 0).unwrap(),
        ia0.forward(&params, &[0.2]).unwrap()
    );
}

fn two_sphere_arch(activation: Activation) -> AeArch {
    let circle = LevelSet::Sphere {
        center: vec![0.1, -0.2],
        radius: 0.5,
    };
    AeArch {
        continuous: FcnArch::uniform(2, 2, 4, Activation::Tanh),
        attention: vec![
            ia(3, 2, activation, circle.clone(), 2),
            ia(2, 1, Activation::Sin, circle, 2),
        ],
    }
}

fn all_archs() -> Vec<ModelArch> {
    let rows = vec![
        FcnArch::uniform(2, 2, 4, Activation::Sin),
        FcnArch::uniform(2, 2, 3, Activation::Cos),
    ];
    let mut out = vec![ModelArch::Ae(two_sphere_arch(Activation::Sigmoid))];
    for v in Variant::ALL {
        out.push(build_baseline(v, &rows, 2).unwrap().arch());
    }
    out
}

#[test]
fn tape_matches_scalar_jets() {
    let pts = [0.3, -0.1, -0.7, 0.45, 0.05, 0.9];
    for arch in all_archs() {
        let model = arch.build().unwrap();
        let params = arch.init_params(&mut seeded_rng(11, INIT_STREAM)).unwrap();
        for sub in 0..2 {
            let mut g = Graph::new(&params);
            let batch = Batch::new(&mut g, &pts, JetLayout::new(2, JetOrder::Hessian));
            let out = model.record(&mut g, &batch, sub);
            for (i, tj) in g.jets(out).iter().enumerate() {
                let sj = model.jet(&params, &pts[2 * i..2 * i + 2], sub).unwrap();
                assert!((tj.v - sj.v).abs() < 1e-13);
                for k in 0..2 {
                    assert!((tj.g[k] - sj.g[k]).abs() < 1e-12);
                }
                for (a, b) in [(0, 0), (0, 1), (1, 1)] {
                    assert!(
                        (tj.hess(a, b) - sj.hess(a, b)).abs() < 1e-11,
                        "{}",
                        arch.method()
                    );
                }
            }
            let values = evaluate_batch(model.as_ref(), &params, &pts, sub);
            for (i, v) in values.iter().enumerate() {
                let s = model.value(&params, &pts[2 * i..2 * i + 2], sub).unwrap();
                assert!((v - s).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn scalar_jets_match_finite_differences() {
    let h = 1e-4;
    let x = [0.21, -0.33];
    for arch in all_archs() {
        let model = arch.build().unwrap();
        let params = arch.init_params(&mut seeded_rng(3, INIT_STREAM)).unwrap();
        let f = |p: [f64; 2]| model.value(&params, &p, 1).unwrap();
        let j: Jet = model.jet(&params, &x, 1).unwrap();
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let fd = (f(xp) - f(xm)) / (2.0 * h);
            assert!((fd - j.g[a]).abs() < 1e-7, "{} grad {a}", arch.method());
            let fd2 = (f(xp) - 2.0 * f(x) + f(xm)) / (h * h);
            assert!(
                (fd2 - j.hess(a, a)).abs() < 1e-5,
                "{} hess {a}",
                arch.method()
            );
        }
    }
}

#[test]
fn init_is_deterministic_and_bounded() {
    let arch = ModelArch::Pinn {
        net: FcnArch::uniform(1, 3, 8, Activation::Tanh),
    };
    let a = arch
        .init_params(&mut seeded_rng(1234, INIT_STREAM))
        .unwrap();
    let b = arch
        .init_params(&mut seeded_rng(1234, INIT_STREAM))
        .unwrap();
    assert_eq!(a, b);
    let c = arch
        .init_params(&mut seeded_rng(1235, INIT_STREAM))
        .unwrap();
    assert_ne!(a, c);

    // Layer blocks: (8x1, 8), (8x8, 8), (8x8, 8), (1x8, 1)
    let layers = [(1, 8), (8, 8), (8, 8), (8, 1)];
    let mut off = 0;
    let mut weights = Vec::new();
    for (fan_in, fan_out) in layers {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = &a[off..off + fan_in * fan_out];
        assert!(w.iter().all(|v| v.abs() <= bound));
        assert!(a[off + fan_in * fan_out..off + fan_in * fan_out + fan_out]
            .iter()
            .all(|&v| v == 0.0));
        weights.extend_from_slice(w);
        off += fan_in * fan_out + fan_out;
    }
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    assert!(mean.abs() < 0.1, "mean {mean}");
}

#[test]
fn checkpoint_round_trips_bit_exactly() {
    let arch = ModelArch::Ae(two_sphere_arch(Activation::Cos));
    let params = arch.init_params(&mut seeded_rng(5, INIT_STREAM)).unwrap();
    let ck = Checkpoint::new(arch.clone(), 5, 42, params.clone()).unwrap();
    let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
    assert_eq!(back.arch, arch);
    assert_eq!(back.iterations, 42);
    assert!(back
        .params
        .iter()
        .zip(&params)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(Checkpoint::new(arch, 5, 0, vec![0.0; 3]).is_err());
}

#[test]
fn ipinn_shares_one_parameter_set() {
    let rows = vec![
        FcnArch::uniform(1, 3, 8, Activation::Sin),
        FcnArch::uniform(1, 3, 8, Activation::Cos),
    ];
    let one = FcnArch::uniform(1, 3, 8, Activation::Tanh).num_params();
    let ip = build_baseline(Variant::Ipinn, &rows, 2).unwrap();
    let mp = build_baseline(Variant::Mpinn, &rows, 2).unwrap();
    let pinn = build_baseline(Variant::Pinn, &rows[..1], 2).unwrap();
    assert_eq!(ip.num_params(), one);
    assert_eq!(mp.num_params(), 2 * one);
    assert_eq!(pinn.num_params(), one);
    assert!(build_baseline(Variant::Mpinn, &rows[..1], 2).is_err());

    let params = ip
        .arch()
        .init_params(&mut seeded_rng(1, INIT_STREAM))
        .unwrap();
    let (a, b) = (
        ip.value(&params, &[0.4], 0).unwrap(),
        ip.value(&params, &[0.4], 1).unwrap(),
    );
    assert_ne!(a, b);
    let params = pinn
        .arch()
        .init_params(&mut seeded_rng(1, INIT_STREAM))
        .unwrap();
    assert_eq!(
        pinn.value(&params, &[0.4], 0).unwrap(),
        pinn.value(&params, &[0.4], 1).unwrap()
    );
}

#[test]
fn mpinn_three_d_widths_from_rows() {
    let rows = vec![
        FcnArch::uniform(2, 3, 48, Activation::Cos),
        FcnArch::uniform(2, 3, 48, Activation::Sin),
    ];
    let mp = build_baseline(Variant::Mpinn, &rows, 2).unwrap();
    assert_eq!(mp.num_params(), 2 * (3 * 48 + 2 * 48 * 49 + 49));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // The head picks one component of H1, so the output must lie between
    // that component of T and of H0 whenever the gate is a sigmoid.
    #[test]
    fn gate_interpolates_between_transmitter_and_state(
        seed in any::<u64>(),
        comp in 0usize..4,
        xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 100),
    ) {
        let m = 4;
        let ls = LevelSet::Sphere { center: vec![0.0, 0.0], radius: 0.5 };
        let net = IaNet::new(ia(m, 1, Activation::Sigmoid, ls.clone(), 2), 0);
        let mut rng = seeded_rng(seed, INIT_STREAM);
        let mut params = vec![0.0; net.num_params()];
        net.init(&mut params, &mut rng);
        for p in params.iter_mut() {
            *p *= 3.0;
        }
        let head = params.len() - (m + 1);
        params[head..].fill(0.0);
        params[head + comp] = 1.0;
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        for (x, y) in xs {
            let phi = ls.value(&[x, y]);
            let t = sig(params[3 * m + comp] * phi + params[4 * m + comp]);
            let h0 = sig(params[2 * comp] * x + params[2 * comp + 1] * y + params[2 * m + comp]);
            let out = net.forward(&params, &[x, y]).unwrap();
            prop_assert!(out >= t.min(h0) - 1e-12 && out <= t.max(h0) + 1e-12);
        }
    }

    #[test]
    fn equal_level_set_values_give_equal_embeddings(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let ls = LevelSet::Sphere { center: vec![0.0, 0.0], radius: 0.5 };
        let t = Transmitter { width: 5, activation: Activation::Tanh, offset: 0 };
        let params: Vec<f64> = (0..10).map(|i| (i as f64).cos()).collect();
        let (p, q) = (ls.value(&[x, y]), ls.value(&[-x, y]));
        prop_assert_eq!(p, q);
        prop_assert_eq!(t.forward(&params, p), t.forward(&params, q));
    }
}
